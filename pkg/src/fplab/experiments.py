"""Statistical checks of the limit laws and the critical-exponent scan.

Each check returns an :class:`ExperimentReport` whose verdict is computed
from its statistics and declared thresholds only; raw samples are kept for
the companion CSV files.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .alternating import sample_random_burns, solve_alternating
from .errors import BurnBeforeAnyGiant, InsufficientEvents, OutOfRange, PreGelTime
from .gillespie import Regime, ensemble_mean, pooled_frozen, run_replicas
from .seeding import make_rng
from .solvers import (
    build_grid,
    solve_control,
    solve_critical,
    solve_subcritical,
    x_star,
)
from .spectrum import SizeSpectrum, borel_log_masses, tail_mass
from .stats import (
    gamma_half_cdf,
    ks_discrete_vs_continuous,
    ks_distance,
    least_squares,
    rayleigh_cdf,
    sb_rayleigh_cdf,
    sb_rayleigh_mean,
)
from .trajectory import SolverConfig
from .transforms import TransformBundle, adaptive_simpson, build_bundle


@dataclass(eq=False)
class ExperimentReport:
    name: str
    params: dict
    stats: dict
    thresholds: dict
    checks: dict
    seeds: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)
    runtime: float = 0.0
    exploratory: bool = False
    notes: list = field(default_factory=list)
    artifact_files: list = field(default_factory=list)

    @property
    def verdict(self) -> bool | None:
        """``None`` for exploratory reports, else all checks passed."""
        if self.exploratory:
            return None
        return all(bool(v) for v in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "stats": _jsonable(self.stats),
            "thresholds": _jsonable(self.thresholds),
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "verdict": self.verdict,
            "exploratory": self.exploratory,
            "seeds": _jsonable(self.seeds),
            "runtime_s": self.runtime,
            "notes": self.notes,
            "artifact_files": self.artifact_files,
        }

    def write(self, out_dir: str) -> list[str]:
        """Write ``<name>.json`` and one ``<name>_<sample>.csv`` per sample set."""
        os.makedirs(out_dir, exist_ok=True)
        files = []
        for key, table in self.samples.items():
            path = os.path.join(out_dir, f"{self.name}_{key}.csv")
            cols = list(table)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for row in zip(*(np.asarray(table[c]).tolist() for c in cols)):
                    w.writerow([repr(v) if isinstance(v, float) else v for v in row])
            files.append(path)
        self.artifact_files = [os.path.basename(f) for f in files]
        path = os.path.join(out_dir, f"{self.name}.json")
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [path, *files]

    def summary(self) -> str:
        v = {True: "PASS", False: "FAIL", None: "INFO"}[self.verdict]
        body = ", ".join(f"{k}={_fmt(val)}" for k, val in self.stats.items()
                         if isinstance(val, (int, float)))
        return f"[{v}] {self.name}: {body}"


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _pool_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def beta_of_alpha(alpha: float) -> float:
    """Conjectured exponent: ``2 alpha`` up to 1/3, ``(alpha + 1)/2`` beyond."""
    return 2 * alpha if alpha <= 1 / 3 else (alpha + 1) / 2


# --------------------------------------------------------------------------
# critical spectra at large K
# --------------------------------------------------------------------------

def critical_spectrum(bundle: TransformBundle, t: float, K: int, h: float = 2e-3) -> SizeSpectrum:
    """``v^crit(t)`` truncated at ``K`` with exact total sol mass.

    The monodisperse unit-mass case uses the Borel closed form; otherwise the
    triangular system is integrated (FFT convolution beyond K = 512).
    """
    if t < bundle.gel_time:
        raise PreGelTime(f"t={t} precedes the gel time {bundle.gel_time}")
    if bundle.is_monodisperse:
        # mass c rescales as c v_k(c t), which leaves Borel_k / t unchanged
        return SizeSpectrum(np.arange(1, K + 1), _borel_over_t(t, K), "truncated",
                            K=int(K), total_mass=1.0 / t)
    cfg = SolverConfig(K=K, h=h, T=t, richardson=False)
    return solve_critical(bundle, cfg).spectrum(t)


def _borel_over_t(t: float, K: int) -> np.ndarray:
    return np.exp(borel_log_masses(np.arange(1, K + 1)) - math.log(t))


# --------------------------------------------------------------------------
# Gamma(1/2, 1) limit of the size-biased subcritical law
# --------------------------------------------------------------------------

def subcritical_control_at(bundle: TransformBundle, lam: float, t: float, h: float = 1e-3) -> float:
    cfg = SolverConfig(K=1, h=h, T=t, schedule=((0.0, lam),), spectra_at=())
    grid = build_grid(t, h)
    w, _, _ = solve_control(bundle, cfg, grid)
    return float(w[-1])


def gamma_limit_check(bundle: TransformBundle, t: float, lambdas: Sequence[float],
                      threshold: float = 0.05, K: int | None = None,
                      K_cap: int = 20_000_000, h: float = 1e-3) -> ExperimentReport:
    """KS distance of ``lam^2/(2 E(0,t)) Y_lam(t)`` to Gamma(1/2, 1).

    ``v^lam(t)`` is the critical spectrum tilted by ``exp(k x*)`` (the rigidity
    identity), so the truncation can follow the size-biased scale
    ``2 E / lam^2``: ``K = max(K, 30 / |x*|)`` capped at ``K_cap``.
    """
    start = time.perf_counter()
    if not t > bundle.gel_time:
        raise OutOfRange("t must exceed the gel time")
    lambdas = [float(x) for x in lambdas]
    if any(not lam > 0 for lam in lambdas):
        raise OutOfRange("all rates must be positive")
    E = bundle.E(t)
    K_min = 50_000 if K is None else int(K)
    rows = {"lambda": [], "K": [], "x_star": [], "wstar": [], "captured_m1": [], "ks": []}
    for lam in lambdas:
        w = subcritical_control_at(bundle, lam, t, h)
        xs = x_star(bundle, t, w)
        Kl = int(min(max(K_min, math.ceil(30.0 / abs(xs))), K_cap))
        crit = critical_spectrum(bundle, t, Kl)
        k = crit.ks.astype(float)
        logw = np.log(k) + np.log(crit.vs) + k * xs
        m1_trunc = float(np.sum(np.exp(logw)))
        p = np.exp(logw - logw.max())
        ks = ks_discrete_vs_continuous(k * lam * lam / (2.0 * E), p, gamma_half_cdf)
        rows["lambda"].append(lam)
        rows["K"].append(Kl)
        rows["x_star"].append(xs)
        rows["wstar"].append(w)
        rows["captured_m1"].append(m1_trunc * w)  # exact m1(t) = 1 / w*(t)
        rows["ks"].append(ks)
    order = np.argsort(lambdas)[::-1]
    ks_sorted = [rows["ks"][i] for i in order]
    checks = {"final_ks_below_threshold": ks_sorted[-1] <= threshold}
    stats = {"ks_final": ks_sorted[-1], "E_crit": E}
    if len(lambdas) > 1:
        checks["ks_decreasing"] = all(b < a for a, b in zip(ks_sorted, ks_sorted[1:]))
    for lam, ksv in zip(rows["lambda"], rows["ks"]):
        stats[f"ks[lambda={lam:g}]"] = ksv
    return ExperimentReport(
        name="gamma_limit",
        params={"t": t, "lambdas": lambdas, "K_min": K_min, "K_cap": K_cap, "h": h},
        stats=stats, thresholds={"ks": threshold}, checks=checks,
        samples={"per_lambda": rows}, runtime=time.perf_counter() - start,
        notes=["v^lambda(t) built as the critical spectrum tilted by exp(k x*); "
               "KS of the lattice law against erf(sqrt(x))"],
    )


# --------------------------------------------------------------------------
# size-biased Rayleigh limit of frozen giant masses
# --------------------------------------------------------------------------

def collect_giant_masses(bundle: TransformBundle, lam: float, t: float, eps: float,
                         n_replicas: int, seed: int, h: float = 1e-3, jobs: int = 1):
    """Burn masses with ``bt`` in ``[t, t + eps]`` for each replica ``(seed, r)``."""
    def one(r):
        bts, ths, _ = sample_random_burns(bundle, lam, t + eps, make_rng(seed, r), h=h)
        sel = (bts >= t) & (bts <= t + eps)
        return ths[sel], bts[sel], np.full(int(sel.sum()), r)

    parts = _pool_map(one, range(n_replicas), jobs)
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]))


def rayleigh_limit_check(bundle: TransformBundle, t: float, lam: float, n_replicas: int,
                         threshold: float = 0.08, eps: float | None = None, seed: int = 0,
                         min_events: int = 2000, h: float = 1e-3, jobs: int = 1,
                         mean_tol: float = 0.05) -> ExperimentReport:
    """Frozen-giant masses near ``t`` against the size-biased Rayleigh law.

    Masses are rescaled by ``(1/2) sqrt(lam / E(0,t))``; the reference is the
    law of the giant containing a uniformly chosen frozen vertex, so the
    empirical CDF weights each burn by its mass.
    """
    start = time.perf_counter()
    if not t > bundle.gel_time:
        raise OutOfRange("t must exceed the gel time")
    eps = lam ** -0.25 if eps is None else float(eps)
    E = bundle.E(t)
    th, bts, reps = collect_giant_masses(bundle, lam, t, eps, n_replicas, seed, h, jobs)
    if th.size < min_events:
        raise InsufficientEvents(f"{th.size} pooled burns < {min_events}; raise n_replicas")
    y = 0.5 * math.sqrt(lam / E) * th
    ks = ks_distance(y, sb_rayleigh_cdf, weights=th)
    ks_plain = ks_distance(y, lambda x: rayleigh_cdf(x, 1 / math.sqrt(2)))
    mean_sb = float(np.sum(y * th) / np.sum(th))
    ref_mean = sb_rayleigh_mean()
    stats = {
        "ks_size_biased": ks,
        "ks_unweighted_vs_rayleigh": ks_plain,
        "n_events": int(th.size),
        "mass_weighted_mean": mean_sb,
        "reference_mean": ref_mean,
        "mean_rel_err": abs(mean_sb / ref_mean - 1),
        "burns_per_window_per_replica": th.size / n_replicas,
        "predicted_burns_per_window": eps * math.sqrt(E * lam / math.pi),
        "eps": eps,
    }
    checks = {"ks_below_threshold": ks <= threshold, "mean_within_tol": stats["mean_rel_err"] <= mean_tol}
    return ExperimentReport(
        name="rayleigh_limit",
        params={"t": t, "lambda": lam, "eps": eps, "n_replicas": n_replicas, "h": h},
        stats=stats, thresholds={"ks": threshold, "mean_rel": mean_tol}, checks=checks,
        seeds=[[seed, r] for r in range(n_replicas)],
        samples={"giants": {"replica": reps, "bt": bts, "theta": th, "rescaled": y}},
        runtime=time.perf_counter() - start,
        notes=[f"eps_lambda = {eps:g} (lambda^-1/4 unless overridden)"],
    )


# --------------------------------------------------------------------------
# extremum property
# --------------------------------------------------------------------------

def critical_integral_quadrature(bundle: TransformBundle, T: float, tol: float = 1e-12) -> float:
    """``int_0^T Phi_crit`` by adaptive Simpson of ``F0`` over ``[gel, T]``."""
    if T <= bundle.gel_time:
        return 0.0
    return adaptive_simpson(bundle.F0, bundle.gel_time, T, tol=tol)


def _random_schedule(rng: np.random.Generator, T: float) -> tuple:
    n = int(rng.integers(0, 5))
    cuts = np.sort(rng.uniform(0, T, n))
    lams = np.exp(rng.uniform(math.log(1e-3), math.log(3.0), n + 1))
    return tuple(zip([0.0, *cuts.tolist()], lams.tolist()))


def _random_burns(rng: np.random.Generator, T: float) -> list[float]:
    n = int(rng.integers(1, 9))
    return sorted(set(rng.uniform(0, T, n).tolist()))


def remark_sharp_control(bundle: TransformBundle, T: float, lam: float, h: float = 1e-3) -> float:
    """``t*`` with ``t* + w*(t*) = T`` for constant rate ``lam``."""
    def edge(ts):
        cfg = SolverConfig(K=1, h=h, T=ts, schedule=((0.0, lam),), spectra_at=())
        w, _, _ = solve_control(bundle, cfg, build_grid(ts, h))
        return ts + w[-1] - T

    lo, hi = 0.0, T
    if edge(hi) <= 0:
        raise OutOfRange("no cut time found")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if edge(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def extremum_check(bundle: TransformBundle, T: float, n_random_controls: int = 200,
                   with_sharpness: bool = True, eps: float = 0.5, seed: int = 0,
                   slack: float = -1e-9, h: float = 1e-3, sharp_lambda: float = 0.5,
                   identity_tol: float = 1e-8) -> ExperimentReport:
    start = time.perf_counter()
    rng = make_rng(seed)
    crit = bundle.G0(T) if T >= bundle.gel_time else 0.0
    crit_q = critical_integral_quadrature(bundle, T)
    sub_rows = {"i": [], "schedule": [], "int_Phi": [], "int_lambda": [], "slack": []}
    alt_rows = {"i": [], "burns": [], "int_Phi": [], "slack": []}
    for i in range(n_random_controls):
        sched = _random_schedule(rng, T)
        cfg = SolverConfig(K=1, h=h, T=T, schedule=sched, spectra_at=())
        tr = solve_subcritical(bundle, cfg)
        lam_int = cfg.integral_lambda()
        sub_rows["i"].append(i)
        sub_rows["schedule"].append(";".join(f"{a:.6g}:{b:.6g}" for a, b in sched))
        sub_rows["int_Phi"].append(tr.int_Phi)
        sub_rows["int_lambda"].append(lam_int)
        sub_rows["slack"].append(crit - (tr.int_Phi - lam_int))
    for i in range(n_random_controls):
        burns = _random_burns(rng, T)
        cfg = SolverConfig(K=1, h=h, T=T, spectra_at=())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BurnBeforeAnyGiant)
            tr, _ = solve_alternating(bundle, burns, cfg)
        alt_rows["i"].append(i)
        alt_rows["burns"].append(";".join(f"{b:.6g}" for b in burns))
        alt_rows["int_Phi"].append(tr.int_Phi)
        alt_rows["slack"].append(crit - tr.int_Phi)
    stats = {
        "int_Phi_crit_closed_form": crit,
        "int_Phi_crit_quadrature": crit_q,
        "closed_form_vs_quadrature": abs(crit - crit_q),
        "min_slack_subcritical": float(min(sub_rows["slack"], default=np.inf)),
        "min_slack_alternating": float(min(alt_rows["slack"], default=np.inf)),
    }
    checks = {
        "subcritical_inequality": stats["min_slack_subcritical"] >= slack,
        "alternating_inequality": stats["min_slack_alternating"] >= slack,
        "critical_integral_identity": stats["closed_form_vs_quadrature"] <= identity_tol,
    }
    if with_sharpness and T > bundle.gel_time:
        t_cut = remark_sharp_control(bundle, T, sharp_lambda, h)
        sched = ((0.0, sharp_lambda), (t_cut, 0.0))
        cfg = SolverConfig(K=1, h=h, T=T, schedule=sched, spectra_at=())
        tr = solve_subcritical(bundle, cfg, allow_zero_rate=True)
        lam_int = cfg.integral_lambda()
        value = tr.int_Phi - (1 - eps) * lam_int
        stats.update({
            "sharp_t_cut": t_cut,
            "sharp_value": value,
            "sharp_margin": value - crit,
            "sharp_equality_gap": tr.int_Phi - lam_int - crit,
            "sharp_final_wstar": float(tr.wstar[-1]),
        })
        checks["sharpness_strict"] = value > crit
    return ExperimentReport(
        name="extremum",
        params={"T": T, "n_random_controls": n_random_controls, "eps": eps, "h": h,
                "sharp_lambda": sharp_lambda},
        stats=stats, thresholds={"slack": slack, "identity": identity_tol}, checks=checks,
        seeds=[seed], samples={"subcritical": sub_rows, "alternating": alt_rows},
        runtime=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# tail law and asymptotic self-similarity
# --------------------------------------------------------------------------

def tail_and_selfsimilarity_check(bundle: TransformBundle, times: Sequence[float], K_big: int,
                                  tail_tol: float = 0.02, selfsim_tol: float = 0.02,
                                  K_selfsim: int = 20, h: float = 1e-3,
                                  tail_times: Sequence[float] | None = None) -> ExperimentReport:
    """Tail ``sqrt(K) sum_{k>=K} v_k`` vs ``sqrt(2E/pi)``; ``t v_k(t)`` vs Borel."""
    start = time.perf_counter()
    times = sorted(float(t) for t in times)
    if not times or times[0] < bundle.gel_time:
        raise PreGelTime("all times must be at or after the gel time")
    tail_times = times if tail_times is None else sorted(tail_times)
    rows = {"t": [], "statistic": [], "target": [], "rel_dev": []}
    for t in tail_times:
        spec = critical_spectrum(bundle, t, K_big)
        stat = math.sqrt(K_big) * tail_mass(spec, K_big)
        target = math.sqrt(2 * bundle.E(t) / math.pi)
        rows["t"].append(t)
        rows["statistic"].append(stat)
        rows["target"].append(target)
        rows["rel_dev"].append(abs(stat - target) / target)
    t_last = times[-1]
    cfg = SolverConfig(K=K_selfsim, h=h, T=t_last, spectra_at=(t_last,))
    tr = solve_critical(bundle, cfg)
    borel = np.exp(borel_log_masses(np.arange(1, K_selfsim + 1)))
    dev_v = float(np.max(np.abs(t_last * tr.v(t_last) - borel)))
    dev_m0 = abs(t_last * tr.value_at("m0", t_last) - 1.0)
    stats = {"selfsim_max_dev_v": dev_v, "selfsim_dev_m0": dev_m0, "t_last": t_last}
    checks = {"selfsim_spectrum": dev_v <= selfsim_tol, "selfsim_mass": dev_m0 <= selfsim_tol}
    if rows["t"]:
        stats["max_tail_rel_dev"] = max(rows["rel_dev"])
        checks["tail_law"] = stats["max_tail_rel_dev"] <= tail_tol
    return ExperimentReport(
        name="tail_selfsimilarity",
        params={"times": times, "tail_times": list(tail_times), "K_big": K_big,
                "K_selfsim": K_selfsim, "h": h},
        stats=stats, thresholds={"tail_rel": tail_tol, "selfsim": selfsim_tol}, checks=checks,
        samples={"tail": rows, "selfsim": {"k": np.arange(1, K_selfsim + 1),
                                           "t_v": t_last * tr.v(t_last), "borel": borel}},
        runtime=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# exponent scan (exploratory)
# --------------------------------------------------------------------------

def beta_alpha_scan(spec0: SizeSpectrum, alphas: Sequence[float], N_list: Sequence[int],
                    t: float, replicas: int, lam: float = 1.0, seed: int = 0,
                    band: float = 0.12, window: float = 0.25, jobs: int = 1) -> ExperimentReport:
    """Log-log slopes against N of ``E m1``, ``E m2 / E m1``, ``E |C_max|`` and the
    median component size of a vertex frozen during ``[t - window, t]``.

    Also emits the pooled frozen-size CDF over ``[t - window, t]`` rescaled by
    ``N^beta(alpha)``.  Exploratory: the verdict is always ``None``.
    """
    start = time.perf_counter()
    if len(N_list) < 3:
        raise OutOfRange("need at least three system sizes")
    bundle = build_bundle(spec0)
    if not t > bundle.gel_time:
        raise OutOfRange("t must exceed the gel time")
    table = {"alpha": [], "N": [], "E_m1": [], "E_m2_over_E_m1": [], "E_cmax": [],
             "frozen_median": [], "wall_s": []}
    cdf_rows = {"alpha": [], "N": [], "x": [], "F": []}
    stats = {}
    for ia, alpha in enumerate(alphas):
        reg = Regime.constant(alpha, lam)
        beta = beta_of_alpha(alpha)
        m1s, ratios, cms, meds = [], [], [], []
        for iN, N in enumerate(N_list):
            wall = time.perf_counter()
            outs = run_replicas(spec0, int(N), reg, seed + 1000 * ia + iN, replicas,
                                [t - window, t], K_obs=1, jobs=jobs)
            m1 = float(np.mean([o.m1[-1] for o in outs]))
            m2 = float(np.mean([o.m2[-1] for o in outs]))
            cm = float(np.mean([o.cmax[-1] for o in outs]))
            table["alpha"].append(alpha)
            table["N"].append(int(N))
            table["E_m1"].append(m1)
            table["E_m2_over_E_m1"].append(m2 / m1)
            table["E_cmax"].append(cm)
            m1s.append(m1)
            ratios.append(m2 / m1)
            cms.append(cm)
            pooled = pooled_frozen(outs)
            sizes = pooled.window(t - window, t)
            med = float("nan")
            if sizes.size:
                ks, cnt = np.unique(sizes, return_counts=True)
                mass = ks * cnt
                F = np.cumsum(mass) / mass.sum()
                # component size of a uniformly chosen vertex frozen in the window
                med = float(ks[np.searchsorted(F, 0.5)])
                for k, f in zip(ks, F):
                    cdf_rows["alpha"].append(alpha)
                    cdf_rows["N"].append(int(N))
                    cdf_rows["x"].append(float(k) / float(N) ** beta)
                    cdf_rows["F"].append(float(f))
            meds.append(med)
            table["frozen_median"].append(med)
            table["wall_s"].append(time.perf_counter() - wall)
        logN = np.log(np.asarray(N_list, dtype=float))
        f1 = least_squares(logN, np.log(m1s))
        f2 = least_squares(logN, np.log(ratios))
        f3 = least_squares(logN, np.log(cms))
        f4 = least_squares(logN, np.log(meds))
        stats.update({
            f"alpha={alpha:g}:beta_target": beta,
            f"alpha={alpha:g}:slope_m1": f1.slope,
            f"alpha={alpha:g}:slope_m1_se": f1.slope_se,
            f"alpha={alpha:g}:slope_m2_over_m1": f2.slope,
            f"alpha={alpha:g}:slope_m2_over_m1_se": f2.slope_se,
            f"alpha={alpha:g}:slope_cmax": f3.slope,
            f"alpha={alpha:g}:slope_cmax_se": f3.slope_se,
            f"alpha={alpha:g}:slope_frozen_median": f4.slope,
            f"alpha={alpha:g}:slope_frozen_median_se": f4.slope_se,
            f"alpha={alpha:g}:within_band_frozen_median": abs(f4.slope - beta) <= band,
            f"alpha={alpha:g}:within_band_m2_over_m1": abs(f2.slope - beta) <= band,
            f"alpha={alpha:g}:within_band_cmax": abs(f3.slope - beta) <= band,
        })
    return ExperimentReport(
        name="beta_alpha_scan",
        params={"alphas": list(alphas), "N_list": [int(n) for n in N_list], "t": t,
                "replicas": replicas, "lambda": lam, "band": band, "window": window},
        stats=stats, thresholds={"band": band}, checks={}, exploratory=True,
        seeds=[seed], samples={"moments": table, "frozen_cdf_rescaled": cdf_rows},
        runtime=time.perf_counter() - start,
        notes=["exploratory: probes an unproven exponent conjecture; no pass/fail"],
    )


# --------------------------------------------------------------------------
# simulator vs solver
# --------------------------------------------------------------------------

def sim_vs_solver_check(spec0: SizeSpectrum, N: int, regime: Regime, T: float, replicas: int,
                        K_obs: int = 10, seed: int = 0, n_times: int = 31, h: float = 1e-3,
                        w_tol: float = 0.01, Phi_tol: float = 0.01, jobs: int = 1,
                        solver_replicas: int | None = None) -> ExperimentReport:
    """Ensemble means of ``w_k^N(t)`` and ``Phi^N(t)`` against the matching solver."""
    start = time.perf_counter()
    bundle = build_bundle(spec0)
    grid_t = np.linspace(0.0, T, n_times)
    outs = run_replicas(spec0, N, regime, seed, replicas, grid_t, K_obs, jobs)
    w_sim = ensemble_mean(outs, "w")
    Phi_sim = ensemble_mean(outs, "Phi")
    kind = regime.name
    cfg_kw = dict(K=K_obs, h=h, T=T, spectra_at=tuple(grid_t))
    if kind == "critical":
        tr = solve_critical(bundle, SolverConfig(**cfg_kw))
        w_ref = np.array([tr.tails(t) for t in grid_t])
        Phi_ref = np.array([tr.value_at("Phi", t) for t in grid_t])
    elif kind == "subcritical":
        tr = solve_subcritical(bundle, SolverConfig(schedule=regime.schedule, **cfg_kw))
        w_ref = np.array([tr.tails(t) for t in grid_t])
        Phi_ref = np.array([tr.value_at("Phi", t) for t in grid_t])
    else:
        lam = regime.schedule[0][1]
        if len(regime.schedule) > 1:
            raise OutOfRange("alternating comparison supports a constant rate only")
        n_sol = replicas if solver_replicas is None else solver_replicas
        ws, ps = [], []
        for r in range(n_sol):
            bts, _, _ = sample_random_burns(bundle, lam, T, make_rng(seed + 7919, r), h=h)
            tr, _ = solve_alternating(bundle, bts, SolverConfig(**cfg_kw))
            ws.append([tr.tails(t) for t in grid_t])
            ps.append([tr.value_at("Phi", t) for t in grid_t])
        w_ref = np.mean(ws, axis=0)
        Phi_ref = np.mean(ps, axis=0)
    dw = np.abs(w_sim - w_ref)
    dP = np.abs(Phi_sim - Phi_ref)
    stats = {"sup_w": float(dw.max()), "sup_Phi": float(dP.max()),
             "argmax_w_t": float(grid_t[np.unravel_index(np.argmax(dw), dw.shape)[0]]),
             "argmax_Phi_t": float(grid_t[int(np.argmax(dP))]),
             "m0N_initial": outs[0].m0_initial,
             "events_total": int(sum(o.n_events for o in outs))}
    checks = {"w_agreement": stats["sup_w"] <= w_tol, "Phi_agreement": stats["sup_Phi"] <= Phi_tol}
    samples = {"Phi": {"t": grid_t, "sim": Phi_sim, "solver": Phi_ref}}
    wt = {"t": [], "k": [], "sim": [], "solver": []}
    for i, t in enumerate(grid_t):
        for k in range(K_obs):
            wt["t"].append(float(t))
            wt["k"].append(k + 1)
            wt["sim"].append(float(w_sim[i, k]))
            wt["solver"].append(float(w_ref[i, k]))
    samples["w"] = wt
    return ExperimentReport(
        name="sim_vs_solver",
        params={"N": N, "alpha": regime.alpha, "schedule": regime.schedule, "T": T,
                "replicas": replicas, "K_obs": K_obs, "regime": kind},
        stats=stats, thresholds={"w": w_tol, "Phi": Phi_tol}, checks=checks,
        seeds=[[seed, r] for r in range(replicas)], samples=samples,
        runtime=time.perf_counter() - start,
    )
