"""Alternating and random-alternating solvers.

Between burns the left edge ``a = t + w*(t)`` is constant and equals the gel
time of the current interval.  Once ``t > a`` a giant of mass

    theta(t) = F0(b(t)) - F0(a),   int_a^b (y - t) E(0, y) dy = 0

exists; burning it at ``t`` makes ``b(t)`` the next gel time.
"""
from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from . import _kernels as kern
from .errors import BurnBeforeAnyGiant, ConfigError, InvalidWindow, NoRoot, OutOfRange
from .seeding import make_rng
from .solvers import _run_spectra, _stable_h, build_grid
from .trajectory import BurnEvent, SolverConfig, Trajectory
from .transforms import TransformBundle


def wstar_plus_root(bundle: TransformBundle, a: float, t: float) -> float:
    """Next gel time ``b >= t`` if the giant were burnt at ``t``.

    Solves ``int_a^b (y - t) E(0, y) dy = 0``; returns ``a`` when ``t == a``.
    """
    if a < bundle.gel_time * (1 - 1e-12):
        raise OutOfRange(f"edge a={a} precedes the gel time {bundle.gel_time}")
    if t < a:
        raise OutOfRange(f"t={t} precedes the edge a={a}")
    if t == a:
        return a
    th, b = bundle.theta_after_edge(a, [t])
    if not (th[0] > 0 and b[0] > t):
        raise NoRoot(f"no root beyond t={t} for edge a={a}")
    return float(b[0])


def burn_time_between_gels(bundle: TransformBundle, gt1: float, gt2: float) -> tuple[float, float]:
    """The burn instant that makes ``gt2`` the gel time following ``gt1``.

    ``theta = int E`` and ``bt = int y E / int E`` over ``[gt1, gt2]``, using
    ``int E = [F0]`` and ``int y E = [y F0 - G0]``.
    """
    if not gt2 > gt1:
        raise InvalidWindow(f"need gt1 < gt2, got ({gt1}, {gt2})")
    if gt1 < bundle.gel_time * (1 - 1e-12):
        raise InvalidWindow(f"gt1={gt1} precedes the gel time {bundle.gel_time}")
    F1, G1 = bundle.F0(gt1), bundle.G0(gt1)
    F2, G2 = bundle.F0(gt2), bundle.G0(gt2)
    theta = F2 - F1
    moment = (gt2 * F2 - G2) - (gt1 * F1 - G1)
    return moment / theta, theta


def burns_from_gel_times(bundle: TransformBundle, gels: Sequence[float]) -> list[float]:
    """Burn schedule realising a prescribed increasing sequence of gel times.

    The first gel time is fixed by the initial data; it may be listed or omitted.
    """
    gels = [float(g) for g in gels]
    if gels and abs(gels[0] - bundle.gel_time) <= 1e-12 * max(1.0, bundle.gel_time):
        gels = gels[1:]
    gels = [bundle.gel_time, *gels]
    return [burn_time_between_gels(bundle, g1, g2)[0] for g1, g2 in zip(gels, gels[1:])]


def solve_alternating(bundle: TransformBundle, burn_times: Sequence[float],
                      config: SolverConfig) -> tuple[Trajectory, list[BurnEvent]]:
    cfg = config
    bts = [float(b) for b in burn_times]
    if any(b <= 0 or b > cfg.T for b in bts):
        raise ConfigError("burn_times", "burn times must lie in (0, T]")
    if any(b2 <= b1 for b1, b2 in zip(bts, bts[1:])):
        raise ConfigError("burn_times", "burn times must be strictly increasing")

    h = _stable_h(cfg.h, cfg.K, bundle.m0_0)
    a = bundle.gel_time
    x_a = 0.0
    Phi = 0.0
    int_Phi = 0.0
    burns: list[BurnEvent] = []
    noops: list[float] = []
    gels = [a] if a <= cfg.T else []
    t_rows, side_rows, th_rows, Phi_rows, ws_rows = [], [], [], [], []
    seg_start = 0.0
    snaps = list(cfg.snapshot_times)

    def emit(ts, side=""):
        th, _ = _theta(ts)
        t_rows.append(ts)
        side_rows.append(np.full(ts.size, side, dtype=object))
        th_rows.append(th)
        Phi_rows.append(np.full(ts.size, Phi))
        ws_rows.append(a - ts)

    def _theta(ts):
        ts = np.ascontiguousarray(ts, dtype=np.float64)
        th = np.empty(ts.size)
        xb = np.empty(ts.size)
        for i, t in enumerate(ts):
            th[i], xb[i] = kern.theta_from_edge(bundle.ks, bundle.vs, x_a, t)
        return th, xb

    for bt in bts + [None]:
        end = cfg.T if bt is None else bt
        marks = [a, *[s for s in snaps if seg_start < s < end]]
        g = build_grid(end - seg_start, h, [m - seg_start for m in marks]) + seg_start
        g[-1] = end
        inner = g if not t_rows else g[1:]
        if bt is None:
            if inner.size:
                emit(inner)
            int_Phi += Phi * (cfg.T - seg_start)
            break
        if inner.size > 1:
            emit(inner[:-1])
        th, xb = _theta(np.array([bt]))
        if th[0] <= 0.0:
            warnings.warn(f"burn at t={bt:.6g} precedes the gel time {a:.6g}; ignored",
                          BurnBeforeAnyGiant, stacklevel=2)
            noops.append(bt)
            emit(np.array([bt]))
            int_Phi += Phi * (bt - seg_start)
            seg_start = bt
            continue
        emit(np.array([bt]), "pre")
        burns.append(BurnEvent(len(burns), bt, float(th[0]), a))
        int_Phi += Phi * (bt - seg_start)
        Phi += float(th[0])
        x_a = float(xb[0])
        a = 1.0 / kern.sums(bundle.ks, bundle.vs, x_a)[1]
        if a <= cfg.T:
            gels.append(a)
        emit(np.array([bt]), "post")
        seg_start = bt

    times = np.concatenate(t_rows)
    sides = np.concatenate(side_rows)
    theta = np.concatenate(th_rows)
    Phi_s = np.concatenate(Phi_rows)
    series = {
        "m0": bundle.m0_0 - Phi_s - theta,
        "Phi": Phi_s,
        "theta": theta,
        "wstar": np.concatenate(ws_rows),
        "phi": np.zeros_like(theta),
    }
    traj = Trajectory(times, sides, series, cfg.K, regime="alternating")
    traj.burns = burns
    traj.gel_times = gels
    traj.noop_burns = noops
    traj.int_Phi = int_Phi

    if cfg.snapshot_times:
        grid = times[sides != "pre"]
        b_arr = np.array([e.bt for e in burns])
        cum = np.concatenate([[0.0], np.cumsum([e.theta for e in burns])])

        def sink(ts):
            # m0 at the last burn: m0(0) - Phi(t), with Phi left-continuous
            return bundle.m0_0 - cum[np.searchsorted(b_arr, ts, side="left")]

        traj.snapshot_times, traj.snapshots = _run_spectra(bundle, grid, sink, cfg)
    return traj, burns


def sample_random_burns(bundle: TransformBundle, lam: float, T: float, rng,
                        h: float = 1e-3, max_burns: int | None = None):
    """Burn times and burnt masses of one random-alternating realisation.

    Returns ``(bt, theta, gel_before)`` arrays.
    """
    if not lam > 0:
        return np.empty(0), np.empty(0), np.empty(0)
    if max_burns is None:
        # the mean number of burns is about int sqrt(lam E / pi) dt
        max_burns = int(50 + 4 * T * math.sqrt(lam * bundle.m1_0 ** 2))
    bts, ths, edges, n = kern.random_burns(bundle.ks, bundle.vs, float(lam), float(T),
                                           float(h), rng, int(max_burns))
    if n == max_burns:
        raise RuntimeError("burn buffer exhausted; increase max_burns")
    return bts[:n].copy(), ths[:n].copy(), edges[:n].copy()


def solve_random_alternating(bundle: TransformBundle, lam: float, T: float, seed: int,
                             config: SolverConfig) -> tuple[Trajectory, list[BurnEvent]]:
    """Random-alternating dynamics: burns arrive with hazard ``lam * theta(t)``."""
    if lam < 0:
        raise ConfigError("lambda", "rate must be nonnegative")
    cfg = config
    if cfg.T != T:
        cfg = SolverConfig(K=cfg.K, h=cfg.h, T=T, schedule=cfg.schedule,
                           quad_tol=cfg.quad_tol, seed=seed,
                           spectra_at=cfg.spectra_at, richardson=cfg.richardson)
    bts, _, _ = sample_random_burns(bundle, lam, T, make_rng(seed), h=cfg.h)
    with warnings.catch_warnings():
        warnings.simplefilter("error", BurnBeforeAnyGiant)
        traj, burns = solve_alternating(bundle, bts, cfg)
    traj.regime = "random-alternating"
    return traj, burns
