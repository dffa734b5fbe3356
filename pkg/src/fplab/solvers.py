"""Deterministic solvers for the critical and subcritical equations.

Once the sol mass ``m0(t)`` and the lightning rate are known, the size
equations

    v_k' = (k/2) sum_{l<k} v_l v_{k-l} - k v_k (m0(t) + lam(t))

form a lower-triangular system: the first K sizes never see sizes above K,
so truncation introduces no closure error.  ``m0(t)`` itself comes from the
transform route (``Phi = F0(t + w*)``), which is why the spectrum integration
is a pure post-processing step here.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.signal import fftconvolve

from . import _kernels as kern
from .errors import (
    ConfigError,
    ControlSingularity,
    NegativeMassDetected,
    StepSizeTooCoarse,
)
from .trajectory import SolverConfig, Trajectory
from .transforms import TransformBundle, adaptive_simpson

# stage times inside a step are pulled inward by this fraction of the step so
# piecewise-constant paths are sampled on the correct side of a breakpoint
_NUDGE = 1e-10
# RK4 is stable for h * rate <= 2.78 on the decay term; keep a margin
_STAB = 2.5
_FFT_K = 512
RICHARDSON_TOL = 1e-7
RICHARDSON_K = 50


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------

def build_grid(T: float, h: float, breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Grid on ``[0, T]`` with spacing at most ``h`` that contains every breakpoint."""
    pts = sorted({0.0, float(T)} | {float(b) for b in breakpoints if 0.0 < b < T})
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-12:
            merged.append(p)
        else:
            merged[-1] = max(merged[-1], p) if p == T else merged[-1]
    merged[-1] = float(T)
    out = [np.array([0.0])]
    for a, b in zip(merged, merged[1:]):
        n = max(1, int(math.ceil((b - a) / h - 1e-9)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def refine_grid(grid: np.ndarray) -> np.ndarray:
    mid = 0.5 * (grid[:-1] + grid[1:])
    out = np.empty(2 * grid.size - 1)
    out[0::2] = grid
    out[1::2] = mid
    return out


def stage_times(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t0, t1 = grid[:-1], grid[1:]
    d = _NUDGE * (t1 - t0)
    return t0 + d, 0.5 * (t0 + t1), t1 - d


def _snap_indices(grid: np.ndarray, times: Sequence[float]) -> np.ndarray:
    idx = []
    for t in times:
        i = int(np.argmin(np.abs(grid - t)))
        if abs(grid[i] - t) > 1e-9:
            raise ValueError(f"snapshot time {t} is not on the grid")
        idx.append(i)
    return np.asarray(idx, dtype=np.int64)


# --------------------------------------------------------------------------
# triangular size equations
# --------------------------------------------------------------------------

@njit(cache=True)
def _tri_rhs(v, s, out):
    K = v.size
    for i in range(K):
        k = i + 1
        acc = 0.0
        for l in range(1, (k + 1) // 2):
            acc += v[l - 1] * v[k - l - 1]
        acc *= 2.0
        if k % 2 == 0:
            acc += v[k // 2 - 1] * v[k // 2 - 1]
        out[i] = 0.5 * k * acc - k * v[i] * s


@njit(cache=True)
def _tri_rk4(v0, grid, sl, sm, sr, snap_idx):
    K = v0.size
    snaps = np.zeros((snap_idx.size, K))
    v = v0.copy()
    k1 = np.empty(K)
    k2 = np.empty(K)
    k3 = np.empty(K)
    k4 = np.empty(K)
    tmp = np.empty(K)
    js = 0
    while js < snap_idx.size and snap_idx[js] == 0:
        snaps[js] = v
        js += 1
    for i in range(grid.size - 1):
        h = grid[i + 1] - grid[i]
        _tri_rhs(v, sl[i], k1)
        for j in range(K):
            tmp[j] = v[j] + 0.5 * h * k1[j]
        _tri_rhs(tmp, sm[i], k2)
        for j in range(K):
            tmp[j] = v[j] + 0.5 * h * k2[j]
        _tri_rhs(tmp, sm[i], k3)
        for j in range(K):
            tmp[j] = v[j] + h * k3[j]
        _tri_rhs(tmp, sr[i], k4)
        bad = False
        for j in range(K):
            v[j] += h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
            if v[j] < -1e-12:
                bad = True
        if bad:
            return snaps, i + 1
        while js < snap_idx.size and snap_idx[js] == i + 1:
            snaps[js] = v
            js += 1
    return snaps, 0


def _fft_rhs(v, s, ks):
    conv = fftconvolve(v, v)[: v.size - 1]
    out = -ks * v * s
    out[1:] += 0.5 * ks[1:] * conv
    return out


def _tri_rk4_fft(v0, grid, sl, sm, sr, snap_idx):
    K = v0.size
    ks = np.arange(1, K + 1, dtype=np.float64)
    snaps = np.zeros((snap_idx.size, K))
    v = v0.copy()
    js = 0
    while js < snap_idx.size and snap_idx[js] == 0:
        snaps[js] = v
        js += 1
    for i in range(grid.size - 1):
        h = grid[i + 1] - grid[i]
        a = _fft_rhs(v, sl[i], ks)
        b = _fft_rhs(v + 0.5 * h * a, sm[i], ks)
        c = _fft_rhs(v + 0.5 * h * b, sm[i], ks)
        d = _fft_rhs(v + h * c, sr[i], ks)
        v = v + h * (a + 2 * b + 2 * c + d) / 6.0
        if np.any(v < -1e-12):
            return snaps, i + 1
        while js < snap_idx.size and snap_idx[js] == i + 1:
            snaps[js] = v
            js += 1
    return snaps, 0


def _integrate_sinks(v0, grid, sl, sm, sr, snap_idx):
    args = (np.ascontiguousarray(v0, dtype=np.float64), grid,
            np.ascontiguousarray(sl), np.ascontiguousarray(sm),
            np.ascontiguousarray(sr), snap_idx)
    if v0.size > _FFT_K:
        snaps, bad = _tri_rk4_fft(*args)
    else:
        snaps, bad = _tri_rk4(*args)
    if bad:
        raise NegativeMassDetected(
            f"negative mass after step {bad} (t={grid[bad]:.6g}); refine the grid")
    return snaps


def integrate_vk_triangular(bundle: TransformBundle, m0_path: Callable[[float], float],
                            lambda_path: Callable[[float], float], K: int,
                            grid: Sequence[float],
                            snapshot_times: Sequence[float] | None = None) -> np.ndarray:
    """RK4 for the first ``K`` size equations with the given scalar paths.

    Parameters
    ----------
    m0_path, lambda_path : callable
        Sol mass and lightning rate as functions of time.  Step
        discontinuities are allowed at grid nodes.
    grid : increasing sequence of times starting at 0
    snapshot_times : times (grid nodes) at which to return ``v``; defaults to
        the final grid node.

    Returns
    -------
    ndarray of shape ``(len(snapshot_times), K)``
    """
    grid = np.asarray(grid, dtype=np.float64)
    if snapshot_times is None:
        snapshot_times = [grid[-1]]
    a, m, b = stage_times(grid)

    def sink(ts):
        return np.array([m0_path(t) + lambda_path(t) for t in ts])

    idx = _snap_indices(grid, snapshot_times)
    order = np.argsort(idx, kind="stable")
    snaps = _integrate_sinks(bundle.spec0.dense(K), grid, sink(a), sink(m), sink(b), idx[order])
    out = np.empty_like(snaps)
    out[order] = snaps
    return out


def _stable_h(h: float, K: int, smax: float) -> float:
    if smax <= 0:
        return h
    return min(h, _STAB / (K * smax))


def _run_spectra(bundle, grid, sink_fn, cfg: SolverConfig, refine_fn=None):
    """Integrate spectra at the snapshot times with the Richardson self-check.

    ``sink_fn(ts)`` returns the sink at arbitrary times, or ``refine_fn(grid)``
    returns the three stage-sink arrays for a given grid (used when the sink
    is only known on a grid, as for the subcritical control).
    """
    def stages(g):
        if refine_fn is not None:
            return refine_fn(g)
        return tuple(sink_fn(s) for s in stage_times(g))

    times = cfg.snapshot_times
    idx = _snap_indices(grid, times)
    sl, sm, sr = stages(grid)
    snaps = _integrate_sinks(bundle.spec0.dense(cfg.K), grid, sl, sm, sr, idx)
    if cfg.richardson:
        Kr = min(cfg.K, RICHARDSON_K)
        fine = refine_grid(grid)
        fl, fm, fr = stages(fine)
        last = np.array([fine.size - 1], dtype=np.int64)
        ref = _integrate_sinks(bundle.spec0.dense(Kr), fine, fl, fm, fr, last)[0]
        coarse = _integrate_sinks(bundle.spec0.dense(Kr), grid, sl, sm, sr,
                                  np.array([grid.size - 1], dtype=np.int64))[0]
        err = float(np.max(np.abs(ref - coarse)))
        if err > RICHARDSON_TOL:
            raise StepSizeTooCoarse(
                f"step-halving check disagrees by {err:.3g} > {RICHARDSON_TOL:g}")
    return np.asarray(times, dtype=np.float64), snaps


# --------------------------------------------------------------------------
# critical
# --------------------------------------------------------------------------

def critical_Phi(bundle: TransformBundle, ts) -> np.ndarray:
    """``Phi(t) = F0(t)`` after gelation, 0 before."""
    ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
    out = np.zeros_like(ts)
    post = ts >= bundle.gel_time
    if np.any(post):
        out[post] = bundle.core_arrays(ts[post])[2]
    return out


def solve_critical(bundle: TransformBundle, config: SolverConfig) -> Trajectory:
    cfg = config
    gel = bundle.gel_time
    h = _stable_h(cfg.h, cfg.K, bundle.m0_0)
    grid = build_grid(cfg.T, h, [gel, *cfg.snapshot_times])
    Phi = critical_Phi(bundle, grid)
    post = grid >= gel
    phi = np.zeros_like(grid)
    if np.any(post):
        phi[post] = bundle.core_arrays(grid[post])[1]
    m0 = bundle.m0_0 - Phi
    series = {
        "m0": m0,
        "Phi": Phi,
        "theta": np.zeros_like(grid),
        "wstar": np.maximum(gel - grid, 0.0),
        "phi": phi,
    }
    traj = Trajectory(grid, np.full(grid.size, "", dtype=object), series, cfg.K,
                      regime="critical")
    traj.gel_times = [gel] if gel <= cfg.T else []
    traj.int_Phi = bundle.G0(cfg.T) if cfg.T >= gel else 0.0
    if cfg.snapshot_times:
        traj.snapshot_times, traj.snapshots = _run_spectra(
            bundle, grid, lambda ts: bundle.m0_0 - critical_Phi(bundle, ts), cfg)
    return traj


# --------------------------------------------------------------------------
# subcritical
# --------------------------------------------------------------------------

def _step_rates(cfg: SolverConfig, grid: np.ndarray) -> np.ndarray:
    mids = 0.5 * (grid[:-1] + grid[1:])
    return np.array([cfg.lam(t) for t in mids])


def solve_control(bundle: TransformBundle, cfg: SolverConfig, grid: np.ndarray):
    """RK4 solution of the control equation on ``grid``.

    Returns ``(wstar, dwstar, int_Phi)`` at the grid nodes.
    """
    lams = _step_rates(cfg, grid)
    w, dw, acc, status = kern.control_rk4(bundle.ks, bundle.vs, bundle.m0_0, grid, lams)
    if status:
        raise ControlSingularity("w* fell below 1e-12; the step is too coarse")
    lam_inf = float(np.min(lams)) if lams.size else 0.0
    if lam_inf > 0:
        # w* >= min(lam_inf / phi_sup, gel) and phi_sup <= m1(0)^2 for w >= gel
        floor = min(lam_inf / bundle.m1_0 ** 2, bundle.gel_time)
        if np.min(w) < floor * (1 - 1e-6):
            raise ControlSingularity(
                f"w* dropped to {np.min(w):.3g}, below the a-priori floor {floor:.3g}")
    return w, dw, acc


def solve_subcritical(bundle: TransformBundle, config: SolverConfig, *,
                      allow_zero_rate: bool = False) -> Trajectory:
    """Subcritical solve driven by the control ``w*(t)``.

    ``allow_zero_rate`` admits schedules that switch lightning off (used for
    the constructed controls in the extremum checks); by default every rate
    must be positive.
    """
    cfg = config
    lo, hi = cfg.lam_min_max()
    if not allow_zero_rate and not lo > 0:
        raise ConfigError("lambda", "subcritical solve requires a strictly positive rate")
    h = _stable_h(cfg.h, cfg.K, bundle.m0_0 + hi)
    grid = build_grid(cfg.T, h, [*cfg.breakpoints(), *cfg.snapshot_times])
    w, dw, acc = solve_control(bundle, cfg, grid)
    _, E, F0, _ = bundle.core_arrays(grid + w)
    lam_nodes = np.array([cfg.lam(t) for t in grid])
    series = {
        "m0": bundle.m0_0 - F0,
        "Phi": F0,
        "theta": np.zeros_like(grid),
        "wstar": w,
        "phi": lam_nodes / w if lo > 0 else np.where(w > 0, lam_nodes / np.maximum(w, 1e-300), 0.0),
    }
    traj = Trajectory(grid, np.full(grid.size, "", dtype=object), series, cfg.K,
                      regime="subcritical")
    traj.int_Phi = float(acc[-1])
    traj.dwstar = dw

    def stages(g):
        fine = refine_grid(g)
        wf, _, _ = solve_control(bundle, cfg, fine)
        F = bundle.core_arrays(fine + wf)[2]
        lam_steps = _step_rates(cfg, g)
        m0 = bundle.m0_0 - F
        return m0[0:-1:2] + lam_steps, m0[1::2] + lam_steps, m0[2::2] + lam_steps

    if cfg.snapshot_times:
        traj.snapshot_times, traj.snapshots = _run_spectra(bundle, grid, None, cfg, refine_fn=stages)
    return traj


# --------------------------------------------------------------------------
# rigidity
# --------------------------------------------------------------------------

def x_star(bundle: TransformBundle, t: float, wstar: float) -> float:
    """Tilt exponent ``x*(t) = -int_0^{w*} y E(0, t + y) dy`` (closed form).

    With ``a = t + w*`` the integral reduces to
    ``G0(t) - G0(a) + (a - t) F0(a)``.
    """
    if wstar == 0:
        return 0.0
    a = t + wstar
    F_a, G_a = bundle.F0(a), bundle.G0(a)
    G_t = bundle.G0(t)
    return -(G_t - G_a + (a - t) * F_a)


def x_star_quadrature(bundle: TransformBundle, t: float, wstar: float,
                      tol: float = 1e-12) -> float:
    """Same quantity by adaptive Simpson on ``y E(0, t + y)``."""
    return -adaptive_simpson(lambda y: y * bundle.E(t + y), 0.0, wstar, tol=tol)
