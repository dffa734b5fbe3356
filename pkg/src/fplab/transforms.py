"""Transforms of a finite-support initial spectrum.

With ``U(x) = V(x) - m0`` the map ``x -> w = -1/U'(x)`` is strictly
increasing and parametrises everything downstream:

    F0(w) = -U(x)          (burnt-mass potential, F0(1/m1) = 0)
    G0(w) = w F0(w) - x    (its Legendre companion, G0' = F0, G0(1/m1) = 0)
    E(w)  = (-U')^3 / U''  (the critical core, E = F0')

The core of the time-``t`` solution is ``E(t, w) = E(0, t + w)`` for every
lightning regime, so solvers only ever evaluate these three functions of the
initial data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit
from scipy.optimize import brentq

from . import _kernels as kern
from .errors import EmptySpectrum, OutOfDomain, OutOfRange, SpectrumError
from .spectrum import SizeSpectrum, moments


@njit(cache=True)
def _core_many(ks, vs, m0, ws):
    n = ws.size
    xs = np.empty(n)
    Es = np.empty(n)
    Fs = np.empty(n)
    Gs = np.empty(n)
    for i in range(n):
        xs[i], Es[i], Fs[i], Gs[i] = kern.core_at_w(ks, vs, m0, ws[i])
    return xs, Es, Fs, Gs


@njit(cache=True)
def _theta_many(ks, vs, x_a, ts):
    out = np.empty(ts.size)
    xb = np.empty(ts.size)
    for i in range(ts.size):
        out[i], xb[i] = kern.theta_from_edge(ks, vs, x_a, ts[i])
    return out, xb


@dataclass(frozen=True, eq=False)
class TransformBundle:
    spec0: SizeSpectrum
    m0_0: float
    m1_0: float
    m2_0: float
    m3_0: float
    gel_time: float
    ks: np.ndarray
    vs: np.ndarray

    @property
    def lipschitz_D(self) -> float:
        """Bound on ``|dE/dw|`` for ``w >= gel_time``."""
        return 4.0 * self.m2_0 ** 2 * self.m3_0

    @property
    def is_monodisperse(self) -> bool:
        return self.spec0.ks.size == 1 and int(self.spec0.ks[0]) == 1

    def x(self, w: float) -> float:
        return invert_w_to_x(self, w)

    def E(self, w: float) -> float:
        return core_E(self, w)

    def F0(self, w: float) -> float:
        return eval_F0_G0(self, w)[0]

    def G0(self, w: float) -> float:
        return eval_F0_G0(self, w)[1]

    def V0(self, x: float) -> float:
        return kern.sums(self.ks, self.vs, float(x))[0]

    def core_arrays(self, ws) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised ``(x, E, F0, G0)`` over an array of ``w > 0``."""
        ws = np.ascontiguousarray(ws, dtype=np.float64)
        if np.any(~(ws > 0)):
            raise OutOfRange("w must be positive")
        return _core_many(self.ks, self.vs, self.m0_0, ws)

    def theta_after_edge(self, a: float, ts) -> tuple[np.ndarray, np.ndarray]:
        """Giant mass at times ``ts`` of an interval whose gel time is ``a``.

        Returns ``(theta, b)`` where ``b(t)`` is the next gel time if the giant
        were burnt at ``t``.
        """
        x_a = invert_w_to_x(self, a)
        ts = np.ascontiguousarray(np.atleast_1d(ts), dtype=np.float64)
        th, xb = _theta_many(self.ks, self.vs, x_a, ts)
        b = np.empty_like(xb)
        for i, x in enumerate(xb):
            b[i] = 1.0 / kern.sums(self.ks, self.vs, x)[1]
        b[th == 0.0] = a
        return th, b


def build_bundle(spec0: SizeSpectrum) -> TransformBundle:
    if spec0.truncated:
        raise SpectrumError("transforms need a finite-support initial spectrum")
    mo = moments(spec0)
    if not (mo.m0 > 0 and mo.m1 > 0):
        raise EmptySpectrum("initial spectrum carries no mass")
    return TransformBundle(
        spec0=spec0,
        m0_0=mo.m0,
        m1_0=mo.m1,
        m2_0=mo.m2,
        m3_0=mo.m3,
        gel_time=1.0 / mo.m1,
        ks=np.ascontiguousarray(spec0.ks, dtype=np.float64),
        vs=np.ascontiguousarray(spec0.vs, dtype=np.float64),
    )


def invert_w_to_x(bundle: TransformBundle, w: float) -> float:
    """The unique x with ``sum k v_k e^{-kx} = 1/w`` (any real x for finite support)."""
    if not w > 0 or not math.isfinite(w):
        raise OutOfRange(f"w must be finite and positive, got {w}")
    x = kern.x_of_w(bundle.ks, bundle.vs, float(w))
    if not math.isfinite(x):
        raise OutOfRange(f"no finite x for w={w}")
    return x


def core_E(bundle: TransformBundle, w: float) -> float:
    if not w > 0:
        raise OutOfRange(f"w must be positive, got {w}")
    return kern.core_at_w(bundle.ks, bundle.vs, bundle.m0_0, float(w))[1]


def eval_F0_G0(bundle: TransformBundle, w: float) -> tuple[float, float]:
    if not w > 0:
        raise OutOfRange(f"w must be positive, got {w}")
    _, _, F0, G0 = kern.core_at_w(bundle.ks, bundle.vs, bundle.m0_0, float(w))
    return F0, G0


def core_E_derivative(bundle: TransformBundle, w: float) -> float:
    return kern.dE_dw(bundle.ks, bundle.vs, float(w))


@dataclass(frozen=True)
class CoreWindowBounds:
    w1: float
    w2: float
    phi_inf: float
    phi_sup: float


def phi_window_bounds(bundle: TransformBundle, w1: float, w2: float,
                      n_grid: int = 4097) -> CoreWindowBounds:
    """Minimum and maximum of ``E(0, .)`` over ``[w1, w2]``.

    Interior extrema are located as sign changes of ``dE/dw`` on a grid and
    polished with Brent's method; endpoints are always candidates.
    """
    if w1 > w2:
        raise OutOfRange("window must satisfy w1 <= w2")
    if w1 < bundle.gel_time * (1 - 1e-12):
        raise OutOfRange("window must start at or after the gel time")
    if w1 == w2:
        e = core_E(bundle, w1)
        return CoreWindowBounds(w1, w2, e, e)
    ws = np.linspace(w1, w2, n_grid)
    _, Es, _, _ = bundle.core_arrays(ws)
    cand = [Es[0], Es[-1]]
    d = np.array([core_E_derivative(bundle, w) for w in ws])
    for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        r = brentq(lambda w: core_E_derivative(bundle, w), ws[i], ws[i + 1], xtol=1e-14)
        cand.append(core_E(bundle, r))
    cand.extend(Es)
    return CoreWindowBounds(w1, w2, float(min(cand)), float(max(cand)))


_INV_E = math.exp(-1.0)


def lambert_w(z: float, branch: str = "principal") -> float:
    """Real Lambert W by Halley iteration.

    Initial guesses: branch-point series ``-1 +/- p - p^2/3 + 11 p^3/72``
    with ``p = sqrt(2(e z + 1))`` near ``-1/e``; ``log1p(z)`` on the principal
    branch for moderate z; ``L1 - L2 + L2/L1`` (``L1 = log|z|``,
    ``L2 = log|L1|``) asymptotically.
    """
    z = float(z)
    if branch not in ("principal", "lower"):
        raise ValueError("branch must be 'principal' or 'lower'")
    if z < -_INV_E:
        if z > -_INV_E - 1e-15:
            z = -_INV_E
        else:
            raise OutOfDomain(f"W undefined below -1/e, got {z}")
    if branch == "lower" and not z < 0:
        raise OutOfDomain("lower branch requires -1/e <= z < 0")
    if z == 0.0:
        return 0.0
    if z == -_INV_E:
        return -1.0
    p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
    if branch == "principal":
        if z < -0.25:
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        elif z < 3.0:
            w = math.log1p(z)
        else:
            L1 = math.log(z)
            L2 = math.log(L1)
            w = L1 - L2 + L2 / L1
    else:
        if z < -0.25:
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        else:
            L1 = math.log(-z)
            L2 = math.log(-L1)
            w = L1 - L2 + L2 / L1
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)
