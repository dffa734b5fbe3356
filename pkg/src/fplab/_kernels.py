"""JIT-compiled scalar kernels over a finite-support initial spectrum.

Every kernel takes the support as ``ks`` (float64 sizes) and ``vs`` (masses).
With ``S1(x) = sum k v_k e^{-kx}`` and ``S2(x) = sum k^2 v_k e^{-kx}``:

* ``w(x) = 1 / S1(x)`` is strictly increasing, ``w(0) = 1 / m1``;
* ``E(w(x)) = S1^3 / S2``, ``F0(w(x)) = m0 - V(x)``, ``G0(w(x)) = w F0 - x``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_MAXIT = 200


@njit(cache=True, nogil=True)
def sums(ks, vs, x):
    """Return ``(V, S1, S2, S3)`` at ``x``."""
    V = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    for i in range(ks.size):
        k = ks[i]
        e = vs[i] * math.exp(-k * x)
        V += e
        s1 += k * e
        s2 += k * k * e
        s3 += k * k * k * e
    return V, s1, s2, s3


@njit(cache=True, nogil=True)
def x_of_w(ks, vs, w):
    """Solve ``S1(x) = 1/w`` for x.

    ``g(x) = log S1(x) + log w`` is convex and strictly decreasing, so Newton
    started anywhere lands left of the root after one step and then increases
    monotonically.  A bisection fallback guards against stagnation.
    Returns NaN for ``w <= 0``.
    """
    if not w > 0.0:
        return np.nan
    lw = math.log(w)
    x = 0.0
    lo = -np.inf
    hi = np.inf
    for _ in range(_MAXIT):
        _, s1, s2, _ = sums(ks, vs, x)
        g = math.log(s1) + lw
        if g > 0.0:
            lo = x if x > lo else lo
        else:
            hi = x if x < hi else hi
        dx = g / (s2 / s1)
        xn = x + dx
        if not (xn > lo and xn < hi) and math.isfinite(lo) and math.isfinite(hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * (1.0 + abs(x)):
            return xn
        x = xn
    return x


@njit(cache=True, nogil=True)
def core_at_w(ks, vs, m0, w):
    """``(x, E, F0, G0)`` at ``w``."""
    x = x_of_w(ks, vs, w)
    V, s1, s2, _ = sums(ks, vs, x)
    E = s1 * s1 * s1 / s2
    F0 = m0 - V
    return x, E, F0, w * F0 - x


@njit(cache=True, nogil=True)
def dE_dw(ks, vs, w):
    """Derivative of the critical core with respect to w."""
    x = x_of_w(ks, vs, w)
    _, s1, s2, s3 = sums(ks, vs, x)
    # E = S1^3/S2 and dw/dx = S2/S1^2 (note dS1/dx = -S2, dS2/dx = -S3)
    dEdx = (-3.0 * s1 * s1 * s2 * s2 + s1 * s1 * s1 * s3) / (s2 * s2)
    return dEdx * s1 * s1 / s2


@njit(cache=True, nogil=True)
def theta_from_edge(ks, vs, x_a, t):
    """Giant mass at time ``t`` after gelation at left edge ``a = w(x_a)``.

    Solves ``x + t V(x) = x_a + t V(x_a)`` on the increasing branch
    ``x > x_t`` (``w(x_t) = t``).  Returns ``(theta, x_b)``; theta = 0 and
    ``x_b = x_a`` when ``t`` does not exceed the edge.
    """
    x_t = x_of_w(ks, vs, t)
    if not x_t > x_a:
        return 0.0, x_a
    Va, _, _, _ = sums(ks, vs, x_a)
    target = x_a + t * Va
    # psi(x) = x + t V(x) is convex with its minimum at x_t and psi(x_a) = target
    lo = x_t
    hi = np.inf
    x = 2.0 * x_t - x_a
    for _ in range(_MAXIT):
        V, s1, _, _ = sums(ks, vs, x)
        f = x + t * V - target
        fp = 1.0 - t * s1
        if f < 0.0:
            lo = x
        else:
            hi = x
        if fp > 0.0:
            xn = x - f / fp
        else:
            xn = lo
        if not (xn > lo and xn < hi):
            if math.isfinite(hi):
                xn = 0.5 * (lo + hi)
            else:
                xn = x_t + 2.0 * (x - x_t) + 1e-300
        if abs(xn - x) <= 1e-15 * (1.0 + abs(x)) or hi - lo <= 1e-15 * (1.0 + abs(lo)):
            x = xn
            break
        x = xn
    Vb, _, _, _ = sums(ks, vs, x)
    return Va - Vb, x


@njit(cache=True, nogil=True)
def _control_rhs(ks, vs, m0, t, w, lam):
    if lam == 0.0:
        return -1.0
    _, E, _, _ = core_at_w(ks, vs, m0, t + w)
    return lam / (w * E) - 1.0


_STIFF = 0.02


@njit(cache=True, nogil=True)
def _control_step(ks, vs, m0, t, h, wi, lam):
    """One RK4 step of the control equation and of ``I' = F0(t + w)``."""
    k1 = _control_rhs(ks, vs, m0, t, wi, lam)
    q1 = core_at_w(ks, vs, m0, t + wi)[2]
    w2 = wi + 0.5 * h * k1
    if lam > 0.0 and w2 < 1e-12:
        return wi, 0.0, 1
    k2 = _control_rhs(ks, vs, m0, t + 0.5 * h, w2, lam)
    q2 = core_at_w(ks, vs, m0, t + 0.5 * h + w2)[2]
    w3 = wi + 0.5 * h * k2
    if lam > 0.0 and w3 < 1e-12:
        return wi, 0.0, 1
    k3 = _control_rhs(ks, vs, m0, t + 0.5 * h, w3, lam)
    q3 = core_at_w(ks, vs, m0, t + 0.5 * h + w3)[2]
    w4 = wi + h * k3
    if lam > 0.0 and w4 < 1e-12:
        return wi, 0.0, 1
    k4 = _control_rhs(ks, vs, m0, t + h, w4, lam)
    q4 = core_at_w(ks, vs, m0, t + h + w4)[2]
    w_new = wi + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    if lam > 0.0 and w_new < 1e-12:
        return wi, 0.0, 1
    return w_new, h * (q1 + 2.0 * q2 + 2.0 * q3 + q4) / 6.0, 0


@njit(cache=True, nogil=True)
def control_rk4(ks, vs, m0, times, lams):
    """RK4 for ``w' = lam/(w E(t+w)) - 1`` with ``w(0) = 1/m1``.

    ``lams[i]`` is the (constant) rate on ``[times[i], times[i+1]]``.  Also
    integrates ``I' = F0(t + w)`` so ``I(t)`` is the running integral of the
    burnt mass.  Steps where the equation is stiff (``h lam / (w^2 E)`` above
    ``_STIFF``) are split into equal substeps.  Returns ``(w, dw, I, status)``;
    status 1 flags w < 1e-12.
    """
    n = times.size
    w = np.empty(n)
    dw = np.empty(n)
    acc = np.empty(n)
    _, s1, _, _ = sums(ks, vs, 0.0)
    w[0] = 1.0 / s1
    acc[0] = 0.0
    dw[0] = _control_rhs(ks, vs, m0, times[0], w[0], lams[0]) if lams.size else -1.0
    for i in range(n - 1):
        t = times[i]
        h = times[i + 1] - t
        lam = lams[i]
        wi = w[i]
        ai = acc[i]
        m = 1
        if lam > 0.0:
            E = core_at_w(ks, vs, m0, t + wi)[1]
            m = max(1, int(math.ceil(h * lam / (wi * wi * E) / _STIFF)))
        hs = h / m
        for j in range(m):
            wi, inc, st = _control_step(ks, vs, m0, t + j * hs, hs, wi, lam)
            if st:
                return w, dw, acc, 1
            ai += inc
        w[i + 1] = wi
        acc[i + 1] = ai
        # one-sided derivative on the right of node i+1 uses the next rate
        lam_next = lams[i + 1] if i + 1 < lams.size else lam
        dw[i + 1] = _control_rhs(ks, vs, m0, t + h, w[i + 1], lam_next)
    return w, dw, acc, 0


_GL_X = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


@njit(cache=True, nogil=True)
def _theta_integral(ks, vs, x_a, s0, s1):
    """Gauss-Legendre (3 pt) integral of theta over ``[s0, s1]``."""
    half = 0.5 * (s1 - s0)
    mid = 0.5 * (s1 + s0)
    tot = 0.0
    for j in range(3):
        th, _ = theta_from_edge(ks, vs, x_a, mid + half * _GL_X[j])
        tot += _GL_W[j] * th
    return tot * half


@njit(cache=True, nogil=True)
def random_burns(ks, vs, lam, T, h, rng, max_burns):
    """Sample burn times of the random alternating dynamics on ``[0, T]``.

    Hazard of the next burn is ``lam * theta(t)``.  The cumulative hazard is
    accumulated with 3-point Gauss-Legendre on steps of width ``h``; the
    crossing instant is refined by safeguarded Newton to 1e-12.

    Returns arrays ``(bt, theta, edge_before, n)``.
    """
    bts = np.empty(max_burns)
    ths = np.empty(max_burns)
    edges = np.empty(max_burns)
    n = 0
    _, s1, _, _ = sums(ks, vs, 0.0)
    a = 1.0 / s1
    x_a = 0.0
    t_cur = 0.0
    if lam <= 0.0:
        return bts, ths, edges, 0
    while n < max_burns:
        target = -math.log(1.0 - rng.random()) / lam
        s = max(t_cur, a)
        if s >= T:
            break
        cum = 0.0
        hit = False
        while s < T:
            s_next = min(s + h, T)
            piece = _theta_integral(ks, vs, x_a, s, s_next)
            if cum + piece >= target:
                hit = True
                break
            cum += piece
            s = s_next
        if not hit:
            break
        lo = s
        hi = s_next
        r = 0.5 * (lo + hi)
        for _ in range(100):
            g = cum + _theta_integral(ks, vs, x_a, s, r) - target
            if g > 0.0:
                hi = r
            else:
                lo = r
            th, _ = theta_from_edge(ks, vs, x_a, r)
            rn = r - g / th if th > 0.0 else 0.5 * (lo + hi)
            if not (rn > lo and rn < hi):
                rn = 0.5 * (lo + hi)
            if abs(rn - r) < 1e-12 or hi - lo < 1e-12:
                r = rn
                break
            r = rn
        th, x_b = theta_from_edge(ks, vs, x_a, r)
        bts[n] = r
        ths[n] = th
        edges[n] = a
        n += 1
        _, s1b, _, _ = sums(ks, vs, x_b)
        a = 1.0 / s1b
        x_a = x_b
        t_cur = r
    return bts, ths, edges, n
