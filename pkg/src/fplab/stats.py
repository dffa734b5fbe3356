"""Empirical distributions, Kolmogorov-Smirnov distances and reference laws."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf, erfc

SQRT_PI = math.sqrt(math.pi)


def ecdf(x, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Sorted support and right-continuous CDF values (optionally weighted)."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if weights is None:
        F = np.arange(1, xs.size + 1) / xs.size
    else:
        w = np.asarray(weights, dtype=float)[order]
        F = np.cumsum(w) / w.sum()
    # collapse ties so F is the value after the last tied point
    last = np.r_[xs[1:] != xs[:-1], True]
    return xs[last], F[last]


def ks_distance(sample, cdf: Callable[[np.ndarray], np.ndarray], weights=None) -> float:
    """Sup distance between the (weighted) empirical CDF and a continuous CDF."""
    xs, F = ecdf(sample, weights)
    G = cdf(xs)
    F_left = np.r_[0.0, F[:-1]]
    return float(max(np.max(np.abs(F - G)), np.max(np.abs(F_left - G))))


def ks_bruteforce(sample, cdf: Callable[[float], float]) -> float:
    """Reference O(n^2) implementation: count points at and below each sample."""
    x = [float(v) for v in sample]
    n = len(x)
    best = 0.0
    for xi in x:
        le = sum(1 for xj in x if xj <= xi)
        lt = sum(1 for xj in x if xj < xi)
        g = float(cdf(xi))
        best = max(best, abs(le / n - g), abs(lt / n - g))
    return best


def ks_discrete_vs_continuous(support, probs, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """KS distance between a lattice pmf (placed at ``support``) and a continuous CDF."""
    support = np.asarray(support, dtype=float)
    P = np.cumsum(probs)
    P = P / P[-1]
    G = cdf(support)
    P_left = np.r_[0.0, P[:-1]]
    return float(max(np.max(np.abs(P - G)), np.max(np.abs(P_left - G))))


# --- reference laws --------------------------------------------------------

def gamma_half_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, np.exp(-x) / np.sqrt(np.maximum(x, 1e-300) * math.pi), 0.0)


def gamma_half_cdf(x):
    """CDF of Gamma(1/2, 1): ``erf(sqrt(x))``."""
    x = np.asarray(x, dtype=float)
    return erf(np.sqrt(np.maximum(x, 0.0)))


def rayleigh_tail(x, sigma: float):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, np.exp(-x * x / (2.0 * sigma * sigma)), 1.0)


def rayleigh_cdf(x, sigma: float):
    return 1.0 - rayleigh_tail(x, sigma)


def sb_rayleigh_tail(x, sigma: float = 1 / math.sqrt(2)):
    """P(Y > x) for the size-biased Rayleigh law.

    For ``sigma = 1/sqrt(2)`` this is ``int_x^inf (4/sqrt(pi)) y^2 e^{-y^2} dy
    = erfc(x) + (2x/sqrt(pi)) e^{-x^2}``; other sigmas follow by scaling.
    """
    z = np.maximum(np.asarray(x, dtype=float), 0.0) / (sigma * math.sqrt(2.0))
    return erfc(z) + 2.0 * z / SQRT_PI * np.exp(-z * z)


def sb_rayleigh_cdf(x, sigma: float = 1 / math.sqrt(2)):
    return 1.0 - sb_rayleigh_tail(x, sigma)


def sb_rayleigh_mean(sigma: float = 1 / math.sqrt(2)) -> float:
    """``E[X^2]/E[X]`` for ``X ~ R(sigma)``: ``sigma * 2 sqrt(2/pi)``."""
    return sigma * 2.0 * math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    slope_se: float


def least_squares(x, y) -> Fit:
    """Ordinary least squares ``y = a + b x`` with the standard error of ``b``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([np.ones_like(x), x]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    n = x.size
    if n > 2:
        resid = y - A @ coef
        s2 = float(resid @ resid) / (n - 2)
        se = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    else:
        se = float("nan")
    return Fit(float(coef[1]), float(coef[0]), se)
