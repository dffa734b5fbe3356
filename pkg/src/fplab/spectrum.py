"""Component-size mass sequences.

A :class:`SizeSpectrum` stores ``v_k`` (mass carried by components of size
``k``) sparsely as ascending integer sizes and nonnegative masses.  A spectrum
is either of finite support, or a truncation at ``K`` of an infinite sequence.
Truncations may carry ``total_mass``, the exact mass of the untruncated
sequence, so tail sums beyond ``K`` are recovered instead of undercounted.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    DivergentAtX,
    DuplicateKey,
    NegativeMass,
    NonPositiveSize,
    PreGelTime,
    ZeroFirstMoment,
)

FINITE = "finite_support"
TRUNCATED = "truncated"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SizeSpectrum:
    ks: np.ndarray
    vs: np.ndarray
    kind: str = FINITE
    K: int | None = None
    total_mass: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "ks", _frozen(np.asarray(self.ks, dtype=np.int64)))
        object.__setattr__(self, "vs", _frozen(np.asarray(self.vs, dtype=np.float64)))

    @property
    def truncated(self) -> bool:
        return self.kind == TRUNCATED

    @property
    def m0(self) -> float:
        return float(np.sum(self.vs))

    @property
    def max_size(self) -> int:
        return int(self.ks[-1]) if self.ks.size else 0

    def __len__(self) -> int:
        return int(self.ks.size)

    def dense(self, K: int | None = None) -> np.ndarray:
        """Masses as a dense array indexed ``k - 1`` for ``k = 1..K``."""
        K = self.max_size if K is None else int(K)
        out = np.zeros(K)
        sel = self.ks <= K
        out[self.ks[sel] - 1] = self.vs[sel]
        return out

    def mass(self, k: int) -> float:
        i = np.searchsorted(self.ks, k)
        if i < self.ks.size and self.ks[i] == k:
            return float(self.vs[i])
        return 0.0

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(k), float(v)) for k, v in zip(self.ks, self.vs)]

    def __repr__(self) -> str:
        tag = self.kind if self.K is None else f"{self.kind}({self.K})"
        return f"SizeSpectrum(n={len(self)}, m0={self.m0:.6g}, {tag})"


@dataclass(frozen=True)
class Moments:
    m0: float
    m1: float
    m2: float
    m3: float
    truncated: bool = False


@dataclass(frozen=True, eq=False)
class SizeBiasedPmf:
    ks: np.ndarray
    probs: np.ndarray

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def mean(self) -> float:
        return float(np.dot(self.ks.astype(float), self.probs))


def make_spectrum(pairs: Iterable[tuple[int, float]]) -> SizeSpectrum:
    """Validate ``(k, v_k)`` pairs and build a finite-support spectrum."""
    seen = set()
    ks, vs = [], []
    for k, v in pairs:
        if int(k) != k or k < 1:
            raise NonPositiveSize(f"size {k!r} is not a positive integer")
        if not v >= 0 or not math.isfinite(v):
            raise NegativeMass(f"mass {v!r} at size {k} is not a finite nonnegative number")
        if k in seen:
            raise DuplicateKey(f"size {k} appears twice")
        seen.add(k)
        if v > 0:
            ks.append(int(k))
            vs.append(float(v))
    order = np.argsort(ks, kind="stable")
    return SizeSpectrum(np.asarray(ks, dtype=np.int64)[order], np.asarray(vs)[order])


def monodisperse(mass: float = 1.0) -> SizeSpectrum:
    return make_spectrum([(1, mass)])


def from_dense(v: np.ndarray, *, truncated: bool = False,
               total_mass: float | None = None) -> SizeSpectrum:
    """Spectrum from a dense array indexed ``k - 1``; zero masses are dropped."""
    v = np.asarray(v, dtype=np.float64)
    nz = np.nonzero(v)[0]
    if truncated:
        return SizeSpectrum(nz + 1, v[nz], TRUNCATED, K=int(v.size), total_mass=total_mass)
    return SizeSpectrum(nz + 1, v[nz])


def moments(spec: SizeSpectrum) -> Moments:
    k = spec.ks.astype(np.float64)
    v = spec.vs
    return Moments(
        m0=float(np.sum(v)),
        m1=float(np.sum(k * v)),
        m2=float(np.sum(k * k * v)),
        m3=float(np.sum(k * k * k * v)),
        truncated=spec.truncated,
    )


def laplace_V(spec: SizeSpectrum, x: float, order: int = 0) -> float:
    """n-th x-derivative of ``V(x) = sum_k v_k exp(-k x)``.

    ``order=1`` returns ``V'`` (negative) and ``order=2`` returns ``V''``.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    if spec.truncated and x <= 0:
        raise DivergentAtX(f"truncated spectrum: Laplace transform needs x > 0, got {x}")
    k = spec.ks.astype(np.float64)
    return float(np.sum((-k) ** order * spec.vs * np.exp(-k * x)))


def tail_mass(spec: SizeSpectrum, K: int) -> float:
    """Mass in components of size ``>= K``.

    When a truncated spectrum knows its untruncated ``total_mass`` the tail is
    ``total_mass - sum_{k<K} v_k`` and so includes mass beyond the truncation.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if spec.truncated and spec.total_mass is not None:
        below = spec.vs[spec.ks < K]
        return float(spec.total_mass - np.sum(below))
    return float(np.sum(spec.vs[spec.ks >= K]))


def borel_log_masses(k: np.ndarray) -> np.ndarray:
    """``log(k^(k-1) e^(-k) / k!)`` for integer sizes ``k``."""
    k = np.asarray(k, dtype=np.float64)
    return (k - 1.0) * np.log(k) - k - gammaln(k + 1.0)


def borel_spectrum(t: float, K: int) -> SizeSpectrum:
    """Post-gel critical spectrum from unit monodisperse mass, truncated at ``K``."""
    if t < 1:
        raise PreGelTime(f"Borel form holds for t >= 1, got t={t}")
    if K < 1:
        raise ValueError("K must be >= 1")
    k = np.arange(1, K + 1)
    v = np.exp(borel_log_masses(k) - math.log(t))
    return SizeSpectrum(k, v, TRUNCATED, K=int(K), total_mass=1.0 / t)


def tilt(spec: SizeSpectrum, x_star: float) -> SizeSpectrum:
    """Exponential tilt ``v_k -> v_k exp(-k x_star)``."""
    v = spec.vs * np.exp(-spec.ks.astype(np.float64) * x_star)
    # the exact untruncated mass does not survive a tilt
    return SizeSpectrum(spec.ks, v, spec.kind, K=spec.K, total_mass=None)


def size_biased_pmf(spec: SizeSpectrum) -> SizeBiasedPmf:
    w = spec.ks.astype(np.float64) * spec.vs
    m1 = float(np.sum(w))
    if not m1 > 0 or not math.isfinite(m1):
        raise ZeroFirstMoment("size-biased law needs 0 < m1 < inf")
    return SizeBiasedPmf(spec.ks, w / m1)


def spectra_close(a: SizeSpectrum, b: SizeSpectrum, tol: float = 1e-12) -> bool:
    """Max-norm comparison of masses over the union of supports."""
    K = max(a.max_size, b.max_size)
    return bool(np.max(np.abs(a.dense(K) - b.dense(K)), initial=0.0) <= tol)


def write_spectrum_csv(spec: SizeSpectrum, path: str | PathLike | io.TextIOBase) -> None:
    def _emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "v"])
        for k, v in zip(spec.ks, spec.vs):
            w.writerow([int(k), repr(float(v))])

    if isinstance(path, io.TextIOBase):
        _emit(path)
    else:
        with open(path, "w", newline="") as fh:
            _emit(fh)


def read_spectrum_csv(path: str | PathLike | io.TextIOBase) -> SizeSpectrum:
    def _parse(fh) -> list[tuple[int, float]]:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["k", "v"]:
            raise ValueError("spectrum CSV must start with header 'k,v'")
        out = []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            try:
                out.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: cannot parse {row!r}") from exc
        return out

    if isinstance(path, io.TextIOBase):
        return make_spectrum(_parse(path))
    with open(path, newline="") as fh:
        return make_spectrum(_parse(fh))


def parse_spectrum_source(src: str) -> SizeSpectrum:
    """``mono:<mass>``, inline ``k:v,k:v`` pairs, or a CSV path."""
    if src.startswith("mono:"):
        return monodisperse(float(src[5:]))
    if src.startswith("pairs:"):
        items: Sequence[str] = [p for p in src[6:].split(",") if p]
        return make_spectrum((int(a), float(b)) for a, b in (p.split(":") for p in items))
    return read_spectrum_csv(src)
