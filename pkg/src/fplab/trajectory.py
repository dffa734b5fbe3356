"""Solver configuration and time-sampled solution containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .spectrum import SizeSpectrum, from_dense

SCALAR_SERIES = ("m0", "Phi", "theta", "wstar", "phi")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings shared by the deterministic solvers.

    Parameters
    ----------
    K : int
        Spectrum truncation (sizes 1..K are integrated exactly).
    h : float
        Maximal time step.
    T : float
        Horizon.
    schedule : tuple of (t_start, lam)
        Piecewise-constant lightning rate; the first entry starts at 0.
    spectra_at : tuple of float or None
        Times at which ``v_k`` snapshots are stored; ``None`` means ``(T,)``
        and an empty tuple skips the spectrum integration entirely.
    """

    K: int = 200
    h: float = 1e-3
    T: float = 3.0
    schedule: tuple = ((0.0, 0.0),)
    quad_tol: float = 1e-10
    seed: int = 0
    spectra_at: tuple | None = None
    richardson: bool = True

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError("K", f"must be a positive integer, got {self.K}")
        if not self.h > 0:
            raise ConfigError("h", f"must be positive, got {self.h}")
        if not self.T > 0:
            raise ConfigError("T", f"must be positive, got {self.T}")
        sched = tuple((float(a), float(b)) for a, b in self.schedule)
        if not sched or sched[0][0] != 0.0:
            raise ConfigError("schedule", "must start at t=0")
        starts = [a for a, _ in sched]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError("schedule", "breakpoints must be strictly increasing")
        if any(not lam >= 0 for _, lam in sched):
            raise ConfigError("schedule", "rates must be nonnegative")
        object.__setattr__(self, "schedule", sched)
        if self.spectra_at is not None:
            ts = tuple(sorted(float(t) for t in self.spectra_at))
            if any(t < 0 or t > self.T for t in ts):
                raise ConfigError("spectra_at", "snapshot times must lie in [0, T]")
            object.__setattr__(self, "spectra_at", ts)

    @property
    def snapshot_times(self) -> tuple:
        return (self.T,) if self.spectra_at is None else self.spectra_at

    def lam(self, t: float) -> float:
        """Right-continuous rate at ``t``."""
        out = self.schedule[0][1]
        for start, lam in self.schedule:
            if start <= t:
                out = lam
        return out

    def breakpoints(self) -> list[float]:
        return [a for a, _ in self.schedule[1:] if a < self.T]

    def lam_min_max(self) -> tuple[float, float]:
        vals = [lam for a, lam in self.schedule if a < self.T]
        return min(vals), max(vals)

    def integral_lambda(self, T: float | None = None) -> float:
        T = self.T if T is None else T
        tot = 0.0
        pts = list(self.schedule) + [(np.inf, 0.0)]
        for (a, lam), (b, _) in zip(pts, pts[1:]):
            lo, hi = a, min(b, T)
            if hi > lo:
                tot += lam * (hi - lo)
        return tot


@dataclass(frozen=True)
class BurnEvent:
    i: int
    bt: float
    theta: float
    gel_before: float


@dataclass(eq=False)
class Trajectory:
    """Scalar series on a grid plus optional spectrum snapshots.

    Burn instants appear twice in ``times`` with ``sides`` set to ``"pre"``
    and ``"post"``; all other rows have an empty side.  Series are
    left-continuous, so :meth:`value_at` returns the ``pre`` value at a burn.
    """

    times: np.ndarray
    sides: np.ndarray
    series: dict
    K: int
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    snapshots: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    burns: list = field(default_factory=list)
    gel_times: list = field(default_factory=list)
    int_Phi: float = float("nan")
    regime: str = ""
    noop_burns: list = field(default_factory=list)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.series[name]

    @property
    def m0(self):
        return self.series["m0"]

    @property
    def Phi(self):
        return self.series["Phi"]

    @property
    def theta(self):
        return self.series["theta"]

    @property
    def wstar(self):
        return self.series["wstar"]

    @property
    def phi(self):
        return self.series["phi"]

    def value_at(self, name: str, t: float) -> float:
        """Left-continuous linear interpolation of a scalar series."""
        y = self.series[name]
        pre = np.nonzero((self.sides == "pre") & (self.times == t))[0]
        if pre.size:
            return float(y[pre[0]])
        keep = self.sides != "pre"
        return float(np.interp(t, self.times[keep], y[keep]))

    def _snap_index(self, t: float) -> int:
        if self.snapshot_times.size == 0:
            raise KeyError("trajectory holds no spectrum snapshots")
        i = int(np.argmin(np.abs(self.snapshot_times - t)))
        if abs(self.snapshot_times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return i

    def v(self, t: float) -> np.ndarray:
        """Dense ``v_k(t)`` for ``k = 1..K`` (index ``k - 1``)."""
        return self.snapshots[self._snap_index(t)]

    def tails(self, t: float) -> np.ndarray:
        """``w_k(t) = sum_{l <= k} v_l(t)``."""
        return np.cumsum(self.v(t))

    def spectrum(self, t: float) -> SizeSpectrum:
        """Snapshot as a truncated spectrum that knows its exact sol mass."""
        m0 = self.value_at("m0", t)
        return from_dense(self.v(t), truncated=True, total_mass=m0)
