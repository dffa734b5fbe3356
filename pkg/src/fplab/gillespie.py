"""Exact stochastic simulation of finite-N frozen percolation.

Components are anonymous, so the state is the multiset of sizes, stored as
counts ``n_k``, with a Fenwick tree over the weights ``k n_k`` (keyed by size)
for O(log S0) size-biased sampling.

Clock: total rate ``R = S^2/(2N) + lam * mu * S`` with ``S`` the number of
alive vertices.  A coagulation proposal draws two components independently
with probability ``c/S`` each; drawing the same component twice is a rejected
proposal (time still advances), which leaves exactly rate ``c_i c_j / N`` per
unordered pair of distinct components.  A lightning draws one component with
probability ``c/S`` and removes it.

Keying the index by size means merges and burns never create or free slots:
the index has one cell per possible size ``1..S0`` and stays dense.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import EmptyAfterRounding, EmptyWindow, ConfigError
from .seeding import make_rng
from .spectrum import SizeSpectrum

MERGE, BURN, REJECT, NONE = 0, 1, 2, 3

# integer scalar state layout
_S, _Q, _N_SLOTS, _BURNT, _ALIVE, _CMAX, _MERGES, _BURNS, _REJECTS, _S0 = range(10)


# --------------------------------------------------------------------------
# Fenwick tree (1-based internal, 0-based slots)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _fw_build(tree, w, n):
    tree[:] = 0
    for i in range(1, n + 1):
        tree[i] += w[i - 1]
        j = i + (i & -i)
        if j <= n:
            tree[j] += tree[i]


@njit(cache=True, nogil=True)
def _fw_add(tree, n, slot, delta):
    i = slot + 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True, nogil=True)
def _fw_find(tree, n, r):
    """Slot whose cumulative weight interval contains integer ``r``."""
    pos = 0
    mask = 1
    while mask * 2 <= n:
        mask *= 2
    while mask > 0:
        nxt = pos + mask
        if nxt <= n and tree[nxt] <= r:
            pos = nxt
            r -= tree[nxt]
        mask //= 2
    return pos


# --------------------------------------------------------------------------
# engine
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _draw_size(tree, n, S, u):
    r = np.int64(u * S)
    if r >= S:
        r = S - 1
    return _fw_find(tree, n, r) + 1


@njit(cache=True, nogil=True)
def _remove(tree, counts, sc, k):
    counts[k] -= 1
    _fw_add(tree, sc[_N_SLOTS], k - 1, -k)


@njit(cache=True, nogil=True)
def _insert(tree, counts, sc, k):
    counts[k] += 1
    _fw_add(tree, sc[_N_SLOTS], k - 1, k)


@njit(cache=True, nogil=True)
def _step(tree, counts, sc, N, lam_mu, rng, out):
    """One event of the jump chain; time is handled by the caller.

    ``out`` receives ``(kind, size_i, size_j, resulting size)``.  Two
    size-biased draws that land in the same size class ``k`` hit the same
    component with probability ``1/n_k``; that case is the rejection.
    """
    S = sc[_S]
    n = sc[_N_SLOTS]
    coag = S * (S / (2.0 * N))
    light = lam_mu * S
    u = rng.random() * (coag + light)
    if u < coag:
        ci = _draw_size(tree, n, S, u / coag)
        cj = _draw_size(tree, n, S, rng.random())
        if ci == cj and rng.random() * counts[ci] < 1.0:
            sc[_REJECTS] += 1
            out[0] = REJECT
            out[1] = ci
            out[2] = cj
            out[3] = ci
            return
        c = ci + cj
        _remove(tree, counts, sc, ci)
        _remove(tree, counts, sc, cj)
        _insert(tree, counts, sc, c)
        sc[_Q] += 2 * ci * cj
        sc[_ALIVE] -= 1
        if c > sc[_CMAX]:
            sc[_CMAX] = c
        sc[_MERGES] += 1
        out[0] = MERGE
        out[1] = ci
        out[2] = cj
        out[3] = c
    else:
        c = _draw_size(tree, n, S, (u - coag) / light)
        _remove(tree, counts, sc, c)
        sc[_S] -= c
        sc[_Q] -= c * c
        sc[_BURNT] += c
        sc[_ALIVE] -= 1
        if c == sc[_CMAX]:
            k = c
            while k > 0 and counts[k] == 0:
                k -= 1
            sc[_CMAX] = k
        sc[_BURNS] += 1
        out[0] = BURN
        out[1] = c
        out[2] = -1
        out[3] = c


@njit(cache=True, nogil=True)
def _rescan(tree, counts, sc):
    """Full invariant check; returns an error code (0 = consistent)."""
    n = sc[_N_SLOTS]
    S = np.int64(0)
    Q = np.int64(0)
    alive = 0
    cmax = 0
    for k in range(1, counts.size):
        c = counts[k]
        if c < 0:
            return 1
        if c > 0:
            S += k * c
            Q += k * k * c
            alive += c
            cmax = k
    if S != sc[_S]:
        return 2
    if Q != sc[_Q]:
        return 3
    if alive != sc[_ALIVE]:
        return 4
    if S + sc[_BURNT] != sc[_S0]:
        return 5
    if cmax != sc[_CMAX]:
        return 6
    # the index must reproduce every prefix sum of k * n_k
    acc = np.int64(0)
    for k in range(1, n + 1):
        acc += k * counts[k]
        tot = np.int64(0)
        i = k
        while i > 0:
            tot += tree[i]
            i -= i & -i
        if tot != acc:
            return 7
    return 0


@njit(cache=True, nogil=True)
def _grow(a, n):
    b = np.empty(max(2 * a.size, n + 1), dtype=a.dtype)
    b[: a.size] = a
    return b


@njit(cache=True, nogil=True)
def _observe(counts, sc, N, K_obs, w_row, mom_row):
    acc = 0.0
    kmax = sc[_CMAX]
    for k in range(1, K_obs + 1):
        if k <= kmax:
            acc += k * counts[k]
        w_row[k - 1] = acc / N
    m2 = 0.0
    for k in range(1, kmax + 1):
        if counts[k]:
            m2 += float(k) * k * k * counts[k]
    mom_row[0] = sc[_S] / N
    mom_row[1] = sc[_Q] / N
    mom_row[2] = m2 / N
    mom_row[3] = kmax
    mom_row[4] = sc[_BURNT] / N


@njit(cache=True, nogil=True)
def _run(tree, counts, sc, t0, N, mu, lam_starts, lam_vals, sample_times,
         K_obs, rng, debug, record):
    ns = sample_times.size
    W = np.zeros((ns, K_obs))
    M = np.zeros((ns, 5))
    bt = np.empty(1024)
    bs = np.empty(1024, dtype=np.int64)
    nb = 0
    et = np.empty(1024 if record else 1)
    ek = np.empty(1024 if record else 1, dtype=np.int64)
    es = np.empty(1024 if record else 1, dtype=np.int64)
    ne = 0
    out = np.zeros(4, dtype=np.int64)
    t = t0
    js = 0
    T = sample_times[-1] if ns else t0
    while js < ns and sample_times[js] <= t:
        _observe(counts, sc, N, K_obs, W[js], M[js])
        js += 1
    li = 0
    while li + 1 < lam_starts.size and lam_starts[li + 1] <= t:
        li += 1
    status = 0
    while js < ns:
        lam = lam_vals[li]
        t_break = lam_starts[li + 1] if li + 1 < lam_starts.size else np.inf
        S = sc[_S]
        R = S * (S / (2.0 * N)) + lam * mu * S
        if R > 0.0:
            dt = -math.log(1.0 - rng.random()) / R
        else:
            dt = np.inf
        t_new = t + dt
        horizon = min(t_break, T)
        if t_new >= horizon:
            # no event before the next rate change or the horizon: observe and redraw
            while js < ns and sample_times[js] <= horizon:
                _observe(counts, sc, N, K_obs, W[js], M[js])
                js += 1
            t = horizon
            if t_break <= horizon:
                li += 1
            continue
        while js < ns and sample_times[js] < t_new:
            _observe(counts, sc, N, K_obs, W[js], M[js])
            js += 1
        t = t_new
        _step(tree, counts, sc, N, lam * mu, rng, out)
        if out[0] == BURN:
            if nb == bt.size:
                bt = _grow(bt, nb)
                bs = _grow(bs, nb)
            bt[nb] = t
            bs[nb] = out[3]
            nb += 1
        if record and out[0] != REJECT:
            if ne == et.size:
                et = _grow(et, ne)
                ek = _grow(ek, ne)
                es = _grow(es, ne)
            et[ne] = t
            ek[ne] = out[0]
            es[ne] = out[3]
            ne += 1
        if debug:
            status = _rescan(tree, counts, sc)
            if status:
                break
    return W, M, bt[:nb], bs[:nb], et[:ne], ek[:ne], es[:ne], t, status


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Regime:
    """Lightning regime: ``mu(N) = N^-alpha`` and a piecewise-constant rate.

    ``alpha = 0`` is subcritical, ``0 < alpha < 1`` critical and ``alpha = 1``
    alternating.
    """

    alpha: float = 0.5
    schedule: tuple = ((0.0, 1.0),)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha", f"must lie in [0, 1], got {self.alpha}")
        sched = tuple((float(a), float(b)) for a, b in self.schedule)
        if not sched or sched[0][0] != 0.0 or any(b < 0 for _, b in sched):
            raise ConfigError("schedule", "must start at 0 with nonnegative rates")
        object.__setattr__(self, "schedule", sched)

    @classmethod
    def constant(cls, alpha: float, lam: float) -> "Regime":
        return cls(alpha, ((0.0, lam),))

    def mu(self, N: int) -> float:
        return float(N) ** (-self.alpha)

    @property
    def name(self) -> str:
        if self.alpha == 0.0:
            return "subcritical"
        if self.alpha == 1.0:
            return "alternating"
        return "critical"


@dataclass(eq=False)
class SimState:
    """Single-owner mutable state of one realisation."""

    tree: np.ndarray
    counts: np.ndarray
    sc: np.ndarray
    N: int
    regime: Regime
    rng: np.random.Generator
    t: float = 0.0

    @property
    def S(self) -> int:
        return int(self.sc[_S])

    @property
    def Q(self) -> int:
        return int(self.sc[_Q])

    @property
    def phi_burnt(self) -> float:
        return self.sc[_BURNT] / self.N

    @property
    def m0_initial(self) -> float:
        return self.sc[_S0] / self.N

    @property
    def n_components(self) -> int:
        return int(self.sc[_ALIVE])

    def component_sizes(self) -> np.ndarray:
        ks = np.nonzero(self.counts)[0]
        return np.repeat(ks, self.counts[ks])

    def lam(self) -> float:
        out = 0.0
        for start, lam in self.regime.schedule:
            if start <= self.t:
                out = lam
        return out

    def rates(self) -> tuple[float, float]:
        """(coagulation proposal rate, lightning rate)."""
        S = self.S
        return S * S / (2.0 * self.N), self.lam() * self.regime.mu(self.N) * S

    def rescan(self) -> int:
        return int(_rescan(self.tree, self.counts, self.sc))

    @property
    def counters(self) -> dict:
        return {"merges": int(self.sc[_MERGES]), "burns": int(self.sc[_BURNS]),
                "rejections": int(self.sc[_REJECTS])}


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    i: int = -1
    j: int = -1
    size: int = 0


def _initial_counts(spec0: SizeSpectrum, N: int) -> dict[int, int]:
    out = {}
    for k, v in zip(spec0.ks, spec0.vs):
        x = N * float(v) / int(k)
        n = int(math.floor(x))
        if x - n > 1 - 1e-9:  # guard against 24.9999999 for an exact 25
            n += 1
        if n > 0:
            out[int(k)] = n
    return out


def init_state(spec0: SizeSpectrum, N: int, regime: Regime, seed: int | np.random.Generator = 0) -> SimState:
    """``floor(N v_k / k)`` components of size k; the fractional remainder is dropped."""
    if int(N) != N or N < 1:
        raise ConfigError("N", f"must be a positive integer, got {N}")
    if spec0.truncated:
        raise ConfigError("init", "simulation needs a finite-support initial spectrum")
    N = int(N)
    nk = _initial_counts(spec0, N)
    if not nk:
        raise EmptyAfterRounding(f"N={N} leaves no component of any size")
    S0 = sum(k * n for k, n in nk.items())
    counts = np.zeros(S0 + 1, dtype=np.int64)
    for k, n in nk.items():
        counts[k] = n
    ks = np.arange(S0 + 1, dtype=np.int64)
    tree = np.zeros(S0 + 1, dtype=np.int64)
    _fw_build(tree, (ks * counts)[1:], S0)
    sc = np.zeros(10, dtype=np.int64)
    sc[_S] = S0
    sc[_Q] = sum(k * k * n for k, n in nk.items())
    sc[_N_SLOTS] = S0
    sc[_ALIVE] = sum(nk.values())
    sc[_CMAX] = max(nk)
    sc[_S0] = S0
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(int(seed))
    return SimState(tree, counts, sc, N, regime, rng)


def step(state: SimState) -> Event:
    """Advance by one clock ring of the thinned process."""
    S = state.S
    if S == 0:
        return Event("none", state.t)
    coag, light = state.rates()
    state.t += -math.log(1.0 - state.rng.random()) / (coag + light)
    out = np.zeros(4, dtype=np.int64)
    _step(state.tree, state.counts, state.sc, state.N,
          state.lam() * state.regime.mu(state.N), state.rng, out)
    kind = {MERGE: "merge", BURN: "burn", REJECT: "reject"}[int(out[0])]
    return Event(kind, state.t, int(out[1]), int(out[2]), int(out[3]))


@dataclass(eq=False)
class FrozenHistogram:
    """Burn records ``(time, size)`` of one run (or a pooled ensemble)."""

    times: np.ndarray
    sizes: np.ndarray
    N: int

    def window(self, t1: float, t2: float) -> np.ndarray:
        sel = (self.times >= t1) & (self.times <= t2)
        return self.sizes[sel]

    def mass_by_size(self, t1: float, t2: float) -> dict[int, float]:
        """``Phi^N([t1, t2], k)`` for every burnt size in the window."""
        ks, cnt = np.unique(self.window(t1, t2), return_counts=True)
        return {int(k): float(k * c) / self.N for k, c in zip(ks, cnt)}

    def binned(self, t_edges: Sequence[float]) -> list[tuple[float, int, float]]:
        """Rows ``(t_bin_start, k_bin_start, mass)``; sizes exact up to 1e4
        then in geometric bins of ratio 1.1."""
        rows = []
        t_edges = np.asarray(t_edges, dtype=float)
        for a, b in zip(t_edges[:-1], t_edges[1:]):
            sel = (self.times >= a) & (self.times < b)
            agg: dict[int, float] = {}
            for s in self.sizes[sel]:
                kb = size_bin(int(s))
                agg[kb] = agg.get(kb, 0.0) + float(s) / self.N
            rows.extend((float(a), kb, m) for kb, m in sorted(agg.items()))
        return rows


def size_bin(k: int) -> int:
    if k <= 10_000:
        return k
    j = int(math.floor(math.log(k / 10_000) / math.log(1.1)))
    lo = int(math.ceil(10_000 * 1.1 ** j))
    return lo if lo <= k else int(math.ceil(10_000 * 1.1 ** (j - 1)))


@dataclass(eq=False)
class SimOutput:
    sample_times: np.ndarray
    w: np.ndarray
    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    cmax: np.ndarray
    Phi: np.ndarray
    frozen: FrozenHistogram
    counters: dict
    N: int
    m0_initial: float
    seed: int | None = None
    wall_time: float = 0.0
    events: tuple | None = None

    @property
    def n_events(self) -> int:
        return sum(self.counters.values())

    @property
    def events_per_second(self) -> float:
        return self.n_events / self.wall_time if self.wall_time > 0 else float("nan")


def advance(state: SimState, sample_times: Sequence[float], K_obs: int = 10,
            debug: bool = False, record_events: bool = False) -> SimOutput:
    """Run an existing state through ``sample_times`` (observing at each)."""
    ts = np.ascontiguousarray(sample_times, dtype=np.float64)
    if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < state.t):
        raise ConfigError("sample_times", "must be increasing and not before the current time")
    starts = np.array([a for a, _ in state.regime.schedule])
    vals = np.array([b for _, b in state.regime.schedule])
    wall = time.perf_counter()
    W, M, bt, bs, et, ek, es, t_end, status = _run(
        state.tree, state.counts, state.sc, float(state.t), float(state.N),
        state.regime.mu(state.N), starts, vals, ts, int(K_obs), state.rng, bool(debug),
        bool(record_events))
    wall = time.perf_counter() - wall
    if status:
        raise AssertionError(f"invariant rescan failed with code {status} at t={t_end}")
    state.t = t_end
    return SimOutput(
        sample_times=ts, w=W, m0=M[:, 0], m1=M[:, 1], m2=M[:, 2],
        cmax=M[:, 3].astype(np.int64), Phi=M[:, 4],
        frozen=FrozenHistogram(bt, bs, state.N), counters=state.counters, N=state.N,
        m0_initial=state.m0_initial, wall_time=wall,
        events=(et, ek, es) if record_events else None,
    )


def run(spec0: SizeSpectrum, N: int, regime: Regime, seed: int,
        sample_times: Sequence[float], K_obs: int = 10, *, replica: int | None = None,
        debug: bool = False, record_events: bool = False) -> SimOutput:
    """One realisation observed at ``sample_times`` (the last one is the horizon)."""
    state = init_state(spec0, N, regime, make_rng(seed, replica))
    out = advance(state, sample_times, K_obs, debug, record_events)
    out.seed = seed
    return out


def run_replicas(spec0: SizeSpectrum, N: int, regime: Regime, seed: int, replicas: int,
                 sample_times: Sequence[float], K_obs: int = 10, jobs: int = 1) -> list[SimOutput]:
    """Independent replicas on streams ``(seed, r)``; results ordered by ``r``."""
    def one(r):
        return run(spec0, N, regime, seed, sample_times, K_obs, replica=r)

    if jobs <= 1:
        return [one(r) for r in range(replicas)]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(one, range(replicas)))


def ensemble_mean(outputs: Sequence[SimOutput], attr: str) -> np.ndarray:
    return np.mean([getattr(o, attr) for o in outputs], axis=0)


def pooled_frozen(outputs: Sequence[SimOutput]) -> FrozenHistogram:
    N = outputs[0].N
    return FrozenHistogram(np.concatenate([o.frozen.times for o in outputs]),
                           np.concatenate([o.frozen.sizes for o in outputs]), N)


@dataclass(frozen=True, eq=False)
class FrozenPmf:
    ks: np.ndarray
    probs: np.ndarray


def frozen_size_distribution(output: SimOutput | FrozenHistogram, t1: float, t2: float) -> FrozenPmf:
    """Mass-weighted law of burnt component sizes in ``[t1, t2]``."""
    if not t1 < t2:
        raise ConfigError("window", "need t1 < t2")
    hist = output.frozen if isinstance(output, SimOutput) else output
    sizes = hist.window(t1, t2)
    if sizes.size == 0:
        raise EmptyWindow(f"no burns in [{t1}, {t2}]")
    ks, cnt = np.unique(sizes, return_counts=True)
    mass = ks.astype(float) * cnt
    return FrozenPmf(ks, mass / mass.sum())
