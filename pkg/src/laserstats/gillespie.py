"""Exact event-by-event simulation of the laser plus detector jump process.

The event loop is compiled with numba.  Each step draws the waiting time
``ln(1/r) / sum(W)`` and picks the event kind with probability
``W_l / sum(W)`` by a linear cumulative scan (there are at most eight kinds).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numba
import numpy as np

from .errors import ParameterError, SimulationError
from .model import (
    EVENT_KINDS,
    KIND_INDEX,
    LaserParams,
    MicroState,
    cold_start,
    event_table,
    pack,
)


@dataclass(frozen=True)
class SimConfig:
    """Run settings.

    ``burn_in=None`` selects ``max(10 / alpha, 0.05 * duration)``.
    ``check_every`` is the stride (in events) of the conservation check;
    1 checks every step.
    """

    duration: float
    burn_in: Optional[float] = None
    seed: int = 0
    run_index: int = 0
    record_m: bool = False
    m_hist_size: int = 0
    n_batches: int = 1
    check_every: int = 4096

    def __post_init__(self):
        if not self.duration > 0 or not math.isfinite(self.duration):
            raise ParameterError(f"duration must be positive and finite, got {self.duration}")
        if self.burn_in is not None and not 0 <= self.burn_in < self.duration:
            raise ParameterError("need 0 <= burn_in < duration")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must fit in 64 unsigned bits")
        if self.run_index < 0:
            raise ParameterError("run_index must be >= 0")
        if self.n_batches < 1 or self.check_every < 1 or self.m_hist_size < 0:
            raise ParameterError("n_batches and check_every must be >= 1, m_hist_size >= 0")

    def resolved_burn_in(self, params: LaserParams) -> float:
        if self.burn_in is not None:
            return float(self.burn_in)
        b = max(10.0 / params.alpha, 0.05 * self.duration)
        if b >= self.duration:
            raise ParameterError(
                f"default burn-in {b:g} is not shorter than the duration {self.duration:g}"
            )
        return b


@dataclass
class Trajectory:
    detection_times: np.ndarray
    m_time_average: float
    m_second_moment_time_average: float
    event_counts: dict
    effective_duration: float
    burn_in: float
    duration: float
    n_events: int
    final_state: MicroState
    m_at_detection: Optional[np.ndarray] = None
    m_histogram: Optional[np.ndarray] = None
    batch_counts: Optional[np.ndarray] = field(default=None, repr=False)
    batch_m: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m_variance(self) -> float:
        return self.m_second_moment_time_average - self.m_time_average**2


def rng_for(seed: int, run_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(run_index),))))


@numba.njit(cache=True)
def _fill_rates(n, m, coef, source, pfac, rates):
    total = 0.0
    for k in range(coef.shape[0]):
        src = source[k]
        occ = 1.0 if src < 0 else float(n[src])
        f = pfac[k]
        if f == 1:
            occ *= m
        elif f == 2:
            occ *= m + 1
        r = coef[k] * occ
        rates[k] = r
        total += r
    return total


@numba.njit(cache=True)
def _pick(rates, total, u):
    target = u * total
    acc = 0.0
    last = -1
    for k in range(rates.shape[0]):
        if rates[k] > 0.0:
            last = k
        acc += rates[k]
        if target < acc:
            return k
    return last  # rounding at the top end of the scan


@numba.njit(cache=True)
def _run(n, m, N, coef, source, pfac, dn, dm, detect, duration, burn_in, rng,
         record_m, hist_size, n_batches, check_every):
    K = coef.shape[0]
    rates = np.empty(K)
    counts = np.zeros((n_batches, K), dtype=np.int64)
    batch_m = np.zeros(n_batches)
    hist = np.zeros(hist_size + 1 if hist_size > 0 else 0)
    cap = 1024
    times = np.empty(cap)
    mdet = np.empty(cap if record_m else 0, dtype=np.int64)
    ndet = 0
    blen = (duration - burn_in) / n_batches
    t = 0.0
    s1 = 0.0
    s2 = 0.0
    nev = 0
    while True:
        total = _fill_rates(n, m, coef, source, pfac, rates)
        if not total > 0.0:
            raise SimulationError("total event rate is zero: the chain is frozen")
        r = 1.0 - rng.random()
        t_next = t + math.log(1.0 / r) / total
        if not math.isfinite(t_next):
            raise SimulationError("non-finite event time")
        lo = t if t > burn_in else burn_in
        hi = t_next if t_next < duration else duration
        if hi > lo:
            w = hi - lo
            s1 += w * m
            s2 += w * m * m
            if hist_size > 0:
                hist[m if m < hist_size else hist_size] += w
            while lo < hi:
                b = int((lo - burn_in) / blen)
                if b >= n_batches:
                    b = n_batches - 1
                edge = burn_in + (b + 1) * blen
                seg_end = edge
                if b == n_batches - 1 or edge >= hi or edge <= lo:
                    seg_end = hi
                batch_m[b] += (seg_end - lo) * m
                lo = seg_end
        if t_next > duration:
            break
        k = _pick(rates, total, rng.random())
        t = t_next
        if t > burn_in:
            b = int((t - burn_in) / blen)
            if b >= n_batches:
                b = n_batches - 1
            counts[b, k] += 1
            if k == detect:
                if ndet == cap:
                    cap *= 2
                    grown = np.empty(cap)
                    grown[:ndet] = times[:ndet]
                    times = grown
                    if record_m:
                        gm = np.empty(cap, dtype=np.int64)
                        gm[:ndet] = mdet[:ndet]
                        mdet = gm
                times[ndet] = t
                if record_m:
                    mdet[ndet] = m
                ndet += 1
        for j in range(n.shape[0]):
            n[j] += dn[k, j]
        m += dm[k]
        nev += 1
        if nev % check_every == 0:
            tot = 0
            for j in range(n.shape[0]):
                if n[j] < 0:
                    raise SimulationError("negative occupancy")
                tot += n[j]
            if tot != N or m < 0:
                raise SimulationError("atom number or photon number invariant broken")
    if record_m:
        mdet = mdet[:ndet].copy()
    return times[:ndet].copy(), mdet, counts, s1, s2, hist, batch_m, m, nev


def _prepare(params: LaserParams, initial: Optional[MicroState]):
    table = pack(event_table(params))
    state = initial if initial is not None else cold_start(params)
    if not state.is_valid(params.N):
        raise ParameterError(f"initial state {state} is not a valid state for N={params.N}")
    return table, state


def simulate(params: LaserParams, cfg: SimConfig, initial: Optional[MicroState] = None) -> Trajectory:
    """One exact trajectory from ``initial`` (default: cold start)."""
    table, state = _prepare(params, initial)
    burn_in = cfg.resolved_burn_in(params)
    n = np.array(state.n, dtype=np.int64)
    detect = int(np.flatnonzero(table.kind == KIND_INDEX["photon-absorption"])[0])
    times, mdet, counts, s1, s2, hist, batch_m, m_end, nev = _run(
        n, np.int64(state.m), np.int64(params.N), table.coef, table.source, table.photon_factor,
        table.dn, table.dm, detect, float(cfg.duration), burn_in, rng_for(cfg.seed, cfg.run_index),
        cfg.record_m, cfg.m_hist_size, cfg.n_batches, cfg.check_every,
    )
    eff = cfg.duration - burn_in
    totals = counts.sum(axis=0)
    event_counts = {kind: 0 for kind in EVENT_KINDS}
    batch = np.zeros((cfg.n_batches, len(EVENT_KINDS)), dtype=np.int64)
    for col, kind_idx in enumerate(table.kind):
        event_counts[EVENT_KINDS[kind_idx]] = int(totals[col])
        batch[:, kind_idx] = counts[:, col]
    if int(n.sum()) != params.N:
        raise SimulationError("atom number not conserved")
    return Trajectory(
        detection_times=times,
        m_time_average=s1 / eff,
        m_second_moment_time_average=s2 / eff,
        event_counts=event_counts,
        effective_duration=eff,
        burn_in=burn_in,
        duration=float(cfg.duration),
        n_events=int(nev),
        final_state=MicroState(tuple(int(x) for x in n), int(m_end)),
        m_at_detection=mdet if cfg.record_m else None,
        m_histogram=hist / eff if cfg.m_hist_size > 0 else None,
        batch_counts=batch,
        batch_m=batch_m / (eff / cfg.n_batches),
    )


def _simulate_one(args):
    params, cfg = args
    return simulate(params, cfg)


def simulate_runs(params: LaserParams, cfg: SimConfig, runs: int, workers: int = 1) -> list[Trajectory]:
    """``runs`` independent trajectories with run indices 0..runs-1.

    Results are returned in run order whatever the completion order.
    """
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    jobs = [(params, _with_index(cfg, i)) for i in range(runs)]
    if workers <= 1 or runs == 1:
        return [_simulate_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_one, jobs))


def _with_index(cfg: SimConfig, run_index: int) -> SimConfig:
    return replace(cfg, run_index=run_index)


def fano_from_trajectory(traj: Trajectory) -> float:
    """Time-weighted var(m) / <m>."""
    mean = traj.m_time_average
    if not mean > 0:
        raise SimulationError("mean photon number is zero: the laser never lit")
    return max(traj.m_variance, 0.0) / mean


NET_RATES = {
    "J": ("pump-absorption", "pump-emission"),
    "R": ("coherent-emission", "coherent-absorption"),
    "S": ("spontaneous-decay", None),
    "U": ("upper-decay", None),
    "D": ("lower-decay", None),
    "Q": ("photon-absorption", None),
}


@dataclass(frozen=True)
class RateEstimates:
    """Per-kind mean rates and the net balance rates with batch-mean errors."""

    per_kind: dict
    net: dict
    net_stderr: dict
    batches: np.ndarray  # (n_batches, 6) net rates per batch in NET_RATES order


def mean_rates(traj: Trajectory) -> RateEstimates:
    if not traj.effective_duration > 0:
        raise SimulationError("no post-burn-in time recorded")
    per_kind = {k: c / traj.effective_duration for k, c in traj.event_counts.items()}
    net = {}
    for name, (plus, minus) in NET_RATES.items():
        net[name] = per_kind[plus] - (per_kind[minus] if minus else 0.0)
    nb = traj.batch_counts.shape[0]
    blen = traj.effective_duration / nb
    cols = []
    for plus, minus in NET_RATES.values():
        c = traj.batch_counts[:, KIND_INDEX[plus]].astype(float)
        if minus:
            c = c - traj.batch_counts[:, KIND_INDEX[minus]]
        cols.append(c / blen)
    batches = np.column_stack(cols)
    if nb > 1:
        se = batches.std(axis=0, ddof=1) / math.sqrt(nb)
    else:
        se = np.full(len(NET_RATES), np.nan)
    return RateEstimates(per_kind, net, dict(zip(NET_RATES, se)), batches)


# -- diagnostics -----------------------------------------------------------


@numba.njit(cache=True)
def _frozen_waits(n, m, coef, source, pfac, count, rng):
    rates = np.empty(coef.shape[0])
    total = _fill_rates(n, m, coef, source, pfac, rates)
    out = np.empty(count)
    for i in range(count):
        r = 1.0 - rng.random()
        out[i] = math.log(1.0 / r) / total
    return out, total


def frozen_waiting_times(params: LaserParams, state: MicroState, count: int, seed: int = 0):
    """Waiting times drawn by the simulator's own kernel at a fixed state.

    Returns ``(samples, total_rate)``.
    """
    table = pack(event_table(params))
    n = np.array(state.n, dtype=np.int64)
    return _frozen_waits(n, np.int64(state.m), table.coef, table.source, table.photon_factor,
                         int(count), rng_for(seed, 0))


@numba.njit(cache=True)
def _trace(n, m, coef, source, pfac, dn, dm, kind, max_events, duration, rng):
    K = coef.shape[0]
    rates = np.empty(K)
    t_out = np.empty(max_events)
    k_out = np.empty(max_events, dtype=np.int64)
    s_out = np.empty((max_events, 1 + n.shape[0]), dtype=np.int64)
    t = 0.0
    i = 0
    while i < max_events:
        total = _fill_rates(n, m, coef, source, pfac, rates)
        if not total > 0.0:
            raise SimulationError("total event rate is zero: the chain is frozen")
        r = 1.0 - rng.random()
        t += math.log(1.0 / r) / total
        if t > duration:
            break
        k = _pick(rates, total, rng.random())
        for j in range(n.shape[0]):
            n[j] += dn[k, j]
        m += dm[k]
        t_out[i] = t
        k_out[i] = kind[k]
        s_out[i, 0] = m
        s_out[i, 1:] = n
        i += 1
    return t_out[:i].copy(), k_out[:i].copy(), s_out[:i].copy()


@dataclass(frozen=True)
class EventTrace:
    t: np.ndarray
    kind: np.ndarray  # index into EVENT_KINDS
    m: np.ndarray
    n: np.ndarray  # (events, 4)


def trace(params: LaserParams, cfg: SimConfig, max_events: int, initial: Optional[MicroState] = None) -> EventTrace:
    """Every event (post-event state) of a short run, for debugging dumps."""
    table, state = _prepare(params, initial)
    n = np.array(state.n, dtype=np.int64)
    t, k, s = _trace(n, np.int64(state.m), table.coef, table.source, table.photon_factor,
                     table.dn, table.dm, table.kind, int(max_events), float(cfg.duration),
                     rng_for(cfg.seed, cfg.run_index))
    return EventTrace(t, k, s[:, 0], s[:, 1:])


def write_trace_csv(path, tr: EventTrace) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,event_kind,m,n0,n1,n2,n3\n")
        for i in range(len(tr.t)):
            n = tr.n[i]
            fh.write(f"{tr.t[i]!r},{EVENT_KINDS[tr.kind[i]]},{tr.m[i]},{n[0]},{n[1]},{n[2]},{n[3]}\n")


def write_detection_times(path, times) -> None:
    with open(path, "w") as fh:
        for t in times:
            fh.write(f"{float(t)!r}\n")


def read_detection_times(path) -> np.ndarray:
    return np.loadtxt(path, dtype=float, ndmin=1)

