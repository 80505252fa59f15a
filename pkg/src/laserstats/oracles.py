"""Independent reference computations built directly from the event table.

Nothing here uses the closed forms in ``steady`` or the hand-built
linearization in ``langevin``; these routines exist to cross-check them.

* ``steady_by_root``: atomic populations from the null space of the atomic
  rate matrix at fixed m, then a scalar root in m of the photon balance.
* ``LinearNoise``: linear-noise expansion assembled generically from the
  event rates and jump vectors (drift Jacobian and diffusion matrix), with
  the photo-current spectrum from the resolvent and the photon variance
  from a Lyapunov equation.
* ``master_equation``: exact stationary distribution of the truncated jump
  process over every (n, m <= m_cap) state.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize, sparse
from scipy.sparse import linalg as splinalg

from .errors import ParameterError
from .model import (
    PHOTON_M,
    PHOTON_M_PLUS_1,
    LaserParams,
    event_table,
)


def _finite_events(params: LaserParams):
    events = event_table(params)
    for e in events:
        if not math.isfinite(e.coef):
            raise ParameterError("oracles need finite rate constants")
    return events


def _photon_factor(e, m):
    if e.photon_factor == PHOTON_M:
        return m
    if e.photon_factor == PHOTON_M_PLUS_1:
        return m + 1
    return 1.0


def _atomic_populations(params: LaserParams, events, m: float) -> np.ndarray:
    levels = params.scheme.levels
    pos = {lev: i for i, lev in enumerate(levels)}
    L = len(levels)
    G = np.zeros((L, L))
    for e in events:
        if e.source is None or e.target is None:
            continue
        k = e.coef * _photon_factor(e, m)
        G[pos[e.target], pos[e.source]] += k
        G[pos[e.source], pos[e.source]] -= k
    # replace one balance row by the normalization
    A = G.copy()
    A[0, :] = 1.0
    rhs = np.zeros(L)
    rhs[0] = params.N
    sol = np.linalg.solve(A, rhs)
    n = np.zeros(4)
    for lev, i in pos.items():
        n[lev] = sol[i]
    return n


def _photon_drift(params, events, n, m):
    return sum(e.dm * e.coef * (n[e.source] if e.source is not None else 1.0) * _photon_factor(e, m)
               for e in events if e.dm != 0)


@dataclass(frozen=True)
class ReferenceSteady:
    populations: np.ndarray
    m: float


def steady_by_root(params: LaserParams) -> ReferenceSteady:
    """Mean-field fixed point with m > 0 (the +1 in the emission rate kept)."""
    events = _finite_events(params)
    if not params.P > 0:
        raise ParameterError("steady state needs P > 0")

    def g(m):
        return _photon_drift(params, events, _atomic_populations(params, events, m), m)

    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ParameterError("no bracket for the photon balance")
    lo = 0.0
    m = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    return ReferenceSteady(_atomic_populations(params, events, m), m)


class LinearNoise:
    """Linear-noise expansion around a mean-field state.

    State vector: (m, n_k for every scheme level except the pump source);
    the pump-source occupancy is N minus the others.
    """

    def __init__(self, params: LaserParams, steady: ReferenceSteady | None = None):
        self.params = params
        self.events = _finite_events(params)
        self.steady = steady if steady is not None else steady_by_root(params)
        src = params.scheme.pump_source
        self.free = [lev for lev in params.scheme.levels if lev != src]
        dim = 1 + len(self.free)
        col = {lev: 1 + i for i, lev in enumerate(self.free)}
        n, m = self.steady.populations, self.steady.m
        A = np.zeros((dim, dim))
        D = np.zeros((dim, dim))
        rates = []
        jumps = []
        for e in self.events:
            occ = n[e.source] if e.source is not None else 1.0
            f = _photon_factor(e, m)
            rate = e.coef * occ * f
            grad = np.zeros(dim)
            if e.photon_factor in (PHOTON_M, PHOTON_M_PLUS_1):
                grad[0] += e.coef * occ
            if e.source is not None:
                d_occ = e.coef * f
                if e.source == src:
                    grad[1:] -= d_occ
                else:
                    grad[col[e.source]] += d_occ
            delta = np.zeros(dim)
            delta[0] = e.dm
            dn, _ = e.delta
            for lev in self.free:
                delta[col[lev]] = dn[lev]
            A += np.outer(delta, grad)
            D += rate * np.outer(delta, delta)
            rates.append(rate)
            jumps.append(delta)
        self.A = A
        self.D = D
        self.rates = np.array(rates)
        self.jumps = np.array(jumps)
        self.detect = [e.kind for e in self.events].index("photon-absorption")

    def photocurrent_spectrum(self, omega) -> np.ndarray:
        """Shot-noise-normalized spectrum of the photon-absorption stream."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        alpha = self.params.alpha
        Q = alpha * self.steady.m
        dim = self.A.shape[0]
        out = np.empty(omega.size)
        for i, w in enumerate(omega):
            resp = np.linalg.solve(1j * w * np.eye(dim) - self.A, self.jumps.T)
            c = alpha * resp[0, :]
            c[self.detect] += 1.0
            out[i] = float(np.sum(self.rates * np.abs(c) ** 2) / Q)
        return out

    def covariance(self) -> np.ndarray:
        return linalg.solve_continuous_lyapunov(self.A, -self.D)

    def fano(self) -> float:
        return float(self.covariance()[0, 0] / self.steady.m)


@dataclass(frozen=True)
class MasterSolution:
    states: list  # (n tuple, m)
    probabilities: np.ndarray
    m_cap: int

    def photon_distribution(self) -> np.ndarray:
        p = np.zeros(self.m_cap + 1)
        for (n, m), w in zip(self.states, self.probabilities):
            p[m] += w
        return p


def thermal_cap(mean: float, tail: float = 1e-9) -> int:
    """Smallest cap whose geometric tail mass (mean/(mean+1))^cap is at most ``tail``."""
    if mean <= 0:
        return 1
    q = mean / (mean + 1.0)
    return max(1, int(math.ceil(math.log(tail) / math.log(q))))


def master_equation(params: LaserParams, m_cap: int) -> MasterSolution:
    """Stationary distribution over (n, m) with m truncated at ``m_cap``.

    Transitions that would leave the box are removed, which is a reflecting
    truncation; the cap must make the missing tail negligible.
    """
    events = _finite_events(params)
    levels = params.scheme.levels
    N = params.N
    occ = []
    for combo in itertools.product(range(N + 1), repeat=len(levels)):
        if sum(combo) == N:
            n = [0, 0, 0, 0]
            for lev, c in zip(levels, combo):
                n[lev] = c
            occ.append(tuple(n))
    states = [(n, m) for n in occ for m in range(m_cap + 1)]
    index = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    out_rate = np.zeros(len(states))
    for i, (n, m) in enumerate(states):
        for e in events:
            o = n[e.source] if e.source is not None else 1
            rate = e.coef * o * _photon_factor(e, m)
            if rate <= 0:
                continue
            dn, dm = e.delta
            new = (tuple(a + b for a, b in zip(n, dn)), m + dm)
            j = index.get(new)
            if j is None:
                continue
            rows.append(j)
            cols.append(i)
            vals.append(rate)
            out_rate[i] += rate
    S = len(states)
    G = sparse.csr_matrix((vals, (rows, cols)), shape=(S, S)) - sparse.diags(out_rate)
    G = G.tolil()
    G[0, :] = np.ones(S)
    rhs = np.zeros(S)
    rhs[0] = 1.0
    p = splinalg.spsolve(G.tocsc(), rhs)
    p = np.clip(p, 0.0, None)
    return MasterSolution(states, p / p.sum(), m_cap)
