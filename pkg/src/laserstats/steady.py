"""Closed-form steady states, lasing thresholds and pump saturation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonPhysicalStateError, NotLasingError, ParameterError
from .model import LaserParams, SchemeKind


def _inv(rate: float) -> float:
    return 0.0 if math.isinf(rate) else 1.0 / rate


@dataclass(frozen=True)
class DerivedParams:
    scriptN: float
    scriptP: float
    scriptB: float


@dataclass(frozen=True)
class SteadyState:
    """Mean populations, photon number and balanced rates.

    ``U`` is None for the Lambda scheme and ``D`` is None for the V scheme
    (no such transition).  ``large_m`` marks the variant where the
    spontaneous "+1" in the emission rate is dropped.
    """

    populations: np.ndarray
    m: float
    J: float
    R: float
    S: float
    U: Optional[float]
    D: Optional[float]
    Q: float
    derived: DerivedParams
    large_m: bool = False
    inversion: float = 0.0  # n2 - n1, kept exact (it cancels badly when m is large)

    @property
    def flux(self) -> float:
        """Net rate through the pump cycle (= J = R + S)."""
        return self.R + self.S

    def balance_residual(self) -> float:
        """Largest relative violation of J = U = D = R + S and Q = R."""
        x = self.flux
        scale = max(abs(x), abs(self.Q), 1e-300)
        terms = [self.J - x, self.Q - self.R]
        terms += [r - x for r in (self.U, self.D) if r is not None]
        return max(abs(t) for t in terms) / scale

    def rounding_floor(self) -> float:
        """Relative rounding error expected in R from its cancelling terms."""
        n = self.populations
        emit = self.m if self.large_m else self.m + 1
        gross = emit * n[2] + self.m * n[1] + abs(self.J) + abs(self.S)
        return 64 * np.finfo(float).eps * gross / max(abs(self.Q), 1e-300)


def derived_params(params: LaserParams) -> DerivedParams:
    s = params.scheme
    P, ell, pu, pd, g = params.P, params.ell, params.p_u, params.p_d, params.gamma
    if P <= 0:
        raise ParameterError("steady state needs P > 0")
    if s is SchemeKind.Four4:
        NN = params.N / params.alpha
        PP = 1.0 / (1.0 / P + 2.0 * _inv(pd) + (1 + ell) * _inv(pu))
        B = PP * (NN - 1 + (1 + g - NN * g) * _inv(pd)) - g - 1
    elif s is SchemeKind.Lambda3:
        NN = params.N / params.alpha
        PP = 1.0 / (1.0 / P + (2 + ell) * _inv(pd))
        B = PP * (NN - 1 - ell + ((1 + ell) * (1 + g) - NN * g) * _inv(pd)) - 1 - g
    else:
        NN = params.N / (2 * params.alpha)
        PP = 1.0 / (1.0 / P + (1 + 2 * ell) * _inv(pu) / 2)
        if math.isinf(pu):
            # limit of the V-scheme expression as p_u -> infinity
            B = PP * (2 * NN - 1) / 2 - 0.5 - g / 2 - NN * g
        else:
            B = PP / (4 * pu) * ((2 * NN - 1) * (g + 2 * pu) - 1) - 0.5 - g / 2 - NN * g
    return DerivedParams(NN, PP, B)


def _check_decays(params: LaserParams) -> None:
    s = params.scheme
    if s.has_lower_decay and params.p_d <= 0:
        raise ParameterError("steady state needs p_d > 0")
    if s.has_upper_decay and params.p_u <= 0:
        raise ParameterError("steady state needs p_u > 0")


def _lower_per_flux(params: LaserParams) -> float:
    """n1 per unit cycle flux."""
    if params.scheme is SchemeKind.V3:
        return 1.0 / params.P + params.ell * _inv(params.p_u)
    return _inv(params.p_d)


def _population_weights(params: LaserParams) -> tuple[float, float]:
    """(k, h) with sum of populations = k x + h n2 for cycle flux x."""
    P, ell, pu_inv = params.P, params.ell, _inv(params.p_u)
    if params.scheme is SchemeKind.Four4:
        return 1.0 / P + (1 + ell) * pu_inv + _inv(params.p_d), 1.0
    if params.scheme is SchemeKind.Lambda3:
        return 1.0 / P + _inv(params.p_d), 1.0 + ell
    return _lower_per_flux(params) + pu_inv, 1.0


def _clamped_flux(params: LaserParams, dp: DerivedParams) -> float:
    """Cycle flux when the gain is clamped at n2 - n1 = alpha (m+1 -> m)."""
    N, a, ell = params.N, params.alpha, params.ell
    if params.scheme is SchemeKind.Four4:
        return (N - a) * dp.scriptP
    if params.scheme is SchemeKind.Lambda3:
        return (N - (1 + ell) * a) * dp.scriptP
    return (N - a) * dp.scriptP / 2


def photon_number(dp: DerivedParams) -> float:
    """Larger root of m^2 - B m - P N = 0, written to avoid cancellation."""
    B, PN = dp.scriptB, dp.scriptP * dp.scriptN
    root = math.sqrt(B * B + 4 * PN)
    if B >= 0:
        return 0.5 * (B + root)
    return 2 * PN / (root - B)


def solve_steady(params: LaserParams, large_m: bool = False) -> SteadyState:
    """Steady state of the rate equations for ``params``.

    The photon number comes from the closed-form quadratic root; the
    populations follow by back-substitution through the cycle flux
    x = J = R + S, with n2 and x fixed by the 2x2 system
    ``x - gamma n2 = alpha m`` and ``(m+1) n2 - m n1(x) = alpha m``.

    With ``large_m`` the emission rate uses m instead of m+1; the gain is
    then clamped (n2 - n1 = alpha) and the state exists only above
    threshold (NotLasingError otherwise).
    """
    _check_decays(params)
    dp = derived_params(params)
    a, g, P, ell = params.alpha, params.gamma, params.P, params.ell
    c1 = _lower_per_flux(params)
    if large_m:
        x = _clamped_flux(params, dp)
        n2 = c1 * x + a
        m = (x - g * n2) / a
        if not m > 0:
            raise NotLasingError("below threshold: no clamped-gain steady state")
        emit = m
    else:
        m = photon_number(dp)
        det = (m + 1) - g * m * c1
        # atom conservation gives a second route, N = k x + h n2; use whichever
        # cancels less (the gain route degrades below threshold, this one in saturation)
        k, h = _population_weights(params)
        slack = params.N - k * a * m
        if det / (m + 1) >= slack / params.N:
            n2 = a * m * (1 + m * c1) / det
        else:
            n2 = slack / (k * g + h)
        x = a * m + g * n2
        emit = m + 1
    n1 = c1 * x
    pu_inv = _inv(params.p_u)
    s = params.scheme
    n = np.zeros(4)
    if s is SchemeKind.Four4:
        n[:] = (x / P + ell * x * pu_inv, n1, n2, x * pu_inv)
    elif s is SchemeKind.Lambda3:
        n[:] = ((x + ell * P * n2) / P, n1, n2, 0.0)
    else:
        n[:] = (0.0, n1, n2, x * pu_inv)

    src, dst = s.pump_source, s.pump_target
    J = P * n[src] - ell * P * n[dst]
    R = emit * n[2] - m * n[1]
    S = g * n[2]
    U = None
    D = None
    if s.has_upper_decay:
        U = x if math.isinf(params.p_u) else params.p_u * n[3]
    if s.has_lower_decay:
        D = x if math.isinf(params.p_d) else params.p_d * n[1]
    inversion = a if large_m else a - n2 / m
    ss = SteadyState(n, m, J, R, S, U, D, a * m, dp, large_m, inversion)

    N = params.N
    if n.min() < -1e-9 * N or abs(n.sum() - N) > 1e-9 * N or not m >= 0:
        raise NonPhysicalStateError(
            f"inconsistent steady state: populations={n.tolist()}, m={m}"
        )
    if ss.balance_residual() > 1e-10 + ss.rounding_floor():
        raise NonPhysicalStateError(f"rate balance violated: {ss}")
    return ss


def threshold_gamma(params: LaserParams) -> float:
    """Largest spontaneous decay rate for which the laser can oscillate."""
    s = params.scheme
    ell, pu, pd = params.ell, params.p_u, params.p_d
    if s is SchemeKind.Four4:
        NN = params.N / params.alpha
        denom = (NN + 1) * _inv(pd) + (1 + ell) * _inv(pu)
        return math.inf if denom == 0 else (NN - 1) / denom
    if s is SchemeKind.Lambda3:
        NN = params.N / params.alpha
        return (NN - 1 - ell) * pd / (NN + 1)
    NN = params.N / (2 * params.alpha)
    return (2 * NN - 1) * pu / (1 + ell + 2 * ell * NN)


def m_saturation(params: LaserParams) -> float:
    """Photon number in the infinite-pump limit (4-level scheme only)."""
    if params.scheme is not SchemeKind.Four4:
        raise ParameterError("saturation formula is available for the 4-level scheme only")
    NN = params.N / params.alpha
    g, pd = params.gamma, params.p_d
    return (NN - 1) * (pd - g) / ((1 + params.ell) * pd * _inv(params.p_u) + 2) - g


def _clamped_excess(params: LaserParams, P: float) -> float:
    """alpha * m of the gain-clamped model at pump P (negative: no lasing)."""
    p = params.replace(P=P)
    x = _clamped_flux(p, derived_params(p))
    return x - p.gamma * (_lower_per_flux(p) * x + p.alpha)


def threshold_pump(params: LaserParams, rtol: float = 1e-12) -> float:
    """Pump rate at which the linear part of m(P) extrapolates to zero.

    Found by bisection on the gain-clamped model (m+1 replaced by m).
    Returns 0 when any positive pump lases and ``inf`` when none does.
    """
    _check_decays(params)
    if params.gamma >= threshold_gamma(params):
        return math.inf
    if params.gamma == 0 and _clamped_excess(params, 1e-300) > 0:
        return 0.0
    hi = max(params.max_rate, 1.0)
    while _clamped_excess(params, hi) <= 0:
        hi *= 2
        if hi > 1e300:
            return math.inf
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _clamped_excess(params, mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi
