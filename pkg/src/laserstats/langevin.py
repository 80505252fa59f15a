"""Weak-noise (linearized Langevin) analysis of the laser rate equations.

Every rate splits into its steady value plus a first-order response to the
population and photon-number fluctuations plus a white Langevin force whose
spectral density equals the mean total jump rate.  At each Fourier
frequency the fluctuation balance equations form a small complex linear
system; its solution expresses the photo-current (or photon-number)
fluctuation as a linear combination of the six forces.

Variables are ordered ``[dm, dn0, dn1, dn2, dn3]``; forces ``j r s u d q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import NotLasingError, ParameterError, QuadratureError, SingularSystemError
from .model import LaserParams, SchemeKind
from .steady import SteadyState, _inv, derived_params, solve_steady

FORCES = ("j", "r", "s", "u", "d", "q")
_F = {z: i for i, z in enumerate(FORCES)}
_M = 0  # photon-number variable


def _var(level: int) -> int:
    return level + 1


@dataclass(frozen=True)
class LangevinWeights:
    sigma_j: float
    sigma_r: float
    sigma_s: float
    sigma_u: float
    sigma_d: float
    sigma_q: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma_j, self.sigma_r, self.sigma_s,
                         self.sigma_u, self.sigma_d, self.sigma_q])


@dataclass(frozen=True)
class NoiseCoefficients:
    omega: float
    target: str
    c: np.ndarray  # complex, one weight per force in FORCES

    def __getitem__(self, force: str) -> complex:
        return complex(self.c[_F[force]])


def langevin_weights(ss: SteadyState, params: LaserParams) -> LangevinWeights:
    """Spectral densities of the forces: total (not net) jump rates."""
    n = ss.populations
    s = params.scheme
    P, ell = params.P, params.ell
    emit = ss.m if ss.large_m else ss.m + 1
    sig_u = 0.0
    if s.has_upper_decay:
        sig_u = ss.flux if math.isinf(params.p_u) else params.p_u * n[3]
    sig_d = 0.0
    if s.has_lower_decay:
        sig_d = ss.flux if math.isinf(params.p_d) else params.p_d * n[1]
    return LangevinWeights(
        sigma_j=P * n[s.pump_source] + ell * P * n[s.pump_target],
        sigma_r=emit * n[2] + ss.m * n[1],
        sigma_s=params.gamma * n[2],
        sigma_u=sig_u,
        sigma_d=sig_d,
        sigma_q=params.alpha * ss.m,
    )


class _Linearization:
    """Drift matrix and force loadings of the fluctuation equations.

    The pump-source population is eliminated through atom conservation, so
    the frequency-domain system is ``(A - i omega I) x = -B f`` with square A.
    A level whose decay rate is infinite carries no population; it is
    dropped and its outflow equals its inflow.
    """

    def __init__(self, ss: SteadyState, params: LaserParams):
        s = params.scheme
        n = ss.populations
        m = ss.m
        P, ell, g, a = params.P, params.ell, params.gamma, params.alpha
        emit = m if ss.large_m else m + 1

        def rate(entries, force):
            v = np.zeros(5)
            for var, val in entries:
                v[var] += val
            f = np.zeros(6)
            if force is not None:
                f[_F[force]] = 1.0
            return v, f

        src, dst = s.pump_source, s.pump_target
        J = rate([(_var(src), P), (_var(dst), -ell * P)], "j")
        R = rate([(_M, ss.inversion), (_var(2), emit), (_var(1), -m)], "r")
        S = rate([(_var(2), g)], "s")
        Q = rate([(_M, a)], "q")

        def add(*terms):
            v = sum(sign * t[0] for sign, t in terms)
            f = sum(sign * t[1] for sign, t in terms)
            return v, f

        flows = {_M: [(1, R), (-1, Q)]}
        dropped = []
        if s is SchemeKind.Lambda3:
            D = add((1, R), (1, S)) if math.isinf(params.p_d) else rate([(_var(1), params.p_d)], "d")
            flows[_var(0)] = [(1, D), (-1, J)]
            flows[_var(1)] = [(1, R), (1, S), (-1, D)]
            flows[_var(2)] = [(1, J), (-1, R), (-1, S)]
            if math.isinf(params.p_d):
                dropped.append(_var(1))
        else:
            U = J if math.isinf(params.p_u) else rate([(_var(3), params.p_u)], "u")
            if s is SchemeKind.Four4:
                D = add((1, R), (1, S)) if math.isinf(params.p_d) else rate([(_var(1), params.p_d)], "d")
                flows[_var(0)] = [(1, D), (-1, J)]
                flows[_var(1)] = [(1, R), (1, S), (-1, D)]
                if math.isinf(params.p_d):
                    dropped.append(_var(1))
            else:
                flows[_var(1)] = [(1, R), (1, S), (-1, J)]
            flows[_var(2)] = [(1, U), (-1, R), (-1, S)]
            flows[_var(3)] = [(1, J), (-1, U)]
            if math.isinf(params.p_u):
                dropped.append(_var(3))

        elim = _var(src)
        keep = [k for k in sorted(flows) if k != elim and k not in dropped]
        A = np.zeros((len(keep), len(keep)))
        B = np.zeros((len(keep), 6))
        for row, k in enumerate(keep):
            v, f = add(*flows[k])
            v = v.copy()
            for col in keep:
                if col != _M:
                    v[col] -= v[elim]
            A[row] = v[keep]
            B[row] = f
        self.A = A
        self.B = B
        self.keep = keep

    def solve(self, omega: np.ndarray) -> np.ndarray:
        """Response of every kept variable to every force, shape (n_omega, nv, 6)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        eye = np.eye(len(self.keep))
        M = self.A[None, :, :] - 1j * omega[:, None, None] * eye
        cond = np.linalg.cond(M)
        if not np.all(np.isfinite(cond)) or np.any(cond > 1e14):
            raise SingularSystemError(
                f"fluctuation system is singular (condition number {np.max(cond):.3g})"
            )
        rhs = np.broadcast_to(-self.B, (len(omega),) + self.B.shape)
        return np.linalg.solve(M, rhs)

    def relaxation_rates(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


class LangevinModel:
    """Linearized noise model of one parameter set.

    ``large_m=True`` drops the spontaneous "+1" of the emission rate, which
    is the approximation behind the printed gamma = 0 closed forms.
    """

    def __init__(self, params: LaserParams, large_m: bool = False, steady: Optional[SteadyState] = None):
        self.params = params
        self.steady = steady if steady is not None else solve_steady(params, large_m=large_m)
        if not self.steady.m > 0:
            raise NotLasingError("no photons in the cavity; nothing to linearize")
        self.weights = langevin_weights(self.steady, params)
        self._sigma = self.weights.as_array()
        self._lin = _Linearization(self.steady, params)

    def coefficients(self, omega, target: str = "Q") -> np.ndarray:
        """Complex force weights, shape (n_omega, 6)."""
        dm = self._lin.solve(omega)[:, 0, :]
        if target == "m":
            return dm
        if target == "Q":
            c = self.params.alpha * dm
            c[:, _F["q"]] += 1.0
            return c
        raise ParameterError(f"unknown target {target!r} (expected 'Q' or 'm')")

    def photocurrent_spectrum(self, omega) -> np.ndarray:
        """Shot-noise-normalized photo-current spectral density."""
        c = self.coefficients(omega, "Q")
        return (np.abs(c) ** 2 @ self._sigma) / (self.params.alpha * self.steady.m)

    def photon_spectrum(self, omega) -> np.ndarray:
        """Bare spectral density of the photon-number fluctuation."""
        c = self.coefficients(omega, "m")
        return np.abs(c) ** 2 @ self._sigma

    def relaxation_rates(self) -> np.ndarray:
        return self._lin.relaxation_rates()

    def photon_variance(self, rtol: float = 1e-8) -> float:
        """Integral of the photon spectrum over all frequencies / 2 pi."""
        p = self.params
        scale = max(p.max_rate, derived_params(p).scriptP)
        lam = self.relaxation_rates()
        marks = np.concatenate([np.abs(lam), np.abs(lam.imag)])
        marks = marks[(marks > 0) & np.isfinite(marks)]
        points = sorted({float(np.arctan(x / scale)) for x in marks} - {0.0})
        points = [t for t in points if 0 < t < 0.5 * np.pi]

        def integrand(theta):
            w = scale * math.tan(theta)
            return self.photon_spectrum(w)[0] * scale / math.cos(theta) ** 2

        val, err, info, *rest = integrate.quad(
            integrand, 0.0, 0.5 * np.pi, points=points or None,
            epsabs=0.0, epsrel=rtol * 1e-2, limit=1000, full_output=1,
        )
        if not np.isfinite(val) or err > rtol * abs(val):
            raise QuadratureError(f"photon-spectrum integral did not converge (value {val}, error {err})")
        # even integrand: twice the half line, divided by 2 pi
        return val / np.pi

    def fano(self, rtol: float = 1e-8) -> float:
        return self.photon_variance(rtol) / self.steady.m


def solve_fluctuations(ss: SteadyState, params: LaserParams, omega: float, target: str = "Q") -> NoiseCoefficients:
    """Force weights of the ``target`` fluctuation ('Q' photo-current or 'm')."""
    model = LangevinModel(params, large_m=ss.large_m, steady=ss)
    c = model.coefficients(np.array([omega]), target)[0]
    return NoiseCoefficients(float(omega), target, c)


def spectral_density(params: LaserParams, omega, large_m: bool = False):
    """Normalized photo-current spectral density at ``omega`` (scalar or array)."""
    out = LangevinModel(params, large_m=large_m).photocurrent_spectrum(omega)
    return float(out[0]) if np.ndim(omega) == 0 else out


def photon_spectral_density(params: LaserParams, omega, large_m: bool = False):
    out = LangevinModel(params, large_m=large_m).photon_spectrum(omega)
    return float(out[0]) if np.ndim(omega) == 0 else out


def fano_analytic(params: LaserParams, large_m: bool = False, rtol: float = 1e-8) -> float:
    """Intra-cavity Fano factor from the integrated photon-number spectrum."""
    return LangevinModel(params, large_m=large_m).fano(rtol)


# -- printed closed forms ---------------------------------------------------

CASES = ("gamma0", "largeN", "both")


def closed_form_S0(params: LaserParams, case: str) -> float:
    """Zero-frequency spectral density from the closed-form special cases.

    gamma0: negligible spontaneous decay (m >> 1, finite atom number);
    largeN: N >> alpha with spontaneous decay; both: the two combined.
    """
    if case not in CASES:
        raise ParameterError(f"unknown case {case!r}; expected one of {CASES}")
    if case in ("gamma0", "both") and params.gamma != 0:
        raise ParameterError(f"case {case!r} requires gamma = 0 (got {params.gamma})")
    s = params.scheme
    dp = derived_params(params)
    NN, PP = dp.scriptN, dp.scriptP
    P, ell, g = params.P, params.ell, params.gamma
    iu, id_ = _inv(params.p_u), _inv(params.p_d)
    if s is SchemeKind.Four4:
        if case == "gamma0":
            return (1 + 2 / (NN - 1) ** 2 + 8 * PP**2 * id_**2
                    + (6 - 4 * NN) * PP * id_ / (NN - 1)
                    + 2 * (1 + ell) * PP**2 * iu**2
                    + 2 * PP * (2 * PP * id_ - 1) * iu)
        if case == "largeN":
            pd = params.p_d
            return (1 + 2 * g / (pd - g) - (4 * PP + 2 * g) / pd
                    + 8 * PP * (PP + g) / pd**2 - 8 * PP**2 * g / pd**3
                    + 2 * PP * (g - pd) * (pd - 2 * PP) / pd**2 * iu
                    - 2 * (1 + ell) * PP**2 * (g - pd) / pd * iu**2)
        # numerator and denominator divided by p_u^2 so p_u = inf is the plain limit
        pd = params.p_d
        Pl = P * (1 + ell)
        return 1 - 2 * P * pd * ((pd + 2 * Pl) * iu + 2) / (2 * P + pd * (1 + Pl * iu)) ** 2
    if s is SchemeKind.Lambda3:
        pd = params.p_d
        if case == "gamma0":
            return (1 + 2 * (1 + ell + ell * NN) / (1 + ell - NN) ** 2
                    + 4 * (2 + ell) * PP**2 * id_**2
                    - 2 * (3 + 2 * ell - 2 * NN) * PP * id_ / (1 + ell - NN))
        if case == "largeN":
            return (1 + 2 * g / (pd - g) - 2 * (2 * PP + g) / pd
                    + 2 * PP * (2 * (2 + ell) * PP + (4 + ell) * g) / pd**2
                    - 4 * (2 + ell) * PP**2 * g / pd**3)
        return 1 - 4 * P * pd / (P * (2 + ell) + pd) ** 2
    pu = params.p_u
    if case == "gamma0":
        return (1 + (2 * NN + 1) / (2 * NN - 1) ** 2
                + (1 + 2 * ell) * PP**2 * iu**2 / 2
                - (4 * NN - 1) * PP * iu / (2 * (2 * NN - 1)))
    if case == "largeN":
        return (1 + 2 * g / (PP - g) - PP / pu
                + PP * (PP * (1 + 2 * ell) - g) / (2 * pu**2)
                + (1 + 2 * ell) * PP**2 * g / (4 * pu**3)
                - 2 * PP**2 * g / ((PP - g) * (PP * g + 2 * (PP - g) * pu)))
    return 1 - 4 * P * pu / (P * (1 + 2 * ell) + 2 * pu) ** 2


@dataclass(frozen=True)
class OptimumConditions:
    """Minimum zero-frequency noise at gamma = 0 and the pump ratios reaching it.

    A ratio is None when the scheme has no such decay.  ``fano`` is the
    intra-cavity Fano factor tied to ``s_min`` by S = 2F - 1 (valid for
    gamma = 0 and N >> alpha).
    """

    scheme: SchemeKind
    ell: int
    s_min: float
    P_over_pu: Optional[float]
    P_over_pd: Optional[float]

    @property
    def fano(self) -> float:
        return 0.5 * (1 + self.s_min)


def optimum_conditions(scheme, ell: int, scriptN: Optional[float] = None) -> OptimumConditions:
    """Closed-form optimum; ``scriptN`` selects the finite-N 4-level refinement."""
    scheme = SchemeKind(scheme)
    if ell not in (0, 1):
        raise ParameterError("ell must be 0 or 1")
    if scriptN is not None:
        if scheme is not SchemeKind.Four4:
            raise ParameterError("the finite-N optimum is available for the 4-level scheme only")
        NN = float(scriptN)
        s_min = ((2 * NN * (NN - 1) + 11 + ell * (4 * NN * (NN - 1) + 15))
                 / (2 * (3 + 4 * ell) * (NN - 1) ** 2))
        p_pd = (NN * (1 + 2 * ell) - (2 + 3 * ell)) / ((1 + ell) * (2 * NN - 1))
        return OptimumConditions(scheme, ell, s_min, 1 / (1 + ell), p_pd)
    if scheme is SchemeKind.Four4:
        return OptimumConditions(scheme, ell, (1 + 2 * ell) / (3 + 4 * ell),
                                 1 / (1 + ell), (1 + 2 * ell) / (2 * (1 + ell)))
    if scheme is SchemeKind.Lambda3:
        return OptimumConditions(scheme, ell, (1 + ell) / (2 + ell), None, 1 / (2 + ell))
    return OptimumConditions(scheme, ell, (1 + 4 * ell) / (2 + 4 * ell), 2 / (1 + 2 * ell), None)
