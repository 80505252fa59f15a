"""Photo-current spectra estimated from detection-event times.

The estimator is the point-process periodogram at the Fourier frequencies
of the record, ``|sum_k exp(i Omega_j t_k)|^2 / K``, which is exactly 1 in
expectation for a homogeneous Poisson stream (shot noise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ParameterError
from .model import LaserParams

DEFAULT_HALF_WIDTH = 8

# above this many (events x bins) the FFT-based evaluation is used
_DIRECT_LIMIT = 2_000_000
_TAYLOR_TERMS = 14


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    s: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    n_runs: int = 1

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if omega.ndim != 1 or omega.shape != s.shape:
            raise ParameterError("omega and s must be 1-d arrays of equal length")
        if omega.size > 1 and not np.all(np.diff(omega) > 0):
            raise ParameterError("omega must be strictly ascending")
        if (self.ci_low is None) != (self.ci_high is None):
            raise ParameterError("ci_low and ci_high must be given together")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "s", s)
        if self.ci_low is not None:
            lo = np.asarray(self.ci_low, dtype=float)
            hi = np.asarray(self.ci_high, dtype=float)
            if lo.shape != s.shape or hi.shape != s.shape:
                raise ParameterError("confidence bands must match the grid")
            object.__setattr__(self, "ci_low", lo)
            object.__setattr__(self, "ci_high", hi)

    def __len__(self) -> int:
        return self.omega.size

    @property
    def has_ci(self) -> bool:
        return self.ci_low is not None

    def covers(self, values) -> np.ndarray:
        """Boolean mask of bins whose 95% band contains ``values``."""
        if not self.has_ci:
            raise ParameterError("spectrum carries no confidence band")
        v = np.asarray(values, dtype=float)
        return (self.ci_low <= v) & (v <= self.ci_high)


def fourier_bins(effective_duration: float, omega_max: float) -> int:
    """Number of Fourier bins 2 pi j / T with j >= 1 not exceeding ``omega_max``."""
    if not effective_duration > 0:
        raise ParameterError("effective duration must be positive")
    if not omega_max > 0:
        raise ParameterError("omega_max must be positive")
    return int(math.floor(omega_max * effective_duration / (2 * math.pi) + 1e-9))


def default_omega_max(params: LaserParams) -> float:
    """Ten times the largest rate of the system, including the pump factor."""
    rates = [params.max_rate]
    if params.P > 0:
        from .steady import derived_params

        rates.append(derived_params(params).scriptP)
    return 10.0 * max(rates)


def _direct_sums(u: np.ndarray, j_max: int, chunk: int = 256) -> np.ndarray:
    """sum_k exp(2 pi i j u_k) for j = 1..j_max, summed term by term."""
    out = np.empty(j_max, dtype=complex)
    phase = 2j * np.pi * u
    for start in range(0, j_max, chunk):
        j = np.arange(start + 1, min(start + chunk, j_max) + 1)
        out[start:start + j.size] = np.exp(np.outer(j, phase)).sum(axis=1)
    return out


def _fft_sums(u: np.ndarray, j_max: int) -> np.ndarray:
    """Same sums as ``_direct_sums`` via a Taylor-corrected FFT.

    Each u_k is split into a grid point b/M and an offset f/M with
    |f| <= 1/2; the offset phase is expanded in a power series, so each
    term costs one histogram and one real FFT.  With M >= 8 j_max the
    truncation error is far below double-precision rounding.
    """
    M = 1 << max(3, int(math.ceil(math.log2(8 * (j_max + 1)))))
    x = u * M
    b = np.rint(x)
    f = x - b
    idx = b.astype(np.int64) % M
    j = np.arange(1, j_max + 1)
    step = 2j * np.pi * j / M
    total = np.zeros(j_max, dtype=complex)
    coef = np.ones(j_max, dtype=complex)
    fp = np.ones_like(f)
    for p in range(_TAYLOR_TERMS):
        if p > 0:
            coef = coef * step / p
            fp = fp * f
        hist = np.bincount(idx, weights=fp, minlength=M)
        total += coef * np.conj(np.fft.rfft(hist)[1:j_max + 1])
    return total


def periodogram(
    detection_times,
    effective_duration: float,
    *,
    start: float = 0.0,
    omega_max: Optional[float] = None,
    j_max: Optional[int] = None,
    method: str = "auto",
) -> Spectrum:
    """Normalized periodogram of an event stream observed on (start, start + T].

    Bins sit at Omega_j = 2 pi j / T for j = 1..j_max (the DC bin is never
    formed).  ``j_max`` defaults to the bins below ``omega_max``, or to half
    the event count when neither is given.
    """
    t = np.asarray(detection_times, dtype=float)
    K = t.size
    if K == 0:
        raise ParameterError("periodogram of an empty event list")
    if K < 2:
        raise ParameterError("periodogram needs at least two events")
    T = float(effective_duration)
    if not T > 0:
        raise ParameterError("effective duration must be positive")
    u = (t - start) / T
    if u.min() < 0 or u.max() > 1 + 1e-12:
        raise ParameterError("event times fall outside the observation window")
    if j_max is None:
        j_max = fourier_bins(T, omega_max) if omega_max is not None else max(1, K // 2)
    if j_max < 1:
        raise ParameterError("frequency grid is empty (omega_max below the first bin)")
    if method == "auto":
        method = "direct" if K * j_max <= _DIRECT_LIMIT else "fft"
    if method == "direct":
        sums = _direct_sums(u, j_max)
    elif method == "fft":
        sums = _fft_sums(u, j_max)
    else:
        raise ParameterError(f"unknown periodogram method {method!r}")
    omega = 2 * np.pi * np.arange(1, j_max + 1) / T
    return Spectrum(omega, (sums.real ** 2 + sums.imag ** 2) / K)


def trajectory_periodogram(traj, **kwargs) -> Spectrum:
    """Periodogram of a simulated trajectory over its post-burn-in window."""
    return periodogram(
        traj.detection_times, traj.effective_duration, start=traj.burn_in, **kwargs
    )


def _moving_average(x: np.ndarray, half_width: int) -> np.ndarray:
    # average deviations from a reference so a constant input comes back exactly
    n = x.size
    if n == 0:
        return x.copy()
    ref = x[0]
    c = np.concatenate(([0.0], np.cumsum(x - ref)))
    i = np.arange(n)
    lo = np.maximum(i - half_width, 0)
    hi = np.minimum(i + half_width + 1, n)
    return ref + (c[hi] - c[lo]) / (hi - lo)


def smooth(spec: Spectrum, half_width: int = DEFAULT_HALF_WIDTH) -> Spectrum:
    """Daniell smoother over 2*half_width+1 bins, truncated at the ends.

    Bands, when present, are averaged with the same window.
    """
    if isinstance(half_width, bool) or int(half_width) != half_width or half_width < 1:
        raise ParameterError(f"half_width must be an integer >= 1, got {half_width!r}")
    h = int(half_width)
    lo = hi = None
    if spec.has_ci:
        lo, hi = _moving_average(spec.ci_low, h), _moving_average(spec.ci_high, h)
    return Spectrum(spec.omega, _moving_average(spec.s, h), lo, hi, spec.n_runs)


def rebin(spec: Spectrum, points: int) -> Spectrum:
    """Merge neighbouring bins into at most ``points`` contiguous blocks."""
    if points < 1:
        raise ParameterError("rebin needs at least one output point")
    n = len(spec)
    if points >= n:
        return spec
    edges = np.linspace(0, n, points + 1).round().astype(int)
    counts = np.diff(edges)

    def block_mean(x):
        return np.add.reduceat(x, edges[:-1]) / counts

    lo = hi = None
    if spec.has_ci:
        lo, hi = block_mean(spec.ci_low), block_mean(spec.ci_high)
    return Spectrum(block_mean(spec.omega), block_mean(spec.s), lo, hi, spec.n_runs)


def aggregate_runs(spectra: Sequence[Spectrum], level: float = 0.95) -> Spectrum:
    """Across-run mean with a Student-t confidence band.

    A single run yields no band (there is no spread to estimate).
    """
    spectra = list(spectra)
    if not spectra:
        raise ParameterError("no spectra to aggregate")
    omega = spectra[0].omega
    for sp in spectra[1:]:
        if sp.omega.shape != omega.shape or not np.array_equal(sp.omega, omega):
            raise ParameterError("spectra to aggregate do not share a frequency grid")
    vals = np.vstack([sp.s for sp in spectra])
    n = vals.shape[0]
    mean = vals.mean(axis=0)
    if n < 2:
        return Spectrum(omega, mean, n_runs=1)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n)
    half = stats.t.ppf(0.5 + level / 2, n - 1) * se
    return Spectrum(omega, mean, mean - half, mean + half, n)


def estimate_spectrum(
    trajectories,
    omega_max: float,
    half_width: int = DEFAULT_HALF_WIDTH,
) -> Spectrum:
    """Per-run periodogram, smoothing, then run aggregation."""
    runs = [
        smooth(trajectory_periodogram(tr, omega_max=omega_max), half_width)
        for tr in trajectories
    ]
    return aggregate_runs(runs)


def write_spectrum_csv(spec: Spectrum, path) -> None:
    """CSV with header ``omega,s,ci_low,ci_high``; missing bands are written as nan."""
    nan = np.full(len(spec), np.nan)
    lo = spec.ci_low if spec.has_ci else nan
    hi = spec.ci_high if spec.has_ci else nan
    with open(path, "w", newline="") as fh:
        fh.write("omega,s,ci_low,ci_high\n")
        for row in zip(spec.omega, spec.s, lo, hi):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_spectrum_csv(path) -> Spectrum:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    lo, hi = data[:, 2], data[:, 3]
    if np.all(np.isnan(lo)):
        return Spectrum(data[:, 0], data[:, 1])
    return Spectrum(data[:, 0], data[:, 1], lo, hi)
