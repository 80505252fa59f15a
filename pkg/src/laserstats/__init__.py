"""Photon statistics of optically pumped 3- and 4-level atom lasers.

Exact jump-process simulation, closed-form steady states and the
linearized (Langevin) noise spectra of the same rate-equation model.
"""
from .errors import (
    LaserStatsError,
    NonPhysicalStateError,
    NotLasingError,
    ParameterError,
    QuadratureError,
    SimulationError,
    SingularSystemError,
)
from .gillespie import (
    SimConfig,
    Trajectory,
    fano_from_trajectory,
    mean_rates,
    simulate,
    simulate_runs,
)
from .langevin import (
    LangevinModel,
    closed_form_S0,
    fano_analytic,
    langevin_weights,
    optimum_conditions,
    photon_spectral_density,
    solve_fluctuations,
    spectral_density,
)
from .model import EVENT_KINDS, EventSpec, LaserParams, MicroState, SchemeKind, cold_start, event_table
from .spectra import Spectrum, aggregate_runs, periodogram, smooth
from .steady import SteadyState, derived_params, m_saturation, solve_steady, threshold_gamma, threshold_pump

__all__ = [
    "EVENT_KINDS",
    "EventSpec",
    "LangevinModel",
    "LaserParams",
    "LaserStatsError",
    "MicroState",
    "NonPhysicalStateError",
    "NotLasingError",
    "ParameterError",
    "QuadratureError",
    "SchemeKind",
    "SimConfig",
    "SimulationError",
    "SingularSystemError",
    "Spectrum",
    "SteadyState",
    "Trajectory",
    "aggregate_runs",
    "closed_form_S0",
    "cold_start",
    "derived_params",
    "event_table",
    "fano_analytic",
    "fano_from_trajectory",
    "langevin_weights",
    "m_saturation",
    "mean_rates",
    "optimum_conditions",
    "periodogram",
    "photon_spectral_density",
    "simulate",
    "simulate_runs",
    "smooth",
    "solve_fluctuations",
    "solve_steady",
    "spectral_density",
    "threshold_gamma",
    "threshold_pump",
]
