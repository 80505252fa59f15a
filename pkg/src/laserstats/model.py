"""Level schemes, laser parameters and the elementary event tables.

Occupancies are always stored in a length-4 vector indexed by level label
(|0>..|3>).  Slots a scheme does not use stay pinned at zero: the Lambda
scheme uses {0, 1, 2}, the V scheme {1, 2, 3}, the 4-level scheme all four.

Time is measured in units where the stimulated transition probability per
photon is one, so every rate below is dimensionless in that unit.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError

NUM_SLOTS = 4

EVENT_KINDS = (
    "photon-absorption",
    "pump-absorption",
    "pump-emission",
    "coherent-emission",
    "coherent-absorption",
    "spontaneous-decay",
    "upper-decay",
    "lower-decay",
)
KIND_INDEX = {kind: i for i, kind in enumerate(EVENT_KINDS)}

# photon-number dependence of a rate
PHOTON_ONE = 0
PHOTON_M = 1
PHOTON_M_PLUS_1 = 2


class SchemeKind(str, enum.Enum):
    Lambda3 = "Lambda3"
    V3 = "V3"
    Four4 = "Four4"

    @property
    def levels(self) -> tuple[int, ...]:
        return {"Lambda3": (0, 1, 2), "V3": (1, 2, 3), "Four4": (0, 1, 2, 3)}[self.value]

    @property
    def pump_source(self) -> int:
        """Level the pump draws atoms from (the cold-start level)."""
        return 1 if self is SchemeKind.V3 else 0

    @property
    def pump_target(self) -> int:
        return 2 if self is SchemeKind.Lambda3 else 3

    @property
    def has_upper_decay(self) -> bool:
        return self is not SchemeKind.Lambda3

    @property
    def has_lower_decay(self) -> bool:
        return self is not SchemeKind.V3


@dataclass(frozen=True)
class LaserParams:
    """Scheme selector plus every physical rate.

    ``p_u`` and ``p_d`` may be ``math.inf`` (instantaneous decay), which the
    analytic engine accepts; the simulator requires finite rates.  Rates a
    scheme does not use (``p_u`` for Lambda3, ``p_d`` for V3) are ignored.
    """

    scheme: SchemeKind
    N: int
    P: float
    ell: int = 0
    p_u: float = math.inf
    p_d: float = math.inf
    gamma: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        except ValueError:
            raise ParameterError(f"unknown scheme {self.scheme!r}") from None
        n = self.N
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ParameterError(f"N must be an integer atom count, got {self.N!r}")
        if n < 1:
            raise ParameterError(f"N must be >= 1, got {n}")
        object.__setattr__(self, "N", int(n))
        if self.ell not in (0, 1):
            raise ParameterError(f"ell must be 0 or 1, got {self.ell!r}")
        object.__setattr__(self, "ell", int(self.ell))
        for name in ("P", "p_u", "p_d", "gamma", "alpha"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{name} must be a number, got {value!r}") from None
            if math.isnan(value) or value < 0:
                raise ParameterError(f"{name} must be a nonnegative rate, got {value}")
            object.__setattr__(self, name, value)
        if not self.alpha > 0 or math.isinf(self.alpha):
            raise ParameterError(f"alpha must be positive and finite, got {self.alpha}")
        if math.isinf(self.P) or math.isinf(self.gamma):
            raise ParameterError("P and gamma must be finite")

    def replace(self, **changes) -> "LaserParams":
        return dataclasses.replace(self, **changes)

    @property
    def max_rate(self) -> float:
        """Largest finite rate constant among the ones the scheme uses."""
        rates = [self.alpha, self.P, self.gamma]
        if self.scheme.has_upper_decay:
            rates.append(self.p_u)
        if self.scheme.has_lower_decay:
            rates.append(self.p_d)
        return max(r for r in rates if math.isfinite(r))


@dataclass(frozen=True)
class MicroState:
    n: tuple[int, int, int, int]
    m: int

    def __post_init__(self):
        if len(self.n) != NUM_SLOTS:
            raise ParameterError(f"occupancy vector must have {NUM_SLOTS} slots")
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))

    @property
    def atoms(self) -> int:
        return sum(self.n)

    def is_valid(self, N: int) -> bool:
        return self.atoms == N and self.m >= 0 and min(self.n) >= 0


def cold_start(params: LaserParams) -> MicroState:
    """All atoms in the pump-source level, empty cavity."""
    n = [0] * NUM_SLOTS
    n[params.scheme.pump_source] = params.N
    return MicroState(tuple(n), 0)


@dataclass(frozen=True)
class EventSpec:
    kind: str
    coef: float
    source: Optional[int]
    target: Optional[int]
    photon_factor: int
    dm: int

    @property
    def delta(self) -> tuple[tuple[int, ...], int]:
        dn = [0] * NUM_SLOTS
        if self.source is not None:
            dn[self.source] -= 1
        if self.target is not None:
            dn[self.target] += 1
        return tuple(dn), self.dm

    def rate(self, state: MicroState) -> float:
        occ = state.n[self.source] if self.source is not None else 1
        if self.photon_factor == PHOTON_M:
            f = state.m
        elif self.photon_factor == PHOTON_M_PLUS_1:
            f = state.m + 1
        else:
            f = 1
        return self.coef * occ * f

    def apply(self, state: MicroState) -> MicroState:
        dn, dm = self.delta
        return MicroState(tuple(a + b for a, b in zip(state.n, dn)), state.m + dm)


def event_table(params: LaserParams) -> list[EventSpec]:
    """Complete list of elementary events for ``params.scheme``.

    Rates are proportional to the source-level occupancy (and to m or m+1
    for the field-coupled transitions), so they vanish on empty levels.
    """
    s = params.scheme
    P, ell = params.P, params.ell
    src, dst = s.pump_source, s.pump_target
    events = [
        EventSpec("photon-absorption", params.alpha, None, None, PHOTON_M, -1),
        EventSpec("pump-absorption", P, src, dst, PHOTON_ONE, 0),
        EventSpec("pump-emission", ell * P, dst, src, PHOTON_ONE, 0),
        EventSpec("coherent-emission", 1.0, 2, 1, PHOTON_M_PLUS_1, +1),
        EventSpec("coherent-absorption", 1.0, 1, 2, PHOTON_M, -1),
        EventSpec("spontaneous-decay", params.gamma, 2, 1, PHOTON_ONE, 0),
    ]
    if s.has_upper_decay:
        events.append(EventSpec("upper-decay", params.p_u, 3, 2, PHOTON_ONE, 0))
    if s.has_lower_decay:
        events.append(EventSpec("lower-decay", params.p_d, 1, 0, PHOTON_ONE, 0))
    return events


def total_rate(events: list[EventSpec], state: MicroState) -> float:
    return sum(e.rate(state) for e in events)


@dataclass(frozen=True)
class PackedTable:
    """Array form of an event table, consumed by the compiled simulator."""

    coef: np.ndarray  # float64[K]
    source: np.ndarray  # int64[K], -1 for none
    photon_factor: np.ndarray  # int64[K]
    dn: np.ndarray  # int64[K, 4]
    dm: np.ndarray  # int64[K]
    kind: np.ndarray  # int64[K], index into EVENT_KINDS


def pack(events: list[EventSpec]) -> PackedTable:
    coef = np.array([e.coef for e in events], dtype=np.float64)
    if not np.all(np.isfinite(coef)):
        raise ParameterError("simulation needs finite rate constants (got an infinite decay rate)")
    return PackedTable(
        coef=coef,
        source=np.array([-1 if e.source is None else e.source for e in events], dtype=np.int64),
        photon_factor=np.array([e.photon_factor for e in events], dtype=np.int64),
        dn=np.array([e.delta[0] for e in events], dtype=np.int64).reshape(len(events), NUM_SLOTS),
        dm=np.array([e.dm for e in events], dtype=np.int64),
        kind=np.array([KIND_INDEX[e.kind] for e in events], dtype=np.int64),
    )
