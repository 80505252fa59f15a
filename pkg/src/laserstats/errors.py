class LaserStatsError(Exception):
    pass


class ParameterError(LaserStatsError, ValueError):
    """Ill-formed laser parameters or configuration."""


class NonPhysicalStateError(LaserStatsError):
    """A computed steady state violates positivity or balance.

    This signals an internal inconsistency, not bad input.
    """


class NotLasingError(LaserStatsError):
    """The weak-noise linearization was requested where it does not apply."""


class SingularSystemError(LaserStatsError):
    pass


class QuadratureError(LaserStatsError):
    pass


class SimulationError(LaserStatsError):
    pass
