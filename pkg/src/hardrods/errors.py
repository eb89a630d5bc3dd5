"""Exception types shared by all modules."""


class HardRodsError(Exception):
    """Base class for every error raised by the package."""


class PointInsideRod(HardRodsError):
    """The base point of a contraction lies inside an open rod interval."""


class NegativeLength(HardRodsError):
    """An operation restricted to nonnegative rod lengths received a negative one."""


class EventOverflow(HardRodsError):
    """The event-driven simulation exceeded its event cap."""


class UnboundedSupport(HardRodsError):
    """A velocity or length support is not compact."""


class InvalidRegion(HardRodsError):
    """An observation region or sampling window is malformed."""


class QuadratureFailure(HardRodsError):
    """Adaptive quadrature ran out of budget before reaching its tolerance."""


class NotInvertible(HardRodsError):
    """A dilation or contraction map cannot be inverted for the given density."""


class StepTooLarge(HardRodsError):
    """Characteristic integration approached the degenerate regime sigma -> 1."""


class GridTooCoarse(HardRodsError):
    """Not enough grid nodes or snapshots for the requested finite differences."""


class NotPSD(HardRodsError):
    """A covariance matrix failed the positive semidefinite check."""


class InsufficientReplicas(HardRodsError):
    """Too few Monte Carlo replicas for the requested estimator."""


class ConfigError(HardRodsError):
    """An experiment configuration failed to parse or validate."""
