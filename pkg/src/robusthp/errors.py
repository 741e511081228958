"""Exceptions raised by the precoding and simulation routines."""


class RobustPrecodingError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficiencyError(RobustPrecodingError):
    """An interference matrix turned out rank deficient (e.g. duplicated angles)."""


class InfeasibleGeometryError(RobustPrecodingError):
    """The receiver geometry leaves no null space to place a precoder in."""


class DegenerateChannelError(RobustPrecodingError):
    """Effective channel rows collapsed; the zero-forcing stage cannot proceed."""


class IllConditionedFactorizationError(RobustPrecodingError):
    """The analog matrix lost column rank during the alternating factorization."""


class UnsupportedSolverError(RobustPrecodingError):
    """The requested analog solver is recognized but not implemented."""


class NonConvergenceError(RobustPrecodingError):
    """An iterative solver hit its iteration cap without meeting its tolerance."""
