"""Exceptions raised by the numerical routines."""


class TsirelsonLabError(Exception):
    pass


class CutoffTooSmall(TsirelsonLabError):
    """Truncated coherent-state weight falls below the accepted threshold."""


class QuadratureNotConverged(TsirelsonLabError):
    pass


class NotConverged(TsirelsonLabError):
    """An iterative or cutoff-doubling procedure failed to reach tolerance."""


class NotDiagonal(TsirelsonLabError):
    """The requested operator is not diagonal on the state's support."""


class GridTooSmall(TsirelsonLabError):
    pass


class Infeasible(TsirelsonLabError):
    """No feasible violating point was found by any start."""
