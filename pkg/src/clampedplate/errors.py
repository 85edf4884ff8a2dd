"""Exception types shared across the package."""


class ConsistencyError(ArithmeticError):
    """Two independent evaluations of the same quantity disagree."""


class SolverError(RuntimeError):
    """A linear solve or eigen-iteration failed to converge."""


class EmptyDomainError(ValueError):
    """A grid mask has no interior nodes."""


class SpectralGapError(ValueError):
    """The principal eigenvalue is too close to the next one for a simple-eigenvalue formula."""
