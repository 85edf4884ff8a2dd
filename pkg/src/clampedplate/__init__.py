"""Clamped-plate eigenmodes on balls and grid domains.

Submodules
----------
specialfn
    Bessel functions and the cross-product zeros that fix the ball mode.
ballmode
    Closed-form ball eigenfunctions in any dimension.
fdsolver
    Masked-grid bilaplacian, eigen solver and boundary traces.
reduction
    Second-order reduction of an eigenpair and the boundary-hypothesis checks.
rearrange
    Radial rearrangements, the Polya-Szego and Talenti comparisons.
shapederiv
    Volume and eigenvalue shape derivatives.
cli
    Command-line front end (``clampedplate``).
"""

from .ballmode import BallMode, make_ball_mode, mean_uB
from .errors import ConsistencyError, EmptyDomainError, SolverError, SpectralGapError
from .fdsolver import EigenPair, GridDomain, ScalarField, make_domain, principal_eigenpair
from .specialfn import gamma_nu

__version__ = "0.1.0"

__all__ = [
    "BallMode",
    "ConsistencyError",
    "EigenPair",
    "EmptyDomainError",
    "GridDomain",
    "ScalarField",
    "SolverError",
    "SpectralGapError",
    "gamma_nu",
    "make_ball_mode",
    "make_domain",
    "mean_uB",
    "principal_eigenpair",
]
