"""latticeuq: sparse trigonometric approximation of random-coefficient diffusion ODEs.

The package approximates the full parametric solution u(eta, xi) of the
two-point boundary value problem

    -d/d_eta ( a(eta, xi) du/d_eta ) = f(eta),   u(alpha, xi) = u(beta, xi) = 0,

where xi is a vector of random variables entering the diffusion coefficient.
The integrands appearing in the formal solution are made periodic by change of
variables, approximated by dimension-incremental sparse FFTs sampled on
(multiple) rank-1 lattices, and integrated in closed form, yielding a sparse
trigonometric surrogate whose moments are again sparse trig polynomials.
"""

from .errors import (
    CandidateExplosionError,
    CoefficientPositivityError,
    DimensionMismatchError,
    LatticeConstructionError,
    SampleBudgetError,
)
from .trig import (
    SparseTrigPoly,
    TrigAntiderivative,
    antiderivative_first_var,
    directional_expansion,
    dump_coefficients,
    load_coefficients,
    symmetrize_reflections,
)

__version__ = "0.1.0"
