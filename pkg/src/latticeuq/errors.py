"""Exception types raised across the package."""


class DimensionMismatchError(ValueError):
    """Inputs disagree about the ambient dimension."""


class LatticeConstructionError(RuntimeError):
    """No reconstructing lattice could be built within the configured budget."""


class CandidateExplosionError(RuntimeError):
    """A candidate frequency set exceeded the configured cap."""


class SampleBudgetError(RuntimeError):
    """A sampling stage exceeded the configured hard cap on total samples."""


class CoefficientPositivityError(RuntimeError):
    """The diffusion coefficient failed its positivity requirement at a sample point."""


class DegenerateBoundaryError(RuntimeError):
    """The right-endpoint value of u_2 vanished, so the boundary ratio is undefined."""
