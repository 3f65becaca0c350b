"""Exception hierarchy.

Input problems (bad arguments, malformed files) and numerical failures
(non-convergence, singular geometry) are kept distinct so callers such as
the CLI can map them to different exit codes.
"""


class TDesignError(Exception):
    """Base class for all package errors."""


class InputError(TDesignError, ValueError):
    """Invalid argument, dimension mismatch, or malformed input file."""


class NumericalError(TDesignError, RuntimeError):
    """A numerical procedure failed to meet its contract."""


class SingularPointError(NumericalError):
    """Defining-equation Jacobian has deficient rank at a point that was
    assumed smooth."""


class RetractionError(NumericalError):
    """Gauss-Newton projection onto the variety did not converge."""


class DegeneratePolynomialError(NumericalError):
    """A polynomial that must be nonzero (or non-constant) on the variety
    is numerically zero there."""


class FlowError(NumericalError):
    """Gradient-flow integration lost a trajectory (retraction failure)."""


class CoincidentPointsError(NumericalError):
    """Pairwise energy requested for a configuration with coincident points."""
