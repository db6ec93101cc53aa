"""Exception hierarchy for the tadpole package."""


class TadpoleError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(TadpoleError, ValueError):
    """An argument is outside the admissible range."""


class GeometryError(TadpoleError, ValueError):
    """Two objects live on different grids (dimension mismatch)."""


class DomainError(TadpoleError):
    """A state is not in the (discrete) domain of the generator."""


class NoDampedSpectrumError(ParameterError):
    """The damping value has no eigenvalues in the open left half-plane."""


class SingularKernelError(ParameterError):
    """The Green kernel is undefined at z = 0."""


class DivergenceError(TadpoleError):
    """A half-line integral diverges because Re z >= 0."""


class NearSpectrumError(TadpoleError):
    """The coefficient system is numerically singular near an eigenvalue.

    ``distance`` holds the distance from ``z`` to the nearest damped
    eigenvalue (``inf`` when there is no damped spectrum).
    """

    def __init__(self, msg, z, distance):
        super().__init__(msg)
        self.z = z
        self.distance = distance


class RootRefinementError(TadpoleError):
    """Newton refinement of a bracketed root failed to converge."""

    def __init__(self, msg, box=None):
        super().__init__(msg)
        self.box = box


class TruncationError(TadpoleError):
    """The truncated half-line is too short for the requested object."""


class StabilityError(TadpoleError):
    """The explicit time step violates the CFL condition."""


class SchemeFailureError(TadpoleError):
    """The time integration produced growing or non-finite energy."""


class FitDomainError(TadpoleError):
    """The decay fit window contains non-positive shifted energy."""


class ConditioningError(TadpoleError):
    """A Gram system could not be solved reliably."""

    def __init__(self, msg, lambda_min=None):
        super().__init__(msg)
        self.lambda_min = lambda_min


class ValidationError(TadpoleError, ValueError):
    """Input data fails a structural check (e.g. non-Hermitian matrix)."""
