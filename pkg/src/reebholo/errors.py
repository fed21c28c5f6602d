"""Exception types shared by the reeb-holo modules."""


class ReebHoloError(Exception):
    """Base class for all package errors."""


class SceneValidationError(ReebHoloError):
    """Scene file or scene construction is invalid."""


class SingularForm(ReebHoloError):
    """The contact condition fails at a point: dbeta + beta (x) beta is singular."""


class EmptyDomain(ReebHoloError):
    """Rejection sampling never found an interior point."""


class StepFailure(ReebHoloError):
    """ODE step size underflow during trajectory integration."""


class AmbiguousTangency(ReebHoloError):
    """All Lie-tower values are below threshold: tangency order cannot be decided."""


class ResolutionTooLow(ReebHoloError):
    """Richardson error estimate of a chart quadrature exceeds the tolerance."""


class MissingChart(ReebHoloError):
    """No chart available for the requested stratum."""


class SingularSymplectic(ReebHoloError):
    """dbeta restricted to ker(beta) is numerically singular (contact condition broken)."""


class ContactViolated(ReebHoloError):
    """A deformed form fails the contact check at some family parameter."""


class IncompatibleBoundaryMap(ReebHoloError):
    """Boundary diffeomorphism does not respect the boundary data within tolerance."""


class OutOfChordRange(ReebHoloError):
    """Requested Lyapunov value lies outside the chord of the chosen trajectory."""


class NonLagrangianShadow(ReebHoloError):
    """Shadow patch fails the integrability test: the lift is path dependent."""


class OpenCurveWarning(UserWarning):
    """Traced stratum curve does not close within tolerance."""
