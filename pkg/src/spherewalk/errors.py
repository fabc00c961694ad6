"""Exception types shared across the package."""


class SpherewalkError(Exception):
    """Base class for all package errors."""


class SingularMatrix(SpherewalkError):
    """Determinant too small to normalize a 2x2 matrix."""


class WindowInvalid(SpherewalkError):
    """Contraction exponents violate 0 < lambda' < lambda''."""


class StepTooLarge(SpherewalkError):
    """Planar step variance above the boundary-bias guard."""


class BadRadii(SpherewalkError):
    """Radii do not satisfy the required ordering."""


class OutsideDisc(SpherewalkError):
    """Start point outside the disc it must lie in."""


class HorizonExceeded(SpherewalkError):
    """Queried time beyond the simulated horizon."""


class WordBudgetExceeded(SpherewalkError):
    """Orbit index would exceed the configured size cap."""


class OrbitCoverageExceeded(SpherewalkError):
    """Path left the indexed orbit region (word radius too small)."""


class InsufficientData(SpherewalkError):
    """Not enough accepted discretization steps for statistics."""


class InsufficientAcceptedSteps(InsufficientData):
    """Experiment needs more accepted discretization steps."""


class PunctureHit(SpherewalkError):
    """Evaluation at (numerically) the puncture of a local chart."""


class UnknownSymbol(SpherewalkError):
    """Word contains a symbol outside the generator alphabet."""


class BranchPoint(SpherewalkError):
    """Local inversion attempted where the derivative vanishes."""


class ConfigInvalid(SpherewalkError):
    """Run configuration failed validation."""


class ElementarySupportWarning(UserWarning):
    """Step measure support may generate an elementary group."""
