"""Exception hierarchy.

Two families matter to callers: :class:`SpecError` subclasses signal bad input
(CLI exit code 2) and :class:`NumericalValidityError` subclasses signal that a
quantity is ill-defined or a numerical guarantee failed (CLI exit code 3).
"""


class FloquetSSHError(Exception):
    """Base class for all package errors."""


class SpecError(FloquetSSHError, ValueError):
    """Invalid or contradictory run parameters."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class GeometryError(SpecError):
    pass


class BoundaryMismatch(SpecError):
    pass


class PlanError(SpecError):
    pass


class StateError(SpecError):
    pass


class DriveError(SpecError):
    pass


class ScenarioError(SpecError):
    pass


class NumericalValidityError(FloquetSSHError, ArithmeticError):
    """A numerical precondition or postcondition does not hold."""


class HermiticityViolation(NumericalValidityError):
    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        super().__init__(f"matrix not Hermitian: max |H - H^dagger| = {asymmetry:.3e} (tol {tol:.1e})")


class UnitarityViolation(NumericalValidityError):
    def __init__(self, defect: float, tol: float):
        self.defect = defect
        super().__init__(f"matrix not unitary: max |U^dagger U - I| = {defect:.3e} (tol {tol:.1e})")


class ConvergenceFailure(NumericalValidityError):
    pass


class BranchAmbiguity(NumericalValidityError):
    """An eigenphase sits on the -pi branch cut."""


class ChiralityViolation(NumericalValidityError):
    pass


class GapClosedError(NumericalValidityError):
    pass


class ResolutionError(NumericalValidityError):
    pass
