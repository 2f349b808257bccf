"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class ErgmPhaseError(Exception):
    exit_code = 1

    @property
    def kind(self):
        return type(self).__name__


class DomainError(ErgmPhaseError, ValueError):
    """An argument lies outside the domain of the requested operation."""

    exit_code = 3


class AssumptionViolation(DomainError):
    """Edge counts violate 2 <= p <= q <= 5p - 1."""


class DegenerateModel(DomainError):
    """p == q: the second and third terms collapse into one."""


class HypothesisViolation(DomainError):
    """Negative beta2/beta3 where the variational formula is unproven."""


class SurfaceError(DomainError):
    """Second derivatives requested on (or too near) the transition surface."""


class NumericalFailure(ErgmPhaseError, ArithmeticError):
    exit_code = 4


class ResourceError(ErgmPhaseError):
    """Enumeration would exceed the configured work budget."""

    exit_code = 5


class UnknownFigure(ErgmPhaseError, KeyError):
    exit_code = 2

    def __str__(self):
        return str(self.args[0]) if self.args else ""
