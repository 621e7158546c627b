"""Exception hierarchy.

Configuration problems derive from :class:`ConfigurationError`; failures of a
numerical procedure derive from :class:`NumericalError`.  The CLI maps the two
families to different exit codes.
"""


class PointCasimirError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(PointCasimirError, ValueError):
    pass


class NumericalError(PointCasimirError, ArithmeticError):
    pass


class DomainError(ConfigurationError):
    """Argument outside the domain of a special function."""


class NonIdenticalStrengths(ConfigurationError):
    pass


class InadmissibleConfiguration(ConfigurationError):
    """Operation requires rho < 1, positive strengths and distinct points."""


class StripViolation(ConfigurationError):
    pass


class PoleProximity(ConfigurationError):
    pass


class TruncationInsufficient(ConfigurationError):
    pass


class StepWouldViolateAdmissibility(ConfigurationError):
    pass


class RotationInvalid(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class TailBoundUnreachable(NumericalError):
    pass


class PathBudgetExceeded(NumericalError):
    pass


class ZeroInteraction(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    """Raised by callers that cannot accept an unconverged quadrature."""

    def __init__(self, component, result):
        self.component = component
        self.result = result
        super().__init__(
            f"quadrature for {component} did not converge "
            f"(estimate {result.error_estimate:.3e}, {result.nodes_used} nodes)"
        )
