"""Exception hierarchy.

Every error carries a short machine-readable ``category`` that the CLI
reports alongside a nonzero exit status.
"""


class ThinPorousError(Exception):
    category = "error"


class DomainError(ThinPorousError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    category = "domain"


class ContractError(ThinPorousError, ValueError):
    """Input violates a structural contract (shape, symmetry, medium)."""

    category = "contract"


class GeometryError(ThinPorousError, ValueError):
    category = "geometry"


class RegimeError(ThinPorousError, ValueError):
    category = "regime"


class ResourceError(ThinPorousError):
    category = "resource"


class ConfigurationError(ThinPorousError, ValueError):
    category = "configuration"


class SingularViscosityError(ConfigurationError):
    category = "singular-viscosity"


class IncompatibilityError(ThinPorousError, ValueError):
    category = "incompatibility"


class AlignmentError(ThinPorousError, ValueError):
    category = "alignment"


class InfeasibilityError(ThinPorousError):
    category = "infeasible"


class InputError(ThinPorousError, ValueError):
    category = "input"


class ConvergenceError(ThinPorousError):
    """Nonlinear solver stopped before reaching its tolerances."""

    category = "convergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
