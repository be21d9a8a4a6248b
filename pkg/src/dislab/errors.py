"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`DislabError`
so callers (and the CLI) can separate model failures from programming bugs.
"""


class DislabError(Exception):
    """Base class for all package errors."""


class AdmissibilityError(DislabError, ValueError):
    """Configuration violates the core-separation requirements.

    ``max_epsilon0`` carries the largest core radius for which the same
    positions would have been admissible (0 when no radius works).
    """

    def __init__(self, message, max_epsilon0=0.0):
        super().__init__(message)
        self.max_epsilon0 = max_epsilon0


class CoreOverlap(AdmissibilityError):
    pass


class BoundaryContact(AdmissibilityError):
    pass


class OutsideDomain(AdmissibilityError):
    pass


class SingularPoint(DislabError, ValueError):
    """Field evaluated at (or numerically at) a dislocation position."""


class QuadratureFailure(DislabError, RuntimeError):
    """Refinement budget exhausted before the tolerance was met."""


class WrongBackend(DislabError, ValueError):
    pass


class SolverFailure(DislabError, RuntimeError):
    pass


class MeshFailure(DislabError, RuntimeError):
    pass


class BadCutRadius(DislabError, ValueError):
    pass


class InadmissiblePerturbation(DislabError, ValueError):
    pass


class StepCollapse(DislabError, RuntimeError):
    pass


class ConfigError(DislabError, ValueError):
    pass
