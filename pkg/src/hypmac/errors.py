"""Exception hierarchy shared by all modules."""


class HypmacError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class PotentialError(HypmacError):
    pass


class WellDepthMismatch(PotentialError):
    pass


class NonCriticalWell(PotentialError):
    pass


class DegenerateWell(PotentialError):
    pass


class NegativePotential(PotentialError):
    pass


class DampingError(HypmacError):
    pass


class QuadratureFailure(HypmacError):
    pass


class SingularQuadrature(QuadratureFailure):
    pass


class NoSolution(HypmacError):
    pass


class BracketFailure(HypmacError):
    pass


class AsymptoticRangeError(HypmacError):
    """Ratio r = eps/l outside the validity window of the asymptotic formulae."""


class InadmissibleLayers(HypmacError):
    pass


class NoRoot(HypmacError):
    pass


class UnstableStep(HypmacError):
    pass


class CollisionDetected(HypmacError):
    """Two layers reached the collision threshold.

    Runs do not raise this; they stop and flag the partial result. It is
    raised only by helpers asked to check a single configuration.
    """


class StepFailure(HypmacError):
    pass


class WindowMismatch(HypmacError):
    pass


class InsufficientSamples(HypmacError):
    pass


class ConfigError(Exception):
    """Invalid configuration document (CLI exit code 2)."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class SchemaError(ConfigError):
    pass


class ConsistencyError(ConfigError):
    pass
