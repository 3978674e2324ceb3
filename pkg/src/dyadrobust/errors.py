"""Exception taxonomy shared across the package."""


class ConfigError(ValueError):
    """Invalid user-supplied configuration (unknown kind, bad dimension, ...)."""


class DataError(ValueError):
    """Malformed input data (bad CSV row, unknown id, duplicate edge, ...)."""


class EstimationError(RuntimeError):
    """Base class for numerical failures during estimation."""


class SeparationError(EstimationError):
    """The GLM likelihood has no maximizer (perfect separation / degenerate outcome)."""


class SingularDesignError(EstimationError):
    """Design or moment matrix is rank deficient."""


class IdentificationError(EstimationError):
    """The sensitivity problem is not identified (e.g. collinear instruments)."""


class NumericsError(EstimationError):
    """Overflow or loss of precision that invalidates a result."""
