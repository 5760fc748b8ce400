class EVDQNError(Exception):
    """Base class; ``kind`` is the short diagnostic class printed by the CLI."""

    kind = "error"


class ConfigError(EVDQNError, ValueError):
    kind = "config"


class EligibilityError(EVDQNError, ValueError):
    kind = "eligibility"


class DataError(EVDQNError, ValueError):
    kind = "data"


class ShapeError(EVDQNError, ValueError):
    kind = "shape-mismatch"


class NumericError(EVDQNError, ArithmeticError):
    kind = "numeric"


class UndefinedCorrelationError(EVDQNError, ArithmeticError):
    kind = "undefined-correlation"


class CapacityError(EVDQNError, RuntimeError):
    kind = "capacity"


class InsufficientData(EVDQNError, LookupError):
    """Replay memory does not yet hold more than ``batch_size`` transitions."""

    kind = "insufficient-data"
