"""
Exception hierarchy shared by every package of the lab.
"""


class LabError(Exception):
    """Base class for all lab failures"""


class ShapeError(LabError, ValueError):
    """Array shapes or dimensions do not agree"""


class LabelError(LabError, ValueError):
    """Class label outside {0, ..., C-1}"""


class NonFiniteError(LabError, ArithmeticError):
    """A computation produced NaN or Inf"""


class CheckpointError(LabError):
    """Checkpoint missing, truncated or inconsistent with its manifest"""


class DatasetError(LabError, ValueError):
    """Dataset file or arrays are malformed"""


class ConfigError(LabError, ValueError):
    """Run configuration cannot be resolved"""


class TrainingDivergedError(LabError):
    """Training loss became non-finite"""


class BoundViolationError(LabError):
    """Risk decomposition identity or upper bound failed"""
