"""Exception hierarchy shared by every package module."""


class DormancyLabError(Exception):
    """Base class for all errors raised by the library."""


class ShapeError(DormancyLabError, ValueError):
    """Dimension or shape mismatch between arrays, layers or specs."""


class NonFiniteError(DormancyLabError, ValueError):
    """NaN or infinite values where finite numbers are required."""


class ConfigError(DormancyLabError, ValueError):
    """Invalid, unknown or inconsistent configuration."""


class EpisodeDoneError(DormancyLabError, RuntimeError):
    """An environment was stepped after its episode finished."""


class ReplayBufferError(DormancyLabError, RuntimeError):
    """Replay buffer is empty or holds fewer items than required."""


class CheckpointError(DormancyLabError, RuntimeError):
    """Checkpoint file missing, corrupt or incompatible."""


class SchemaError(DormancyLabError, ValueError):
    """Run outputs with incompatible schemas or empty groups."""
