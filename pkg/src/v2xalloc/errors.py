"""Exception types shared across the package."""


class V2XError(Exception):
    """Base class for all errors raised by v2xalloc."""


class ConfigError(V2XError):
    """Malformed or inconsistent scenario configuration."""


class DropError(V2XError):
    """Vehicle drop could not satisfy the requested counts (density too low)."""


class IntractableSearchError(V2XError):
    """Exhaustive search space exceeds the configured candidate cap."""


class DatasetFormatError(V2XError):
    """Dataset file is corrupted, truncated, or has an unexpected version."""


class TrainingDivergedError(V2XError):
    """Training loss became non-finite."""


class CheckpointError(V2XError):
    """Model checkpoint file is malformed or has an unexpected version."""
