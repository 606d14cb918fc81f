"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(ValueError):
    """A configuration value is out of the supported range."""


class DecodeError(RuntimeError):
    """An image file could not be decoded."""


class CheckpointError(RuntimeError):
    """A checkpoint file is malformed or does not match the model."""


class LossCsvError(RuntimeError):
    """A loss CSV file is malformed."""
