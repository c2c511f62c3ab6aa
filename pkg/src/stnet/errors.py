"""Exception types shared across the package."""


class StnetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(StnetError, ValueError):
    """Operand shapes are incompatible. The message names both shapes."""


class ValidationError(StnetError, ValueError):
    """An argument value is outside its documented domain."""


class ConfigurationError(StnetError, ValueError):
    """A model or experiment configuration cannot be realized."""


class FormatError(StnetError, ValueError):
    """A byte stream does not conform to the expected file format."""


class TruncatedFileError(FormatError):
    """Payload length disagrees with the header or record size."""


class CorruptRecordError(FormatError):
    """A record holds an impossible value. The message names the record."""


class NotNpyError(FormatError):
    """The magic bytes are not those of an NPY file."""


class UnsupportedLayoutError(FormatError):
    """NPY file declares Fortran order, which is not supported."""


class UnsupportedDtypeError(FormatError):
    """NPY file declares an element kind outside the supported set."""


class UnsupportedImageError(FormatError):
    """Image file is not binary PPM (P6) with maxval 255."""
