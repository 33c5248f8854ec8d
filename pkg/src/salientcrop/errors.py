"""Exception hierarchy shared across the package."""


class SalientCropError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SalientCropError, ValueError):
    pass


class DecodeError(SalientCropError):
    """Image bytes are malformed or in an unsupported format."""


class ImageTooSmall(SalientCropError, ValueError):
    pass


class InsufficientData(SalientCropError, ValueError):
    """Fewer distinct descriptors than requested visual words."""


class NoFeatures(SalientCropError):
    """A histogram was requested for an empty descriptor list."""


class MissingClass(SalientCropError, ValueError):
    pass


class DimensionMismatch(SalientCropError, ValueError):
    pass


class ManifestError(SalientCropError):
    pass


class StoreError(SalientCropError):
    pass


class IoError(StoreError, OSError):
    pass


class FormatError(StoreError):
    """Bad magic bytes, unknown version, or wrong archive kind."""


class CorruptArchive(StoreError):
    """Payload lengths disagree with the metadata or the file is truncated."""
