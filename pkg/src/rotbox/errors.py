"""Exception types shared across the package.

Everything raised on bad user input derives from RotboxError so callers
(and the CLI) can separate input problems from genuine bugs.
"""


class RotboxError(Exception):
    """Base class for all rotbox input/domain errors."""


class NotARectangle(RotboxError):
    """Four points do not form a rectangle within tolerance."""


class AnchorOutsideBox(RotboxError):
    """Anchor point is not strictly inside the box."""


class InsufficientData(RotboxError):
    """Too few ground-truth samples to fit anchor priors."""


class NonPositiveDistance(RotboxError):
    """Side distances must be strictly positive."""


class ShapeMismatch(RotboxError):
    """Array shapes are inconsistent across maps/levels."""


class TensorFileError(RotboxError):
    """Malformed tensor container file."""


class BadMagic(TensorFileError):
    """Tensor file does not start with the expected magic bytes."""


class Truncated(TensorFileError):
    """Tensor file payload is shorter than the header promises."""


class DimOverflow(TensorFileError):
    """Tensor file declares an implausible number of dimensions/elements."""


class AnnotationError(RotboxError):
    """Malformed annotation record."""


class ConfigError(RotboxError):
    """Malformed configuration file."""


class PlacementFailed(RotboxError):
    """Synthetic scene generator could not place the requested boxes."""


class IoFailure(RotboxError):
    """Failed to write an output file."""


class NoGroundTruth(RotboxError):
    """Average precision is undefined without ground-truth objects."""


class ValidationError(RotboxError):
    """Malformed array-style input (wrong width, non-finite, bad range)."""
