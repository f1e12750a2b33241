"""Exception types raised across the package."""


class RoiRegError(Exception):
    """Base class for every error this package raises on purpose."""


class DimMismatchError(RoiRegError):
    """Two grids that must share dimensions do not."""


class EmptyMaskError(RoiRegError):
    """An operation that needs at least one true voxel got an empty mask."""


class EmptyListError(RoiRegError):
    """An aggregate metric was asked for on an empty collection."""


class ChannelMismatchError(RoiRegError):
    """Prototype vectors with different channel counts were combined."""


class DegenerateMaskError(RoiRegError):
    """A mask vanished (total weight ~ 0) at the feature-grid resolution."""


class GridTooSmallError(RoiRegError):
    """A finite-difference operation needs at least 2 voxels per axis."""


class EmptyPairingError(RoiRegError):
    """Displacement fitting requires at least one ROI pair."""


class NonFiniteLossError(RoiRegError):
    """The optimization loss left the finite range (step size too large)."""


class PointOutOfRangeError(RoiRegError):
    """A sample point lies outside the displacement field's grid."""


class SliceOutOfRangeError(RoiRegError):
    """A 2D slice index exceeds the target volume's extent."""


class OutOfBoundsError(RoiRegError):
    """Shape parameters place the shape outside the target grid."""


class ShapePlacementError(RoiRegError):
    """The synthetic generator could not place shapes within its retry budget."""


class InterchangeError(RoiRegError):
    """Base class for case-directory format errors."""


class ManifestParseError(InterchangeError):
    """manifest.json is missing, malformed, or violates its schema."""


class UnsupportedVersionError(InterchangeError):
    """The manifest declares a format version this reader does not know."""


class SizeMismatchError(InterchangeError):
    """A raw file's byte length disagrees with the manifest's dims/dtype."""


class MissingFileError(InterchangeError, FileNotFoundError):
    """The manifest references a file that does not exist."""


class InconsistentDimsError(InterchangeError):
    """Objects handed to the writer disagree on grid dimensions."""
