"""roireg: image registration through matched region-of-interest mask pairs.

The pipeline takes two images, each with a feature map and a set of
candidate binary masks, filters and embeds the masks, matches them by
prototype cosine similarity, and optionally fits a dense displacement
field to the matched pairs.
"""

__version__ = "0.1.0"

from .core import (AffineTransform, BinaryMask, DisplacementField, FeatureMap,
                   Image, MaskMeta, MaskSet, Prototype, RoiPair, RoiPairing,
                   mask_centroid, mask_iou, overlap_ratio)
from .ddf import (DisplacedPointWarning, FitConfig, LossBreakdown,
                  all_voxel_points, ddf_to_roi_pairs, fit_ddf, load_ddf,
                  reconstruct_ddf_from_pairs, roi_loss, sample_field, save_ddf,
                  smoothness_loss, total_loss_and_grad, warp_mask)
from .errors import (ChannelMismatchError, DegenerateMaskError,
                     DimMismatchError, EmptyListError, EmptyMaskError,
                     EmptyPairingError, GridTooSmallError,
                     InconsistentDimsError, InterchangeError,
                     ManifestParseError, MissingFileError, NonFiniteLossError,
                     OutOfBoundsError, PointOutOfRangeError, RoiRegError,
                     ShapePlacementError, SizeMismatchError,
                     SliceOutOfRangeError, UnsupportedVersionError)
from .interchange import (CaseManifest, build_manifest, manifest_to_json,
                          parse_manifest, read_case, read_manifest, save_case,
                          write_case)
from .metrics import EvalReport, dice_binary, evaluate, tre_rms
from .pipeline import (FilterConfig, MatchStats, SimilarityMatrix,
                       assemble_candidates, compute_prototype,
                       compute_prototypes, downsample_mask, filter_roi_indices,
                       filter_rois, match_cases, match_rois, similarity_matrix,
                       stack_slices_to_3d)
from .synthetic import (GroundTruth, SyntheticSpec, affine_about_center,
                        generate_case, rasterize_shape)

__all__ = [name for name in dir() if not name.startswith("_")]
