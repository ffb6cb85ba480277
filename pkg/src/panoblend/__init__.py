"""Blending algorithms for multi-stream panorama video.

Six blenders share one seam layout: feather and multi-band blending
(direct composition), MVC and convolution-pyramid blending (boundary
membranes), multi-spline and modified Poisson blending (gradient domain).
A bleeding metric scores the offset maps they produce.
"""

from .convpyr import ConvPyrFilters, convolve_pyramid, default_filters
from .core import (
    MappedStream,
    apply_offset,
    as_frame,
    as_mask,
    combine_offsets,
    compose_frames,
    compose_trimmed,
    frames_at,
    to_uint8,
)
from .direct import FeatherBlender, MultibandBlender, feather_blend, multiband_blend
from .errors import (
    BlendError,
    DataUnavailableError,
    DegenerateLayoutError,
    FrameRangeError,
    ManifestError,
    NumericalError,
    ParameterError,
    RankDeficiencyError,
    StructuralError,
    TopologyError,
)
from .gradient import (
    GradientMap,
    ModifiedPoissonBlender,
    MultiSplineBlender,
    SeamGradients,
    SpectralField,
    SplineGrid,
    build_gradient_map,
    mpb_blend,
    mpb_solve,
    msb_blend,
    msb_reconstruct,
    msb_solve,
    seam_gradients,
)
from .membrane import (
    BoundaryDiff,
    MembraneBlender,
    SparseBoundaryImage,
    boundary_diff,
    convpyr_membrane,
    membrane_blend,
    mvc_membrane,
)
from .metrics import (
    BleedingReport,
    bleeding_degree,
    bleeding_map,
    energy_map,
    otsu_threshold,
)
from .mvc import MvcTable, precompute_mvc
from .pyramid import Pyramid, collapse, gaussian_pyramid, laplacian_pyramid
from .seams import (
    BoundaryChain,
    SeamLayout,
    WeightMaps,
    compute_seams,
    extract_boundary,
    feather_weights,
    layout_from_labels,
)

__version__ = "0.1.0"
