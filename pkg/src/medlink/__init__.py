"""Medial and skeletal linking structures for planar multi-region configurations."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .bounding import BoundingSpec, apply_threshold, realize_bounding, transversality_check
from .config import (
    Configuration,
    Region,
    SharedSegment,
    detect_shared_boundaries,
    load_configuration,
    smooth_corners,
    validate_configuration,
)
from .errors import (
    ConsistencyError,
    InputError,
    MedlinkError,
    NotLinkedError,
    ParameterError,
    ResolutionError,
    ResourceError,
    UndefinedLinkingError,
    ValidationError,
)
from .linking import (
    LinkRecord,
    LinkType2D,
    LinkingStructure,
    compute_external_axis,
    compute_linking,
    linking_flow,
    validate_structure,
)
from .medial import (
    StratumLabel,
    build_double,
    classify_medial_points,
    compatibility_check,
    compute_medial_axis,
    radial_flow,
)
from .pipeline import AnalysisOptions, AnalysisReport, analyze, run_analysis
from .spherical import compute_spherical_axis, height, reconstruct_B_infinity_boundary
