"""Optical Braille recognition for double-sided scans.

Detect recto/verso Braille dots (by segmentation or a boosted Haar
cascade), estimate and remove scan skew, build the Braille cell lattice,
decode cells to Unicode Braille text, evaluate detections against ground
truth, and drive a human-in-the-loop annotation service.
"""

__version__ = "0.1.0"

from .annotation import (
    DatasetManifest,
    ManifestEntry,
    PageAnnotation,
    import_dsbi,
    load_manifest,
    read_annotation,
    write_annotation,
    write_manifest,
)
from .cascade import (
    Cascade,
    CascadeStage,
    HaarFeature,
    Stump,
    detect_sliding,
    enumerate_features,
    harvest_samples,
    load_cascade,
    save_cascade,
    train_adaboost,
    train_cascade,
)
from .deskew import SkewEstimate, deskew_page, estimate_skew
from .dots import DotSet, Side, suppress_close_dots
from .errors import (
    AnnotationError,
    BrailleKitError,
    CascadeTrainingError,
    DegeneratePageError,
    GridInconsistencyError,
    InsufficientDotsError,
    InvalidImageError,
    ModelFormatError,
    SynthSpecError,
)
from .evaluation import (
    EvalReport,
    MatchResult,
    Metrics,
    evaluate_method,
    f1_from_precision_recall,
    match_dots,
    precision_recall_f1,
    render_report,
)
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .grid import (
    AssignResult,
    BrailleCell,
    GridModel,
    PageText,
    assign_dots,
    build_grid,
    cluster_lines,
    decode_cell,
    decode_cells,
    mirror_pattern,
    verso_from_recto,
)
from .pipeline import auto_annotate, make_detector, prepare_page
from .raster import (
    compute_integral,
    load_gray,
    load_image,
    normalize_gray,
    rect_sum,
    rotate,
    rotate_points,
    save_image,
    to_grayscale,
)
from .segmentation import (
    SegmentationConfig,
    detect_segmentation,
    extract_regions,
    pair_regions_to_dots,
    segment,
    split_wide_regions,
    suppress_edge_noise,
    thresholds_from_histogram,
)
from .synth import SynthSpec, random_patterns, render_double_sided, render_page
