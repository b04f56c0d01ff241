"""bhkit: analytic tooling for convolutional backbones and tiny-object
detection evaluation.

- arch / config / builtins: structural IR, YAML config format, shipped nets
- cost: shape propagation, parameter and MAC accounting, stride ladders
- rebalance: bottom-heavy synthesis under MACs parity
- deteval: size-stratified AP at a single IoU threshold
- tiler: overlapping-tile planning, annotation remap, prediction merge
"""

from .arch import (
    ArchSpec,
    ArchValidationError,
    BlockSpec,
    LayerSpec,
    StageSpec,
    Violation,
    conv,
    maxpool,
    validate,
)
from .builtins import BUILTIN_NAMES, builtin
from .config import ConfigError, parse_arch, serialize_arch
from .cost import (
    CostError,
    CostReport,
    StrideLadder,
    TensorShape,
    analyze,
    layer_cost,
    propagate_shape,
    receptive_field,
    stage_profile,
    total_stride,
)
from .deteval import (
    DEFAULT_INTERVALS,
    Box,
    EvalResult,
    GroundTruth,
    Prediction,
    SizeInterval,
    evaluate,
    iou,
    object_size,
)
from .rebalance import (
    ComparisonRecord,
    InfeasibleSearchError,
    RebalanceProblem,
    RebalanceResult,
    compare,
    find_pivot,
    rebalance,
    transform_stem,
)
from .tiler import TilePlan, merge_predictions, plan_tiles, remap_ground_truth

__all__ = [
    "ArchSpec",
    "ArchValidationError",
    "BlockSpec",
    "LayerSpec",
    "StageSpec",
    "Violation",
    "conv",
    "maxpool",
    "validate",
    "BUILTIN_NAMES",
    "builtin",
    "ConfigError",
    "parse_arch",
    "serialize_arch",
    "CostError",
    "CostReport",
    "StrideLadder",
    "TensorShape",
    "analyze",
    "layer_cost",
    "propagate_shape",
    "receptive_field",
    "stage_profile",
    "total_stride",
    "DEFAULT_INTERVALS",
    "Box",
    "EvalResult",
    "GroundTruth",
    "Prediction",
    "SizeInterval",
    "evaluate",
    "iou",
    "object_size",
    "ComparisonRecord",
    "InfeasibleSearchError",
    "RebalanceProblem",
    "RebalanceResult",
    "compare",
    "find_pivot",
    "rebalance",
    "transform_stem",
    "TilePlan",
    "merge_predictions",
    "plan_tiles",
    "remap_ground_truth",
]

__version__ = "0.1.0"
