"""Size-stratified detection evaluation: per-interval AP at one IoU threshold.

Protocol, applied independently per size interval:

- An object's size is sqrt(box area). Intervals are half-open, lo <= size < hi,
  so adjacent intervals sharing a printed endpoint never double-count.
- Ground truth outside the interval is not dropped: it acts as an ignore
  region. A prediction whose best remaining option is an out-of-interval
  ground-truth box at IoU >= threshold is discarded (neither TP nor FP).
- Matching runs per image and category, greedily in descending score.
  Each prediction claims the unmatched in-interval ground truth of highest
  IoU >= threshold; in-interval matches take priority over the ignore rule.
  Score ties break by input position, IoU ties by ground-truth input
  position, which makes evaluation a pure function of its inputs.
- AP integrates the precision-recall curve with all-points interpolation.
  The interval's AP is the mean over categories that have at least one
  in-interval ground-truth object; 0.0 if there is none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: top-left corner plus size, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box needs positive size, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class GroundTruth:
    image_id: object
    category: object
    box: Box


@dataclass(frozen=True)
class Prediction:
    image_id: object
    category: object
    box: Box
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class SizeInterval:
    """Half-open absolute-size range [lo, hi)."""

    name: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not 0 <= self.lo < self.hi:
            raise ValueError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi})")

    def contains(self, size: float) -> bool:
        return self.lo <= size < self.hi


DEFAULT_INTERVALS: tuple[SizeInterval, ...] = (
    SizeInterval("tiny", 2, 20),
    SizeInterval("tiny1", 2, 8),
    SizeInterval("tiny2", 8, 12),
    SizeInterval("tiny3", 12, 20),
    SizeInterval("small", 20, 32),
    SizeInterval("all", 2, math.inf),
)


@dataclass(frozen=True)
class IntervalMetrics:
    ap: float
    n_gt: int
    n_pred: int


@dataclass(frozen=True)
class EvalResult:
    per_interval: dict[str, IntervalMetrics]
    iou_threshold: float


def object_size(box: Box) -> float:
    """Absolute size: square root of the box area."""
    return math.sqrt(box.area)


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


TP = "tp"
FP = "fp"
IGNORED = "ignored"


def match_group(
    preds: list[tuple[int, Prediction]],
    gts: list[tuple[int, GroundTruth]],
    in_interval: dict[int, bool],
    iou_threshold: float,
) -> dict[int, str]:
    """Greedy matching for one (image, category) group.

    ``preds`` must already be in evaluation order (descending score, ties by
    input position). Returns outcome per prediction index: tp, fp, or ignored.
    Out-of-interval ground truth is never claimed, so it can absorb any number
    of predictions into the ignored bucket.
    """
    claimed: set[int] = set()
    outcomes: dict[int, str] = {}
    for p_idx, pred in preds:
        best_gt = None
        best_iou = 0.0
        for g_idx, gt in gts:
            if not in_interval[g_idx] or g_idx in claimed:
                continue
            v = iou(pred.box, gt.box)
            if v >= iou_threshold and v > best_iou:
                best_iou = v
                best_gt = g_idx
        if best_gt is not None:
            claimed.add(best_gt)
            outcomes[p_idx] = TP
            continue
        ignore_iou = max(
            (iou(pred.box, gt.box) for g_idx, gt in gts if not in_interval[g_idx]),
            default=0.0,
        )
        outcomes[p_idx] = IGNORED if ignore_iou >= iou_threshold else FP
    return outcomes


def average_precision(tp_flags: np.ndarray, n_gt: int) -> float:
    """All-points interpolated AP from TP flags in descending-score order."""
    if n_gt == 0 or len(tp_flags) == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    moved = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[moved + 1] - mrec[moved]) * mpre[moved + 1]))


def evaluate(
    preds: list[Prediction],
    gts: list[GroundTruth],
    intervals: tuple[SizeInterval, ...] = DEFAULT_INTERVALS,
    iou_threshold: float = 0.5,
) -> EvalResult:
    """Per-interval AP over the given predictions and ground truth.

    n_pred counts predictions scored as TP or FP (discarded ones excluded).
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")

    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    pred_groups: dict[tuple, list[tuple[int, Prediction]]] = {}
    for i in order:
        pred_groups.setdefault((preds[i].image_id, preds[i].category), []).append((i, preds[i]))
    gt_groups: dict[tuple, list[tuple[int, GroundTruth]]] = {}
    for j, gt in enumerate(gts):
        gt_groups.setdefault((gt.image_id, gt.category), []).append((j, gt))

    sizes = [object_size(gt.box) for gt in gts]

    per_interval: dict[str, IntervalMetrics] = {}
    for interval in intervals:
        in_interval = {j: interval.contains(sizes[j]) for j in range(len(gts))}
        outcomes: dict[int, str] = {}
        for key, group_preds in pred_groups.items():
            group_gts = gt_groups.get(key, [])
            outcomes.update(match_group(group_preds, group_gts, in_interval, iou_threshold))

        categories = sorted(
            {gt.category for j, gt in enumerate(gts) if in_interval[j]},
            key=repr,
        )
        aps = []
        for category in categories:
            n_gt_cat = sum(1 for j, gt in enumerate(gts) if in_interval[j] and gt.category == category)
            flags = np.array(
                [outcomes[i] == TP for i in order if preds[i].category == category and outcomes[i] != IGNORED],
                dtype=bool,
            )
            aps.append(average_precision(flags, n_gt_cat))

        n_scored = sum(1 for i in order if outcomes[i] != IGNORED)
        per_interval[interval.name] = IntervalMetrics(
            ap=float(sum(aps) / len(aps)) if aps else 0.0,
            n_gt=sum(in_interval.values()),
            n_pred=n_scored,
        )
    return EvalResult(per_interval=per_interval, iou_threshold=iou_threshold)


def load_coco_ground_truth(doc: dict) -> list[GroundTruth]:
    """Ground truth from a COCO-style dict: images, annotations, categories."""
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise ValueError(f"ground-truth document missing {key!r}")
    image_ids = {img["id"] for img in doc["images"]}
    out = []
    for k, ann in enumerate(doc["annotations"]):
        try:
            x, y, w, h = ann["bbox"]
            if ann["image_id"] not in image_ids:
                raise ValueError(f"unknown image_id {ann['image_id']!r}")
            out.append(GroundTruth(ann["image_id"], ann["category_id"], Box(x, y, w, h)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"annotations[{k}]: {exc}") from None
    return out


def load_coco_predictions(doc: list) -> list[Prediction]:
    """Predictions from a COCO-style result list."""
    if not isinstance(doc, list):
        raise ValueError("prediction document must be a JSON array")
    out = []
    for k, det in enumerate(doc):
        try:
            x, y, w, h = det["bbox"]
            out.append(Prediction(det["image_id"], det["category_id"], Box(x, y, w, h), det["score"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"predictions[{k}]: {exc}") from None
    return out
