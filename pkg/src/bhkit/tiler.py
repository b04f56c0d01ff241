"""Deterministic overlapping-tile planning and annotation remap/merge.

Geometry only: no pixels are read or written. Tile origins sit at multiples
of stride = tile - overlap; a final tile is clamped to the image edge instead
of padding, and tiles larger than the image are clamped to it. Any box with
both sides <= overlap is therefore fully contained in at least one tile.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .deteval import Box, GroundTruth, Prediction, iou


@dataclass(frozen=True)
class Tile:
    tile_id: int
    x0: int
    y0: int


@dataclass(frozen=True)
class TilePlan:
    """A full-coverage set of equal-size tile rectangles, sorted by (y0, x0)."""

    image_w: int
    image_h: int
    tile_w: int
    tile_h: int
    overlap: int
    tiles: tuple[Tile, ...]

    def tile_by_id(self, tile_id: int) -> Tile:
        for tile in self.tiles:
            if tile.tile_id == tile_id:
                return tile
        raise KeyError(f"unknown tile id {tile_id}")


def _axis_origins(image: int, tile: int, overlap: int) -> list[int]:
    if tile >= image:
        return [0]
    stride = tile - overlap
    origins: list[int] = []
    k = 0
    while True:
        origin = k * stride
        if origin + tile >= image:
            last = image - tile
            if not origins or origins[-1] != last:
                origins.append(last)
            return origins
        origins.append(origin)
        k += 1


def plan_tiles(image_w: int, image_h: int, tile_w: int, tile_h: int, overlap: int) -> TilePlan:
    """Plan tile origins covering the image; tile size is clamped to the image."""
    if image_w < 1 or image_h < 1 or tile_w < 1 or tile_h < 1:
        raise ValueError("image and tile dims must be >= 1")
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    if overlap >= min(tile_w, tile_h):
        raise ValueError(f"overlap {overlap} must be smaller than the tile ({tile_w}x{tile_h})")
    eff_w = min(tile_w, image_w)
    eff_h = min(tile_h, image_h)
    xs = _axis_origins(image_w, eff_w, overlap)
    ys = _axis_origins(image_h, eff_h, overlap)
    tiles = tuple(
        Tile(tile_id=i, x0=x, y0=y)
        for i, (y, x) in enumerate((y, x) for y in ys for x in xs)
    )
    return TilePlan(image_w, image_h, eff_w, eff_h, overlap, tiles)


def _clip(box: Box, x0: int, y0: int, w: int, h: int) -> Box | None:
    left = max(box.x, x0)
    top = max(box.y, y0)
    right = min(box.x + box.w, x0 + w)
    bottom = min(box.y + box.h, y0 + h)
    if right <= left or bottom <= top:
        return None
    return Box(left, top, right - left, bottom - top)


def remap_ground_truth(
    gts: Sequence[GroundTruth],
    plan: TilePlan,
    retention: float = 0.5,
) -> dict[int, list[GroundTruth]]:
    """Clip each box into each tile and translate to tile-local coordinates.

    A clipped box is kept iff clipped area / original area >= retention.
    """
    if not 0 < retention <= 1:
        raise ValueError(f"retention must be in (0, 1], got {retention}")
    out: dict[int, list[GroundTruth]] = {tile.tile_id: [] for tile in plan.tiles}
    for gt in gts:
        for tile in plan.tiles:
            clipped = _clip(gt.box, tile.x0, tile.y0, plan.tile_w, plan.tile_h)
            if clipped is None or clipped.area < retention * gt.box.area:
                continue
            local = Box(clipped.x - tile.x0, clipped.y - tile.y0, clipped.w, clipped.h)
            out[tile.tile_id].append(replace(gt, box=local))
    return out


def _greedy_nms(preds: list[tuple[int, Prediction]], nms_iou: float) -> list[tuple[int, Prediction]]:
    survivors: list[tuple[int, Prediction]] = []
    for i, pred in preds:  # already in descending-score order
        if all(iou(pred.box, kept.box) <= nms_iou for _, kept in survivors):
            survivors.append((i, pred))
    return survivors


def merge_predictions(
    per_tile_preds: Mapping[int, Sequence[Prediction]],
    plan: TilePlan,
    nms_iou: float = 0.5,
) -> list[Prediction]:
    """Translate per-tile predictions to image coordinates and dedupe.

    Greedy per-category NMS suppresses a prediction when its IoU with an
    already-kept one exceeds nms_iou. Ties in score break by (tile id, input
    position). Output is in descending-score order; image_id passes through
    untouched, so feed tiles of a single source image per call.
    """
    if not 0 <= nms_iou < 1:
        raise ValueError(f"nms_iou must be in [0, 1), got {nms_iou}")
    translated: list[Prediction] = []
    for tile_id in sorted(per_tile_preds):
        tile = plan.tile_by_id(tile_id)
        for pred in per_tile_preds[tile_id]:
            moved = Box(pred.box.x + tile.x0, pred.box.y + tile.y0, pred.box.w, pred.box.h)
            translated.append(replace(pred, box=moved))

    by_category: dict[object, list[tuple[int, Prediction]]] = {}
    for i, pred in enumerate(translated):
        by_category.setdefault(pred.category, []).append((i, pred))

    kept: list[tuple[int, Prediction]] = []
    for category in sorted(by_category, key=repr):
        ordered = sorted(by_category[category], key=lambda item: (-item[1].score, item[0]))
        kept.extend(_greedy_nms(ordered, nms_iou))

    kept.sort(key=lambda item: (-item[1].score, item[0]))
    return [p for _, p in kept]
