"""Command-line front end.

Subcommands: analyze, profile, rebalance, compare, eval, tile. Business logic
lives in the library modules; this file only parses flags, loads files, and
renders reports. Output is byte-deterministic for identical inputs.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 infeasible
search, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import reports
from .arch import ArchSpec, ArchValidationError
from .builtins import BUILTIN_NAMES, builtin
from .config import ConfigError, parse_arch, serialize_arch
from .cost import CostError, TensorShape, analyze
from .deteval import (
    DEFAULT_INTERVALS,
    SizeInterval,
    evaluate,
    load_coco_ground_truth,
    load_coco_predictions,
)
from .rebalance import (
    InfeasibleSearchError,
    RebalanceProblem,
    compare,
    enumerate_feasible,
    rebalance,
)
from .tiler import plan_tiles, remap_ground_truth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5

DEFAULT_SHAPE = "3x640x512"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


def _parse_shape(text: str) -> TensorShape:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise CliError(f"--shape wants CxHxW, got {text!r}", EXIT_USAGE)
    try:
        c, h, w = (int(p) for p in parts)
        return TensorShape(c, h, w)
    except ValueError as exc:
        raise CliError(f"bad --shape {text!r}: {exc}", EXIT_USAGE) from None


def _parse_wh(text: str, flag: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise CliError(f"{flag} wants WxH, got {text!r}", EXIT_USAGE)
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise CliError(f"{flag} wants integers, got {text!r}", EXIT_USAGE) from None
    return w, h


def _parse_bounds(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise CliError(f"--bounds wants LO:HI, got {text!r}", EXIT_USAGE) from None


def _parse_intervals(text: str) -> tuple[SizeInterval, ...]:
    out = []
    for part in text.split(","):
        fields = part.split(":")
        if len(fields) != 3:
            raise CliError(f"--intervals wants name:lo:hi[,...], got {part!r}", EXIT_USAGE)
        name, lo, hi = fields
        try:
            out.append(SizeInterval(name, float(lo), math.inf if hi == "inf" else float(hi)))
        except ValueError as exc:
            raise CliError(f"bad interval {part!r}: {exc}", EXIT_USAGE) from None
    return tuple(out)


def _load_arch(ref: str) -> ArchSpec:
    """PATH (with or without .yaml) first, then builtin name."""
    for candidate in (Path(ref), Path(ref + ".yaml")):
        if candidate.is_file():
            return parse_arch(candidate.read_text())
    if ref in BUILTIN_NAMES:
        return builtin(ref)
    raise CliError(
        f"no such architecture {ref!r}: not a config file and not one of {', '.join(BUILTIN_NAMES)}",
        EXIT_VALIDATION,
    )


def _load_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {path}", EXIT_IO)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}", EXIT_VALIDATION) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _render(fmt: str, table: str, payload: dict, csv: str | None = None) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        if csv is None:
            raise CliError("csv format not supported for this command", EXIT_USAGE)
        return csv
    return table


def _cmd_analyze(args) -> int:
    arch = _load_arch(args.arch)
    report = analyze(arch, _parse_shape(args.shape))
    text = _render(args.format, reports.cost_table(report), reports.cost_json(report), reports.cost_csv(report))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_profile(args) -> int:
    arch = _load_arch(args.arch)
    report = analyze(arch, _parse_shape(args.shape))
    text = _render(args.format, reports.profile_table(report), reports.profile_json(report), reports.profile_csv(report))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_rebalance(args) -> int:
    arch = _load_arch(args.arch)
    problem = RebalanceProblem(
        base=arch,
        input_shape=_parse_shape(args.shape),
        parity_tolerance=args.tolerance,
        repeat_bounds=_parse_bounds(args.bounds),
        pivot=args.pivot,
    )
    if args.dump_feasible:
        feasible = enumerate_feasible(problem)
        payload = [
            {
                "repeats": list(c.repeats),
                "params": c.params,
                "macs": c.macs,
                "parity_error": c.parity_error,
                "early_share": c.early_share,
            }
            for c in feasible
        ]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    result = rebalance(problem)
    if args.emit_config:
        Path(args.emit_config).write_text(serialize_arch(result.bh_arch))
    text = _render(args.format, reports.rebalance_table(result), reports.rebalance_json(result))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    base = _load_arch(args.arch)
    variant = _load_arch(args.variant)
    record = compare(base, variant, _parse_shape(args.shape))
    text = _render(args.format, reports.compare_table(record), reports.compare_json(record))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    gts = load_coco_ground_truth(_load_json(args.gt))
    preds = load_coco_predictions(_load_json(args.pred))
    intervals = _parse_intervals(args.intervals) if args.intervals else DEFAULT_INTERVALS
    result = evaluate(preds, gts, intervals, args.iou)
    text = _render(args.format, reports.eval_table(result), reports.eval_json(result), reports.eval_csv(result))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_tile(args) -> int:
    image_w, image_h = _parse_wh(args.image, "--image")
    tile_w, tile_h = _parse_wh(args.tile, "--tile")
    plan = plan_tiles(image_w, image_h, tile_w, tile_h, args.overlap)

    if args.gt:
        gts = load_coco_ground_truth(_load_json(args.gt))
        per_tile = remap_ground_truth(gts, plan, args.retention)
        out_dir = Path(args.out_dir or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {"plan": reports.tile_plan_json(plan), "tiles": {}}
        for tile in plan.tiles:
            doc = {
                "images": [{"id": tile.tile_id, "width": plan.tile_w, "height": plan.tile_h}],
                "annotations": [
                    {
                        "image_id": tile.tile_id,
                        "category_id": gt.category,
                        "bbox": [gt.box.x, gt.box.y, gt.box.w, gt.box.h],
                    }
                    for gt in per_tile[tile.tile_id]
                ],
                "categories": sorted({gt.category for gt in gts}, key=repr),
            }
            name = f"tile_{tile.tile_id:04d}.json"
            (out_dir / name).write_text(json.dumps(doc, indent=2) + "\n")
            manifest["tiles"][str(tile.tile_id)] = {"file": name, "x0": tile.x0, "y0": tile.y0}
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    text = _render(args.format, reports.tile_plan_table(plan), reports.tile_plan_json(plan), reports.tile_plan_csv(plan))
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhkit",
        description="Analytic backbone cost, bottom-heavy rebalancing, detection evaluation, and tiling.",
        epilog="exit codes: 0 ok, 2 usage, 3 validation, 4 infeasible search, 5 I/O",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, shape=True):
        if shape:
            p.add_argument("--shape", default=DEFAULT_SHAPE, help="input CxHxW (default %(default)s)")
        p.add_argument("--format", choices=("table", "json", "csv"), default="table")
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("analyze", help="parameters, MACs, and shapes of one architecture")
    p.add_argument("--arch", required=True, help="config path or builtin name")
    add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("profile", help="per-stage MACs shares")
    p.add_argument("--arch", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("rebalance", help="synthesize a bottom-heavy variant under MACs parity")
    p.add_argument("--arch", required=True)
    p.add_argument("--tolerance", type=float, default=0.02, help="parity tolerance (default %(default)s)")
    p.add_argument("--bounds", default="1:16", help="repeat bounds LO:HI for every stage (default %(default)s)")
    p.add_argument("--pivot", type=int, default=None, help="override the derived pivot boundary")
    p.add_argument("--emit-config", metavar="PATH", help="also write the winning architecture config")
    p.add_argument("--dump-feasible", action="store_true", help="dump every parity-feasible candidate as JSON")
    add_common(p)
    p.set_defaults(func=_cmd_rebalance)

    p = sub.add_parser("compare", help="side-by-side cost deltas of two architectures")
    p.add_argument("--arch", required=True, help="base architecture")
    p.add_argument("--variant", required=True, help="variant architecture")
    add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("eval", help="size-stratified AP from COCO-style JSON files")
    p.add_argument("--gt", required=True, help="ground-truth JSON")
    p.add_argument("--pred", required=True, help="predictions JSON")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold (default %(default)s)")
    p.add_argument("--intervals", help="name:lo:hi[,...] with hi=inf allowed; default ships tiny/tiny1/tiny2/tiny3/small/all")
    add_common(p, shape=False)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("tile", help="plan overlapping tiles; optionally remap ground truth per tile")
    p.add_argument("--image", required=True, help="image size WxH")
    p.add_argument("--tile", default="640x512", help="tile size WxH (default %(default)s)")
    p.add_argument("--overlap", type=int, default=30, help="overlap in pixels (default %(default)s)")
    p.add_argument("--retention", type=float, default=0.5, help="min kept area fraction for clipped boxes")
    p.add_argument("--gt", help="ground-truth JSON to remap into per-tile files")
    p.add_argument("--out-dir", help="directory for per-tile JSON files and manifest")
    add_common(p, shape=False)
    p.set_defaults(func=_cmd_tile)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ArchValidationError, CostError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
