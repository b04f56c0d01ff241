"""Render cost reports, comparisons, evaluation results, and tile plans as
plain-text tables, JSON-ready dicts, or CSV. All output is byte-deterministic
for identical inputs."""

from __future__ import annotations

from .cost import CostReport
from .deteval import EvalResult
from .rebalance import ComparisonRecord, RebalanceResult
from .tiler import TilePlan


def fmt_params(n: int) -> str:
    return f"{n / 1e6:.2f}M"


def fmt_gflops(macs: int) -> str:
    return f"{macs / 1e9:.2f}"


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out) + "\n"


def cost_table(report: CostReport) -> str:
    rows = [
        [s.name, fmt_params(s.params), fmt_gflops(s.macs), f"{s.macs_share:.4f}"]
        for s in report.per_stage
    ]
    rows.append(["total", fmt_params(report.total_params), fmt_gflops(report.total_macs), "1.0000"])
    head = f"input {report.input_shape}  params {fmt_params(report.total_params)}  gflops {fmt_gflops(report.total_macs)}\n"
    return head + _table(["stage", "params", "gflops", "macs_share"], rows)


def cost_json(report: CostReport) -> dict:
    return {
        "input_shape": [report.input_shape.channels, report.input_shape.height, report.input_shape.width],
        "per_layer": [
            {
                "layer_id": l.layer_id,
                "params": l.params,
                "macs": l.macs,
                "out_shape": [l.out_shape.channels, l.out_shape.height, l.out_shape.width],
            }
            for l in report.per_layer
        ],
        "per_stage": [
            {"stage": s.name, "params": s.params, "macs": s.macs, "macs_share": s.macs_share}
            for s in report.per_stage
        ],
        "totals": {"params": report.total_params, "macs": report.total_macs, "gflops": report.gflops},
    }


def cost_csv(report: CostReport) -> str:
    lines = ["stage,params,macs,macs_share"]
    lines.extend(
        f"{s.name},{s.params},{s.macs},{s.macs_share:.9f}" for s in report.per_stage
    )
    lines.append(f"total,{report.total_params},{report.total_macs},1.0")
    return "\n".join(lines) + "\n"


def profile_table(report: CostReport) -> str:
    rows = [[s.name, f"{s.macs_share:.4f}", f"{100 * s.macs_share:6.2f}%"] for s in report.per_stage]
    return _table(["stage", "macs_share", "percent"], rows)


def profile_json(report: CostReport) -> dict:
    return {
        "input_shape": [report.input_shape.channels, report.input_shape.height, report.input_shape.width],
        "shares": [{"stage": s.name, "macs_share": s.macs_share} for s in report.per_stage],
    }


def profile_csv(report: CostReport) -> str:
    lines = ["stage,macs_share"]
    lines.extend(f"{s.name},{s.macs_share:.9f}" for s in report.per_stage)
    return "\n".join(lines) + "\n"


def compare_table(record: ComparisonRecord) -> str:
    rows = [
        [s.name, f"{s.base_share:.4f}", f"{s.variant_share:.4f}", f"{s.delta:+.4f}"]
        for s in record.shares
    ]
    head = (
        f"base    {record.base_name}: {fmt_params(record.base_params)} params, {fmt_gflops(record.base_macs)} gflops\n"
        f"variant {record.variant_name}: {fmt_params(record.variant_params)} params, {fmt_gflops(record.variant_macs)} gflops\n"
        f"delta   {record.d_params / 1e6:+.2f}M params, {record.d_gflops:+.2f} gflops\n"
        f"stride ladder base    {record.base_ladder}\n"
        f"stride ladder variant {record.variant_ladder}\n"
    )
    return head + _table(["stage", "base_share", "variant_share", "delta"], rows)


def compare_json(record: ComparisonRecord) -> dict:
    return {
        "base": {"name": record.base_name, "params": record.base_params, "macs": record.base_macs},
        "variant": {"name": record.variant_name, "params": record.variant_params, "macs": record.variant_macs},
        "d_params": record.d_params,
        "d_gflops": record.d_gflops,
        "shares": [
            {
                "stage": s.name,
                "base_share": s.base_share,
                "variant_share": s.variant_share,
                "delta": s.delta,
            }
            for s in record.shares
        ],
        "stride_ladders": {"base": list(record.base_ladder), "variant": list(record.variant_ladder)},
    }


def rebalance_table(result: RebalanceResult) -> str:
    lines = [
        f"winner repeats      {result.repeats}",
        f"parity error        {result.parity_error:.6f}",
        f"early MACs share    {result.early_share:.6f}",
        f"params              {result.params} ({fmt_params(result.params)})",
        f"gflops              {fmt_gflops(result.report.total_macs)}",
        f"candidates examined {result.candidates_examined}",
    ]
    return "\n".join(lines) + "\n"


def rebalance_json(result: RebalanceResult) -> dict:
    return {
        "repeats": list(result.repeats),
        "parity_error": result.parity_error,
        "early_share": result.early_share,
        "params": result.params,
        "macs": result.report.total_macs,
        "gflops": result.report.gflops,
        "candidates_examined": result.candidates_examined,
    }


def eval_table(result: EvalResult) -> str:
    rows = [
        [name, f"{m.ap:.4f}", str(m.n_gt), str(m.n_pred)]
        for name, m in result.per_interval.items()
    ]
    head = f"iou threshold {result.iou_threshold}\n"
    return head + _table(["interval", "ap", "n_gt", "n_pred"], rows)


def eval_json(result: EvalResult) -> dict:
    return {
        "iou_threshold": result.iou_threshold,
        "per_interval": {
            name: {"ap": m.ap, "n_gt": m.n_gt, "n_pred": m.n_pred}
            for name, m in result.per_interval.items()
        },
    }


def eval_csv(result: EvalResult) -> str:
    lines = ["interval,ap,n_gt,n_pred"]
    lines.extend(
        f"{name},{m.ap:.9f},{m.n_gt},{m.n_pred}" for name, m in result.per_interval.items()
    )
    return "\n".join(lines) + "\n"


def tile_plan_json(plan: TilePlan) -> dict:
    return {
        "image_w": plan.image_w,
        "image_h": plan.image_h,
        "tile_w": plan.tile_w,
        "tile_h": plan.tile_h,
        "overlap": plan.overlap,
        "tiles": [{"id": t.tile_id, "x0": t.x0, "y0": t.y0} for t in plan.tiles],
    }


def tile_plan_table(plan: TilePlan) -> str:
    rows = [[str(t.tile_id), str(t.x0), str(t.y0)] for t in plan.tiles]
    head = (
        f"image {plan.image_w}x{plan.image_h}  tile {plan.tile_w}x{plan.tile_h}  "
        f"overlap {plan.overlap}  tiles {len(plan.tiles)}\n"
    )
    return head + _table(["id", "x0", "y0"], rows)


def tile_plan_csv(plan: TilePlan) -> str:
    lines = ["id,x0,y0"]
    lines.extend(f"{t.tile_id},{t.x0},{t.y0}" for t in plan.tiles)
    return "\n".join(lines) + "\n"
