"""Analytic shape propagation and cost accounting.

Conventions (they determine every number this module reports):

- out_h = floor((h + 2*padding - kernel_h) / stride) + 1, same for width.
- conv params = kernel_h * kernel_w * c_in * c_out, plus c_out if the conv
  has a bias and 2 * c_out if it is followed by a norm.
- conv MACs = kernel_h * kernel_w * c_in * c_out * out_h * out_w. One MAC
  counts as one FLOP, so GFLOPs = MACs / 1e9.
- Pooling, normalization, activations, bias adds, and residual additions
  cost zero MACs. Shortcut projection convs are costed like any conv.

All counts are exact integers; GFLOPs is derived at presentation time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import (
    CONV,
    SHORTCUT_PROJECTION,
    ArchSpec,
    LayerSpec,
    conv,
    iter_block_instances,
    require_valid,
    resolve_shortcut,
)


@dataclass(frozen=True)
class TensorShape:
    """Channels-first feature map shape."""

    channels: int
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.channels < 1 or self.height < 1 or self.width < 1:
            raise ValueError(f"all shape dims must be >= 1, got {self}")

    def __str__(self) -> str:
        return f"{self.channels}x{self.height}x{self.width}"


class CostError(ValueError):
    """A layer produced a degenerate (empty) output, or shapes cannot compose."""

    def __init__(self, message: str, layer_id: str | None = None):
        self.layer_id = layer_id
        super().__init__(f"{layer_id}: {message}" if layer_id else message)


@dataclass(frozen=True)
class LayerReport:
    layer_id: str
    params: int
    macs: int
    out_shape: TensorShape


@dataclass(frozen=True)
class StageReport:
    name: str
    params: int
    macs: int
    macs_share: float


@dataclass(frozen=True)
class CostReport:
    """Per-layer, per-stage, and total cost of one architecture at one input size."""

    per_layer: tuple[LayerReport, ...]
    per_stage: tuple[StageReport, ...]
    input_shape: TensorShape
    total_params: int
    total_macs: int

    @property
    def gflops(self) -> float:
        return self.total_macs / 1e9

    def stage(self, name: str) -> StageReport:
        for s in self.per_stage:
            if s.name == name:
                return s
        raise KeyError(name)


def propagate_shape(layer: LayerSpec, in_shape: TensorShape) -> TensorShape:
    """Output shape of one layer; raises CostError if any dim collapses below 1."""
    out_h = (in_shape.height + 2 * layer.padding - layer.kernel_h) // layer.stride + 1
    out_w = (in_shape.width + 2 * layer.padding - layer.kernel_w) // layer.stride + 1
    if out_h < 1 or out_w < 1:
        raise CostError(
            f"{layer.kind} {layer.kernel_h}x{layer.kernel_w} stride {layer.stride} "
            f"on {in_shape} yields empty output {out_h}x{out_w}"
        )
    channels = layer.out_channels if layer.kind == CONV else in_shape.channels
    return TensorShape(channels, out_h, out_w)


def layer_cost(layer: LayerSpec, in_shape: TensorShape) -> tuple[int, int]:
    """(params, macs) of one layer at the given input shape. Pooling costs zero."""
    if layer.kind != CONV:
        return 0, 0
    out = propagate_shape(layer, in_shape)
    weights = layer.kernel_h * layer.kernel_w * in_shape.channels * layer.out_channels
    params = weights
    if layer.has_bias:
        params += layer.out_channels
    if layer.has_norm:
        params += 2 * layer.out_channels
    macs = weights * out.height * out.width
    return params, macs


def _projection_layer(out_channels: int, stride: int) -> LayerSpec:
    return conv(1, out_channels, stride=stride, padding=0, norm=True, bias=False)


@dataclass(frozen=True)
class BlockCost:
    """Cost of one unrolled block instance (shortcut projection included)."""

    stage_name: str
    index: int
    params: int
    macs: int


def _walk(arch: ArchSpec, input_shape: TensorShape):
    """Yield (layer_id, stage_name, params, macs, out_shape, block_index) through the net.

    Shortcut projections are emitted after their block's main layers with the
    block's input shape as their input. block_index is None for stem layers.
    """
    shape = input_shape
    for i, layer in enumerate(arch.stem):
        layer_id = f"stem[{i}]"
        try:
            out = propagate_shape(layer, shape)
        except CostError as exc:
            raise CostError(str(exc), layer_id=layer_id) from None
        params, macs = layer_cost(layer, shape)
        yield layer_id, "stem", params, macs, out, None
        shape = out

    for block in iter_block_instances(arch):
        block_in = shape
        for j, layer in enumerate(block.layers):
            layer_id = f"{block.stage_name}/block{block.index}/layers[{j}]"
            try:
                out = propagate_shape(layer, shape)
            except CostError as exc:
                raise CostError(str(exc), layer_id=layer_id) from None
            params, macs = layer_cost(layer, shape)
            yield layer_id, block.stage_name, params, macs, out, block.index
            shape = out

        mode = resolve_shortcut(block.shortcut, block_in.channels, shape.channels, block.stride)
        if mode == SHORTCUT_PROJECTION:
            layer_id = f"{block.stage_name}/block{block.index}/shortcut"
            proj = _projection_layer(shape.channels, block.stride)
            out = propagate_shape(proj, block_in)
            if out != shape:
                raise CostError(
                    f"projection output {out} does not match main path output {shape}",
                    layer_id=layer_id,
                )
            params, macs = layer_cost(proj, block_in)
            yield layer_id, block.stage_name, params, macs, out, block.index


def analyze(arch: ArchSpec, input_shape: TensorShape) -> CostReport:
    """Full cost report for ``arch`` at ``input_shape``.

    The stem is reported as a pseudo-stage named "stem". Per-stage MAC shares
    are fractions of the total and sum to 1.
    """
    require_valid(arch)
    per_layer: list[LayerReport] = []
    stage_order: list[str] = ["stem"]
    stage_params: dict[str, int] = {"stem": 0}
    stage_macs: dict[str, int] = {"stem": 0}
    for stage in arch.stages:
        stage_order.append(stage.name)
        stage_params[stage.name] = 0
        stage_macs[stage.name] = 0

    for layer_id, stage_name, params, macs, out, _ in _walk(arch, input_shape):
        per_layer.append(LayerReport(layer_id, params, macs, out))
        stage_params[stage_name] += params
        stage_macs[stage_name] += macs

    total_params = sum(stage_params.values())
    total_macs = sum(stage_macs.values())
    per_stage = tuple(
        StageReport(
            name=name,
            params=stage_params[name],
            macs=stage_macs[name],
            macs_share=stage_macs[name] / total_macs if total_macs else 0.0,
        )
        for name in stage_order
    )
    return CostReport(
        per_layer=tuple(per_layer),
        per_stage=per_stage,
        input_shape=input_shape,
        total_params=total_params,
        total_macs=total_macs,
    )


def block_costs(arch: ArchSpec, input_shape: TensorShape) -> tuple[tuple[int, int], list[BlockCost]]:
    """((stem_params, stem_macs), per-block costs) for incremental accounting."""
    require_valid(arch)
    stem_params = stem_macs = 0
    blocks: dict[tuple[str, int], list[int]] = {}
    order: list[tuple[str, int]] = []
    for _, stage_name, params, macs, _, block_index in _walk(arch, input_shape):
        if block_index is None:
            stem_params += params
            stem_macs += macs
            continue
        key = (stage_name, block_index)
        if key not in blocks:
            blocks[key] = [0, 0]
            order.append(key)
        blocks[key][0] += params
        blocks[key][1] += macs
    return (stem_params, stem_macs), [
        BlockCost(stage_name, index, blocks[(stage_name, index)][0], blocks[(stage_name, index)][1])
        for stage_name, index in order
    ]


def stage_profile(report: CostReport) -> list[tuple[str, float]]:
    """(stage name, MACs share) pairs, stem pseudo-stage included."""
    return [(s.name, s.macs_share) for s in report.per_stage]


@dataclass(frozen=True)
class StrideLadder:
    """Total main-path stride and the cumulative stride at each stage boundary."""

    total: int
    cumulative: tuple[int, ...]  # after stem, then after each stage
    boundaries: tuple[str, ...]  # "stem", stage names


def total_stride(arch: ArchSpec) -> StrideLadder:
    """Product of strides along the main path, with per-boundary cumulative values."""
    require_valid(arch)
    cum = 1
    cumulative: list[int] = []
    boundaries: list[str] = []
    for layer in arch.stem:
        cum *= layer.stride
    cumulative.append(cum)
    boundaries.append("stem")
    for block in iter_block_instances(arch):
        for layer in block.layers:
            cum *= layer.stride
        if block.index == _last_index(arch, block.stage_name):
            cumulative.append(cum)
            boundaries.append(block.stage_name)
    return StrideLadder(total=cum, cumulative=tuple(cumulative), boundaries=tuple(boundaries))


def _last_index(arch: ArchSpec, stage_name: str) -> int:
    for stage in arch.stages:
        if stage.name == stage_name:
            return stage.repeats - 1
    raise KeyError(stage_name)


@dataclass(frozen=True)
class ReceptiveField:
    boundary: str
    rf: int


def receptive_field(arch: ArchSpec) -> tuple[ReceptiveField, ...]:
    """Receptive field at each stage boundary along the main path.

    Standard recurrence: rf += (k - 1) * jump, jump *= stride, with
    k = max(kernel_h, kernel_w). Shortcut convs are off the main path and
    do not contribute.
    """
    require_valid(arch)
    rf = 1
    jump = 1
    out: list[ReceptiveField] = []

    def step(layer: LayerSpec) -> None:
        nonlocal rf, jump
        rf += (max(layer.kernel_h, layer.kernel_w) - 1) * jump
        jump *= layer.stride

    for layer in arch.stem:
        step(layer)
    out.append(ReceptiveField("stem", rf))
    for block in iter_block_instances(arch):
        for layer in block.layers:
            step(layer)
        if block.index == _last_index(arch, block.stage_name):
            out.append(ReceptiveField(block.stage_name, rf))
    return tuple(out)
