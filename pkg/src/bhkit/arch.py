"""Structural descriptions of convolutional backbones.

A backbone is a stem (flat list of layers) followed by stages, each stage
repeating a block template. Nothing here is executable: the types describe
shape-relevant structure only (kernels, channels, strides, padding, residual
shortcuts), which is all the cost model needs.

Stride convention: a stage's downsampling is expressed via
``BlockSpec.first_block_stride``. It lands on the block's *stride carrier*,
which is the first conv with kernel larger than 1x1 (falling back to the
first conv). Only the first repeat of the stage gets that stride; later
repeats run the carrier at stride 1. The carrier's own declared stride must
therefore be 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

CONV = "conv"
MAXPOOL = "maxpool"
LAYER_KINDS = (CONV, MAXPOOL)

SHORTCUT_NONE = "none"
SHORTCUT_IDENTITY = "identity"
SHORTCUT_PROJECTION = "projection"
SHORTCUTS = (SHORTCUT_NONE, SHORTCUT_IDENTITY, SHORTCUT_PROJECTION)


@dataclass(frozen=True)
class LayerSpec:
    """One layer: a conv (with optional norm/bias) or a max-pool."""

    kind: str
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: int = 0
    out_channels: int | None = None
    has_norm: bool = False
    has_bias: bool = False


def conv(
    kernel: int | tuple[int, int],
    out_channels: int,
    stride: int = 1,
    padding: int | None = None,
    norm: bool = True,
    bias: bool = False,
) -> LayerSpec:
    """Conv layer; padding defaults to kernel_h // 2 (shape-preserving for odd kernels)."""
    kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
    pad = kh // 2 if padding is None else padding
    return LayerSpec(CONV, kh, kw, stride, pad, out_channels, norm, bias)


def maxpool(
    kernel: int | tuple[int, int] = 3,
    stride: int = 2,
    padding: int | None = None,
) -> LayerSpec:
    """Max-pool layer; carries no channels, norm, or bias."""
    kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
    pad = kh // 2 if padding is None else padding
    return LayerSpec(MAXPOOL, kh, kw, stride, pad)


@dataclass(frozen=True)
class BlockSpec:
    """A block template: an ordered run of layers plus a residual shortcut mode.

    ``shortcut`` semantics when the template is instantiated inside a stage:

    - ``none``: plain feed-forward chain, nothing added.
    - ``identity``: residual add with no extra layers; invalid if the block
      changes channel count or strides (no identity exists then).
    - ``projection``: residual add where instances that change channels or
      stride get a costed 1x1 projection conv on the shortcut path; all other
      instances fall back to a free identity.
    """

    layers: tuple[LayerSpec, ...]
    shortcut: str = SHORTCUT_NONE
    first_block_stride: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class StageSpec:
    """A named run of ``repeats`` instances of one block template."""

    block_template: BlockSpec
    repeats: int
    name: str


@dataclass(frozen=True)
class ArchSpec:
    """A whole backbone: stem layers followed by stages."""

    name: str
    stem: tuple[LayerSpec, ...]
    stages: tuple[StageSpec, ...]
    in_channels: int = 3

    def __post_init__(self) -> None:
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "stages", tuple(self.stages))

    def stage_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.stages)


@dataclass(frozen=True)
class Violation:
    """A single validation failure, located by a field path."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ArchValidationError(ValueError):
    """Raised when an operation requires a valid ArchSpec and gets violations."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def stride_carrier_index(block: BlockSpec) -> int | None:
    """Index of the layer that receives ``first_block_stride``.

    The first conv with kernel larger than 1x1; falls back to the first conv.
    ``None`` if the block has no conv at all.
    """
    first_conv = None
    for i, layer in enumerate(block.layers):
        if layer.kind != CONV:
            continue
        if first_conv is None:
            first_conv = i
        if max(layer.kernel_h, layer.kernel_w) > 1:
            return i
    return first_conv


def instantiate_layers(block: BlockSpec, first: bool) -> tuple[LayerSpec, ...]:
    """Concrete layers for one block instance, with the carrier stride resolved."""
    carrier = stride_carrier_index(block)
    if carrier is None:
        return block.layers
    stride = block.first_block_stride if first else 1
    layers = list(block.layers)
    layers[carrier] = replace(layers[carrier], stride=stride)
    return tuple(layers)


def block_out_channels(block: BlockSpec, in_channels: int) -> int:
    """Output channel count of a block instance fed ``in_channels``."""
    out = in_channels
    for layer in block.layers:
        if layer.kind == CONV:
            out = layer.out_channels
    return out


def layers_stride(layers: tuple[LayerSpec, ...]) -> int:
    total = 1
    for layer in layers:
        total *= layer.stride
    return total


@dataclass(frozen=True)
class BlockInstance:
    """One unrolled block of a stage, with effective strides applied."""

    stage_name: str
    index: int
    layers: tuple[LayerSpec, ...]
    shortcut: str

    @property
    def stride(self) -> int:
        return layers_stride(self.layers)


def iter_block_instances(arch: ArchSpec) -> Iterator[BlockInstance]:
    """Unroll every stage into its concrete block instances, in execution order."""
    for stage in arch.stages:
        for i in range(stage.repeats):
            yield BlockInstance(
                stage_name=stage.name,
                index=i,
                layers=instantiate_layers(stage.block_template, first=(i == 0)),
                shortcut=stage.block_template.shortcut,
            )


def main_path_layers(arch: ArchSpec) -> Iterator[tuple[str, LayerSpec]]:
    """(layer_id, layer) pairs along the main path; shortcut convs excluded."""
    for i, layer in enumerate(arch.stem):
        yield f"stem[{i}]", layer
    for block in iter_block_instances(arch):
        for j, layer in enumerate(block.layers):
            yield f"{block.stage_name}/block{block.index}/layers[{j}]", layer


def resolve_shortcut(mode: str, in_channels: int, out_channels: int, stride: int) -> str:
    """Concrete shortcut for one block instance: none, identity, or projection."""
    if mode == SHORTCUT_NONE:
        return SHORTCUT_NONE
    mismatched = in_channels != out_channels or stride != 1
    if not mismatched:
        return SHORTCUT_IDENTITY
    if mode == SHORTCUT_IDENTITY:
        raise ArchValidationError(
            [Violation("shortcut", f"identity shortcut impossible: {in_channels} -> {out_channels} channels at stride {stride}")]
        )
    return SHORTCUT_PROJECTION


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _validate_layer(layer: LayerSpec, path: str, out: list[Violation]) -> None:
    if layer.kind not in LAYER_KINDS:
        out.append(Violation(f"{path}.kind", f"unknown layer kind {layer.kind!r}"))
        return
    if layer.kernel_h < 1 or layer.kernel_w < 1:
        out.append(Violation(f"{path}.kernel", "kernel dims must be >= 1"))
    if layer.stride < 1:
        out.append(Violation(f"{path}.stride", "stride must be >= 1"))
    if layer.padding < 0:
        out.append(Violation(f"{path}.padding", "padding must be >= 0"))
    if layer.kind == CONV:
        if layer.out_channels is None or layer.out_channels < 1:
            out.append(Violation(f"{path}.out_channels", "conv needs out_channels >= 1"))
    else:
        if layer.out_channels is not None:
            out.append(Violation(f"{path}.out_channels", "maxpool carries no out_channels"))
        if layer.has_norm:
            out.append(Violation(f"{path}.has_norm", "maxpool carries no norm"))
        if layer.has_bias:
            out.append(Violation(f"{path}.has_bias", "maxpool carries no bias"))


def validate(arch: ArchSpec) -> list[Violation]:
    """Check every structural invariant; returns violations instead of raising."""
    out: list[Violation] = []
    if arch.in_channels < 1:
        out.append(Violation("in_channels", "must be >= 1"))
    if not arch.stages:
        out.append(Violation("stages", "at least one stage required"))
    for i, layer in enumerate(arch.stem):
        _validate_layer(layer, f"stem[{i}]", out)

    for si, stage in enumerate(arch.stages):
        spath = f"stages[{si}]"
        if stage.repeats < 1:
            out.append(Violation(f"{spath}.repeats", "repeats must be >= 1"))
        block = stage.block_template
        if block.shortcut not in SHORTCUTS:
            out.append(Violation(f"{spath}.block.shortcut", f"unknown shortcut {block.shortcut!r}"))
        if block.first_block_stride < 1:
            out.append(Violation(f"{spath}.block.first_block_stride", "must be >= 1"))
        if not block.layers:
            out.append(Violation(f"{spath}.block.layers", "block needs at least one layer"))
        for li, layer in enumerate(block.layers):
            _validate_layer(layer, f"{spath}.block.layers[{li}]", out)
        carrier = stride_carrier_index(block)
        if carrier is None:
            if block.first_block_stride != 1:
                out.append(
                    Violation(f"{spath}.block.first_block_stride", "stride > 1 needs a conv layer to carry it")
                )
        elif block.layers[carrier].stride != 1:
            out.append(
                Violation(
                    f"{spath}.block.layers[{carrier}].stride",
                    "stride carrier must declare stride 1; use first_block_stride",
                )
            )
    if out:
        return out

    # Channel flow: identity shortcuts must be shape-compatible.
    channels = arch.in_channels
    for layer in arch.stem:
        if layer.kind == CONV:
            channels = layer.out_channels
    for si, stage in enumerate(arch.stages):
        block = stage.block_template
        out_ch = block_out_channels(block, channels)
        stride = layers_stride(instantiate_layers(block, first=True))
        if block.shortcut == SHORTCUT_IDENTITY and (out_ch != channels or stride != 1):
            out.append(
                Violation(
                    f"stages[{si}].block.shortcut",
                    f"identity shortcut impossible: {channels} -> {out_ch} channels at stride {stride}",
                )
            )
        channels = out_ch

    total = 1
    for _, layer in main_path_layers(arch):
        total *= layer.stride
    if not _is_pow2(total):
        out.append(Violation("stages", f"total stride {total} is not a power of two"))
    return out


def require_valid(arch: ArchSpec) -> None:
    """Raise ArchValidationError if ``arch`` has any violations."""
    violations = validate(arch)
    if violations:
        raise ArchValidationError(violations)
