"""The six shipped backbone descriptions.

ResNet50 uses bottleneck blocks (1x1 reduce, 3x3, 1x1 expand); the HRNet
entries model the deepest branch only, as a chain of two-conv basic blocks.
Each standard backbone has a bottom-heavy (bh-) counterpart with a
lower-stride stem and repeats shifted toward the high-resolution stages.
"""

from __future__ import annotations

from dataclasses import replace

from .arch import ArchSpec, BlockSpec, StageSpec, conv, maxpool


def _bottleneck(width: int, out_channels: int) -> BlockSpec:
    return BlockSpec(
        layers=(
            conv(1, width),
            conv(3, width),
            conv(1, out_channels),
        ),
        shortcut="projection",
    )


def _basic(width: int) -> BlockSpec:
    return BlockSpec(
        layers=(conv(3, width), conv(3, width)),
        shortcut="projection",
    )


def _stage(name: str, block: BlockSpec, repeats: int, stride: int) -> StageSpec:
    return StageSpec(
        block_template=replace(block, first_block_stride=stride),
        repeats=repeats,
        name=name,
    )


def _resnet50() -> ArchSpec:
    return ArchSpec(
        name="resnet50",
        stem=(conv(7, 64, stride=2), maxpool(3, stride=2)),
        stages=(
            _stage("stage1", _bottleneck(64, 256), repeats=3, stride=1),
            _stage("stage2", _bottleneck(128, 512), repeats=4, stride=2),
            _stage("stage3", _bottleneck(256, 1024), repeats=6, stride=2),
            _stage("stage4", _bottleneck(512, 2048), repeats=3, stride=2),
        ),
    )


def _bh_resnet50() -> ArchSpec:
    return ArchSpec(
        name="bh-resnet50",
        stem=(conv(3, 64, stride=1), maxpool(3, stride=2)),
        stages=(
            _stage("stage1", _bottleneck(64, 256), repeats=7, stride=2),
            _stage("stage2", _bottleneck(128, 512), repeats=6, stride=2),
            _stage("stage3", _bottleneck(256, 1024), repeats=2, stride=2),
            _stage("stage4", _bottleneck(512, 2048), repeats=1, stride=2),
        ),
    )


def _hrnet_deep(name: str, widths: tuple[int, int, int, int], repeats: tuple[int, int, int, int]) -> ArchSpec:
    return ArchSpec(
        name=name,
        stem=(conv(3, 64, stride=2), conv(3, 64, stride=2)),
        stages=tuple(
            _stage(f"stage{i + 1}", _basic(widths[i]), repeats=repeats[i], stride=1 if i == 0 else 2)
            for i in range(4)
        ),
    )


def _bh_hrnet_deep(name: str, widths: tuple[int, int, int, int], repeats: tuple[int, int, int, int]) -> ArchSpec:
    return ArchSpec(
        name=name,
        stem=(conv(3, 64, stride=1), conv(3, 64, stride=2), maxpool(3, stride=2)),
        stages=tuple(
            _stage(f"stage{i + 1}", _basic(widths[i]), repeats=repeats[i], stride=1 if i == 0 else 2)
            for i in range(4)
        ),
    )


_BUILDERS = {
    "resnet50": _resnet50,
    "bh-resnet50": _bh_resnet50,
    "hrnet32-deep": lambda: _hrnet_deep("hrnet32-deep", (64, 64, 128, 256), (4, 4, 16, 12)),
    "bh-hrnet32-deep": lambda: _bh_hrnet_deep("bh-hrnet32-deep", (64, 64, 128, 256), (4, 4, 8, 3)),
    "hrnet18-deep": lambda: _hrnet_deep("hrnet18-deep", (36, 64, 72, 144), (4, 4, 16, 12)),
    "bh-hrnet18-deep": lambda: _bh_hrnet_deep("bh-hrnet18-deep", (36, 36, 72, 144), (4, 4, 12, 6)),
}

BUILTIN_NAMES: tuple[str, ...] = tuple(_BUILDERS)


def builtin(name: str) -> ArchSpec:
    """Return one of the shipped architectures by name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        known = ", ".join(BUILTIN_NAMES)
        raise KeyError(f"unknown builtin architecture {name!r}; known: {known}") from None
    return builder()
