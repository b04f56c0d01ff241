"""Text config format for architectures (YAML).

Schema, all keys lower-case, unknown keys rejected::

    name: resnet50            # required
    in_channels: 3            # optional, default 3
    stem:                     # optional list of layer records
    - kind: conv
      kernel_h: 7
      kernel_w: 7
      out_channels: 64        # conv only
      stride: 2               # default 1
      padding: 3              # default kernel_h // 2
      has_norm: true          # conv only, default true
      has_bias: false         # conv only, default false
    - kind: maxpool           # maxpool records take kind/kernel/stride/padding only
      kernel_h: 3
      kernel_w: 3
      stride: 2
      padding: 1
    stages:                   # required, at least one
    - name: stage1            # default stage<N>
      repeats: 3
      first_block_stride: 1   # default 1
      block:
        shortcut: projection  # none | identity | projection, default none
        layers: [...]         # layer records as above

``serialize_arch`` always emits every applicable key in a fixed order, so
serializing is canonical: parse(serialize(a)) == a and re-serializing the
output reproduces it byte for byte.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Any

import yaml

from .arch import (
    CONV,
    MAXPOOL,
    SHORTCUT_NONE,
    SHORTCUTS,
    ArchSpec,
    BlockSpec,
    LayerSpec,
    StageSpec,
    validate,
)


class ConfigError(ValueError):
    """Malformed config text: syntax errors (with position) or schema/semantic errors (with field path)."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _expect_mapping(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _expect_list(node: Any, path: str) -> list:
    if not isinstance(node, list):
        _fail(path, f"expected a list, got {type(node).__name__}")
    return node


def _take(node: dict, key: str, path: str, *, required: bool = False, default: Any = None) -> Any:
    if key in node:
        return node.pop(key)
    if required:
        _fail(path, f"missing required key {key!r}")
    return default


def _reject_unknown(node: dict, path: str) -> None:
    if node:
        _fail(path, f"unknown key(s): {', '.join(sorted(map(str, node)))}")


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _as_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected a boolean, got {value!r}")
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {value!r}")
    return value


def _parse_layer(node: Any, path: str) -> LayerSpec:
    record = dict(_expect_mapping(node, path))
    kind = _as_str(_take(record, "kind", path, required=True), f"{path}.kind")
    if kind not in (CONV, MAXPOOL):
        _fail(f"{path}.kind", f"unknown layer kind {kind!r}")
    kernel_h = _as_int(_take(record, "kernel_h", path, required=True), f"{path}.kernel_h")
    kernel_w = _as_int(_take(record, "kernel_w", path, required=True), f"{path}.kernel_w")
    stride = _as_int(_take(record, "stride", path, default=1), f"{path}.stride")
    padding = _take(record, "padding", path, default=None)
    padding = kernel_h // 2 if padding is None else _as_int(padding, f"{path}.padding")

    if kind == CONV:
        out_channels = _as_int(_take(record, "out_channels", path, required=True), f"{path}.out_channels")
        has_norm = _as_bool(_take(record, "has_norm", path, default=True), f"{path}.has_norm")
        has_bias = _as_bool(_take(record, "has_bias", path, default=False), f"{path}.has_bias")
        _reject_unknown(record, path)
        return LayerSpec(CONV, kernel_h, kernel_w, stride, padding, out_channels, has_norm, has_bias)

    _reject_unknown(record, path)
    return LayerSpec(MAXPOOL, kernel_h, kernel_w, stride, padding)


def _parse_block(node: Any, path: str) -> BlockSpec:
    record = dict(_expect_mapping(node, path))
    shortcut = _as_str(_take(record, "shortcut", path, default=SHORTCUT_NONE), f"{path}.shortcut")
    if shortcut not in SHORTCUTS:
        _fail(f"{path}.shortcut", f"must be one of {', '.join(SHORTCUTS)}")
    layers_node = _expect_list(_take(record, "layers", path, required=True), f"{path}.layers")
    _reject_unknown(record, path)
    layers = tuple(_parse_layer(n, f"{path}.layers[{i}]") for i, n in enumerate(layers_node))
    return BlockSpec(layers=layers, shortcut=shortcut)


def _parse_stage(node: Any, path: str, index: int) -> StageSpec:
    record = dict(_expect_mapping(node, path))
    name = _as_str(_take(record, "name", path, default=f"stage{index + 1}"), f"{path}.name")
    repeats = _as_int(_take(record, "repeats", path, required=True), f"{path}.repeats")
    fbs = _as_int(_take(record, "first_block_stride", path, default=1), f"{path}.first_block_stride")
    block_node = _take(record, "block", path, required=True)
    _reject_unknown(record, path)
    block = _parse_block(block_node, f"{path}.block")
    return StageSpec(block_template=replace(block, first_block_stride=fbs), repeats=repeats, name=name)


def parse_arch(text: str) -> ArchSpec:
    """Parse a config document into a validated ArchSpec.

    Raises ConfigError on YAML syntax errors (position reported) and on any
    schema or semantic violation (field path reported).
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(f"syntax error at line {mark.line + 1}, column {mark.column + 1}: {exc}") from exc
        raise ConfigError(f"syntax error: {exc}") from exc

    record = dict(_expect_mapping(doc, "<document>"))
    name = _as_str(_take(record, "name", "<document>", required=True), "name")
    in_channels = _as_int(_take(record, "in_channels", "<document>", default=3), "in_channels")
    stem_node = _expect_list(_take(record, "stem", "<document>", default=[]), "stem")
    stages_node = _expect_list(_take(record, "stages", "<document>", required=True), "stages")
    _reject_unknown(record, "<document>")

    arch = ArchSpec(
        name=name,
        stem=tuple(_parse_layer(n, f"stem[{i}]") for i, n in enumerate(stem_node)),
        stages=tuple(_parse_stage(n, f"stages[{i}]", i) for i, n in enumerate(stages_node)),
        in_channels=in_channels,
    )
    violations = validate(arch)
    if violations:
        raise ConfigError("; ".join(str(v) for v in violations))
    return arch


def _layer_record(layer: LayerSpec) -> dict:
    record: dict[str, Any] = {
        "kind": layer.kind,
        "kernel_h": layer.kernel_h,
        "kernel_w": layer.kernel_w,
    }
    if layer.kind == CONV:
        record["out_channels"] = layer.out_channels
    record["stride"] = layer.stride
    record["padding"] = layer.padding
    if layer.kind == CONV:
        record["has_norm"] = layer.has_norm
        record["has_bias"] = layer.has_bias
    return record


def serialize_arch(arch: ArchSpec) -> str:
    """Render an ArchSpec in the config format, with canonical key order."""
    doc = {
        "name": arch.name,
        "in_channels": arch.in_channels,
        "stem": [_layer_record(layer) for layer in arch.stem],
        "stages": [
            {
                "name": stage.name,
                "repeats": stage.repeats,
                "first_block_stride": stage.block_template.first_block_stride,
                "block": {
                    "shortcut": stage.block_template.shortcut,
                    "layers": [_layer_record(layer) for layer in stage.block_template.layers],
                },
            }
            for stage in arch.stages
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
