#!/usr/bin/env python3
"""Rewrite configs/*.yaml from the built-in architecture definitions."""

from pathlib import Path

from bhkit.builtins import BUILTIN_NAMES, builtin
from bhkit.config import serialize_arch

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    config_dir = ROOT / "configs"
    config_dir.mkdir(exist_ok=True)
    for name in BUILTIN_NAMES:
        path = config_dir / f"{name}.yaml"
        path.write_text(serialize_arch(builtin(name)))
        print(f"wrote {path.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
