"""Canonical JSON helpers so every file format round-trips byte-identically."""

from __future__ import annotations

import json


def canonical_dumps(obj) -> str:
    """Serialize with sorted keys and fixed separators, no trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_canonical(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(obj))
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
