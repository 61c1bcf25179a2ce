"""Complex-matrix JSON encoding shared by states, channels and regions.

Matrices are stored row-major as nested lists of ``[re, im]`` pairs, which
round-trips float64 values exactly through :mod:`json`.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA = "qbc/1"


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    pairs = np.stack([a.real, a.imag], axis=-1)
    return pairs.tolist()


def decode_matrix(obj: list) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("expected trailing [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def dump(obj: dict[str, Any], path: str | Path) -> None:
    """Write ``obj`` as JSON with the schema tag first."""
    Path(path).write_text(json.dumps({"schema": SCHEMA, **obj}, indent=1))


def load(path: str | Path) -> dict[str, Any]:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unsupported schema {data.get('schema')!r}")
    return data
