"""JSON persistence for instances and solutions.

Schema: matrices are row-major nested arrays of numbers; complex scalars are
two-element [re, im] arrays; top-level instance keys are
{"kind", "n", "n2"?, "A0", "b0", "c0", "A1", "b1", "c1", "A2"?, "b2"?, "seed"?}.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .transform import Kind, QcqpInstance


def encode_array(arr: np.ndarray):
    """Nested lists; complex entries become [re, im] pairs."""
    if np.iscomplexobj(arr):
        stacked = np.stack([arr.real, arr.imag], axis=-1)
        return stacked.tolist()
    return np.asarray(arr, dtype=float).tolist()


def decode_real(data, name: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name} is not a real array") from exc
    return arr


def decode_complex(data, name: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name} is not a complex array") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ParseError(f"field {name} must use [re, im] leaves")
    return arr[..., 0] + 1j * arr[..., 1]


def instance_to_dict(instance: QcqpInstance, seed: int | None = None) -> dict:
    complex_kind = instance.kind is Kind.MATRIX_COMPLEX
    data = {
        "kind": instance.kind.value,
        "n": instance.n,
        "A0": encode_array(instance.A0.entries),
        "b0": encode_array(instance.b0),
        "c0": instance.c0,
        "A1": encode_array(instance.A1.entries),
        "b1": encode_array(instance.b1),
        "c1": instance.c1,
    }
    if complex_kind:
        data["n2"] = instance.n2
    if instance.A2 is not None:
        data["A2"] = encode_array(instance.A2)
        data["b2"] = encode_array(instance.b2)
    if seed is not None:
        data["seed"] = int(seed)
    return data


def instance_from_dict(data: dict) -> QcqpInstance:
    try:
        kind = Kind(data["kind"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"unknown or missing kind: {data.get('kind')!r}") from exc
    try:
        c0 = float(data["c0"])
        c1 = float(data["c1"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("c0 and c1 must be real scalars") from exc
    if kind is Kind.MATRIX_COMPLEX:
        A0 = decode_complex(data.get("A0"), "A0")
        A1 = decode_complex(data.get("A1"), "A1")
        b0 = decode_complex(data.get("b0"), "b0")
        b1 = decode_complex(data.get("b1"), "b1")
    else:
        A0 = decode_real(data.get("A0"), "A0")
        A1 = decode_real(data.get("A1"), "A1")
        b0 = decode_real(data.get("b0"), "b0")
        b1 = decode_real(data.get("b1"), "b1")
    kwargs = {}
    if kind is Kind.AUGMENTED:
        if "A2" not in data or "b2" not in data:
            raise ParseError("augmented instances require A2 and b2")
        kwargs["A2"] = decode_real(data["A2"], "A2")
        kwargs["b2"] = decode_real(data["b2"], "b2")
    try:
        return QcqpInstance(kind=kind, A0=A0, b0=b0, c0=c0, A1=A1, b1=b1, c1=c1, **kwargs)
    except Exception as exc:
        raise ParseError(f"inconsistent instance data: {exc}") from exc


def dumps(data) -> str:
    """Deterministic JSON text (sorted keys, no NaN/Inf literals)."""
    return json.dumps(_sanitize(data), sort_keys=True, separators=(",", ": "), indent=1)


def _sanitize(value):
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def save_instance(instance: QcqpInstance, path, seed: int | None = None) -> None:
    Path(path).write_text(dumps(instance_to_dict(instance, seed)) + "\n")


def load_instance(path) -> tuple:
    """Read an instance file; returns (instance, seed-or-None)."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read instance file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("instance file must hold a JSON object")
    seed = data.get("seed")
    return instance_from_dict(data), seed


def load_raw(path) -> dict:
    """Raw JSON object from a file (for code paths that must do their own
    arithmetic on the stored numbers)."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("expected a JSON object")
    return data
