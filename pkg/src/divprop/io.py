"""JSON formats and canonical serialization.

Matrix:          ``{"rows": n, "cols": m, "data": [[re, im], ...]}`` (row-major)
Transfer matrix: ``{"dim": d, "t": [[...], ...]}``; rectangular maps use
                 ``{"dim_in": d1, "dim_out": d2, "t": ...}``.

Canonical output sorts keys and prints floats with 17 significant digits so
repeated runs are byte-identical.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DivpropError, InvalidDimensionError


class ParseError(DivpropError):
    pass


def matrix_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in M.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        vals = np.array([complex(re, im) for re, im in data])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix JSON: {exc}") from exc
    if vals.size != rows * cols:
        raise ParseError(f"expected {rows * cols} entries, found {vals.size}")
    return vals.reshape(rows, cols)


def transfer_to_json(T: np.ndarray) -> dict:
    T = np.asarray(T, dtype=float)
    d_out, d_in = math.isqrt(T.shape[0]), math.isqrt(T.shape[1])
    out: dict[str, Any] = {"t": T.tolist()}
    if d_in == d_out:
        out["dim"] = d_in
    else:
        out["dim_in"], out["dim_out"] = d_in, d_out
    return out


def transfer_from_json(obj: dict) -> np.ndarray:
    try:
        T = np.array(obj["t"], dtype=float)
        if "dim" in obj:
            d_in = d_out = int(obj["dim"])
        else:
            d_in, d_out = int(obj["dim_in"]), int(obj["dim_out"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed transfer-matrix JSON: {exc}") from exc
    if T.shape != (d_out * d_out, d_in * d_in):
        raise InvalidDimensionError(
            f"transfer matrix shape {T.shape} does not match dims ({d_in}, {d_out})"
        )
    return T


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def load_transfer(path: str | Path) -> np.ndarray:
    return transfer_from_json(load_json(path))


def save_transfer(path: str | Path, T: np.ndarray) -> None:
    Path(path).write_text(dumps_canonical(transfer_to_json(T)) + "\n")


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    out = format(x, ".17g")
    return out if any(c in out for c in ".en") else out + ".0"


def to_plain(obj: Any) -> Any:
    """Convert numpy values and dataclass-like reports to JSON-ready objects."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return matrix_to_json(obj if obj.ndim == 2 else obj.reshape(1, -1))
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_canonical(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    return _dump(to_plain(obj), indent, 0)


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)
