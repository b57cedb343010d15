"""Deterministic JSON/CSV writers and key=value config files.

Floats are always written with 17 significant digits so that the same run
produces byte-identical files. Non-finite floats become the strings
``"inf"``, ``"-inf"`` and ``"nan"`` (JSON has no literal for them).
"""

from __future__ import annotations

import configparser
import enum
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import ConfigError

__all__ = ["SCHEMA_VERSION", "jsonable", "dumps", "write_json", "write_csv", "format_float",
           "load_config", "parse_vector", "parse_interval", "parse_params", "CSV_COLUMNS"]

SCHEMA_VERSION = "lorentz-geodesy/1"

CSV_COLUMNS = {
    "s": "affine parameter",
    "x1..xn": "chart coordinates of the geodesic, in the order of the model's coords",
    "v1..vn": "velocity components dx/ds",
    "g_vv": "g(v, v), constant along a geodesic up to integration drift",
    "K1..Km": "charges g(v, K) of the model's Killing candidates, in declaration order",
}


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def jsonable(obj):
    """Convert numpy values, enums and dataclass-like objects to plain JSON types."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return str(obj)


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(k) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v):
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        s = format_float(v)
        return s if math.isfinite(v) else json.dumps(s)
    return json.dumps(v)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text (sorted keys, 17 significant digits)."""
    out = []
    _emit(jsonable(obj), indent, 0, out)
    return "".join(out) + "\n"


def write_json(path, obj):
    doc = dict(jsonable(obj))
    doc.setdefault("schema", SCHEMA_VERSION)
    Path(path).write_text(dumps(doc))


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in np.atleast_2d(rows):
        lines.append(",".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# -- parsing helpers -----------------------------------------------------------------

def parse_vector(text, what="vector"):
    """``"1,2,3"`` -> float array."""
    if isinstance(text, (list, tuple, np.ndarray)):
        return np.asarray(text, dtype=float)
    try:
        return np.array([float(v) for v in str(text).replace(" ", "").split(",") if v != ""])
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}: expected comma-separated numbers") from None


def parse_interval(text, what="interval"):
    """``"a:b"`` -> ``(a, b)``; ``inf`` and ``-inf`` are accepted."""
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"cannot parse {what} {text!r}: expected A:B")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}: endpoints must be numbers") from None
    if not a < b:
        raise ConfigError(f"{what} {text!r} is empty")
    return a, b


def parse_params(items):
    """``["k=v", ...]`` -> dict of strings."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"model parameter {item!r} must have the form key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path):
    """Read a flat key=value config with sections ``model``, ``task``, ``options``, ``output``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} not found") from None
    except configparser.Error as exc:
        raise ConfigError(f"config file {path!r}: {exc}") from None
    known = {"model", "task", "options", "output"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"config file {path!r}: unknown sections {sorted(unknown)}; "
                          f"expected {sorted(known)}")
    return {s: dict(cp[s]) for s in cp.sections()}
