"""Exact-round-trip JSON output and source digests.

Floats are written with 17 significant digits so every double survives the
trip through text unchanged.  The emitter is deliberately tiny: the two
interchange documents are plain trees of objects, arrays, strings, ints,
and floats, and nothing else is accepted.
"""

from __future__ import annotations

import hashlib
import json
import math

__all__ = ["ExportError", "format_float", "dumps_json", "write_json", "sha256_file"]


class ExportError(ValueError):
    """A source cannot be exported faithfully; the message names the reason."""


def format_float(value: float) -> str:
    """17-significant-digit decimal form, enough to reproduce the exact double."""
    if not math.isfinite(value):
        raise ExportError(f"cannot serialize non-finite value {value!r}")
    return format(float(value), ".17g")


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise ExportError(f"JSON object keys must be strings, got {key!r}")
            out.append(f"{inner}{json.dumps(key)}: ")
            _emit(obj[key], indent + 1, out)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(inner)
            _emit(item, indent + 1, out)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise ExportError(f"cannot serialize value of type {type(obj).__name__}")


def dumps_json(obj) -> str:
    parts: list = []
    _emit(obj, 0, parts)
    return "".join(parts) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
