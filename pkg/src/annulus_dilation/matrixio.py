"""JSON encoding of complex matrices and report helpers.

Matrix format::

    {"rows": n, "cols": m, "re": [[...], ...], "im": [[...], ...]}

``im`` may be omitted for real matrices.
"""
import hashlib
import json
import math
from pathlib import Path

import numpy as np


class MatrixFormatError(ValueError):
    pass


def _grid(name, data, rows, cols):
    if not isinstance(data, list) or len(data) != rows:
        raise MatrixFormatError(f"field '{name}': expected {rows} rows")
    out = np.empty((rows, cols))
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise MatrixFormatError(f"field '{name}': row {i} is ragged (expected {cols} entries)")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise MatrixFormatError(f"field '{name}'[{i}][{j}]: not a number: {x!r}")
            if not math.isfinite(x):
                raise MatrixFormatError(f"field '{name}'[{i}][{j}]: non-finite value")
            out[i, j] = x
    return out


def matrix_from_obj(obj):
    if not isinstance(obj, dict):
        raise MatrixFormatError("matrix JSON must be an object")
    for key in ("rows", "cols", "re"):
        if key not in obj:
            raise MatrixFormatError(f"missing field '{key}'")
    rows, cols = obj["rows"], obj["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise MatrixFormatError("'rows' and 'cols' must be positive integers")
    re = _grid("re", obj["re"], rows, cols)
    im = _grid("im", obj["im"], rows, cols) if "im" in obj else np.zeros_like(re)
    return re + 1j * im


def matrix_to_obj(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise MatrixFormatError("only 2-D arrays can be encoded")
    return {"rows": a.shape[0], "cols": a.shape[1], "re": a.real.tolist(), "im": a.imag.tolist()}


def loads_matrix(text):
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return matrix_from_obj(obj)


def _reject_constant(name):
    raise MatrixFormatError(f"non-finite constant {name} not allowed")


def load_matrix(path):
    return loads_matrix(Path(path).read_text(encoding="utf-8"))


def save_matrix(path, a):
    Path(path).write_text(json.dumps(matrix_to_obj(a)), encoding="utf-8")


def load_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj) and obj.ndim == 2:
            return matrix_to_obj(obj)
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps_report(report):
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2)


def config_hash(config):
    blob = json.dumps(to_jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
