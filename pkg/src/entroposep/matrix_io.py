"""JSON encoding of matrices and artifacts.

Matrix format: ``{"n": int, "re": [[...]], "im": [[...]]}`` in row-major
order, plus ``"dims": [n, n']`` for bipartite operators.  Floats are written
with ``repr`` (shortest round-trip form), so reading back yields the same
doubles bit for bit.
"""

import json

import numpy as np

from .errors import ValidationError


def matrix_to_json(a, dims=None) -> dict:
    a = np.asarray(a, dtype=complex)
    out = {
        "n": int(a.shape[0]),
        "re": [[float(x) for x in row] for row in a.real],
        "im": [[float(x) for x in row] for row in a.imag],
    }
    if dims is not None:
        out["dims"] = [int(dims[0]), int(dims[1])]
    return out


def _field(obj, name):
    if not isinstance(obj, dict) or name not in obj:
        raise ValidationError(f"missing field {name!r}")
    return obj[name]


def matrix_from_json(obj):
    """Return ``(matrix, dims)``; ``dims`` is ``None`` when absent."""
    n = _field(obj, "n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"field 'n' must be a positive integer, got {n!r}")
    parts = []
    for name in ("re", "im"):
        raw = _field(obj, name)
        try:
            part = np.array(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"field {name!r} is not a numeric matrix") from exc
        if part.shape != (n, n):
            raise ValidationError(f"field {name!r} has shape {part.shape}, expected {(n, n)}")
        parts.append(part)
    dims = obj.get("dims")
    if dims is not None:
        if (not isinstance(dims, list) or len(dims) != 2
                or not all(isinstance(d, int) and d >= 1 for d in dims)
                or dims[0] * dims[1] != n):
            raise ValidationError(f"field 'dims' must be [n, n'] with n*n' = {n}, got {dims!r}")
        dims = (dims[0], dims[1])
    return parts[0] + 1j * parts[1], dims


def dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
