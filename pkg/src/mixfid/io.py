"""JSON and text formats shared by the library and the command line.

Matrices are stored as ``{"dim": d, "re": [[...]], "im": [[...]]}`` with
row-major real arrays; ``"im"`` may be omitted. Entries may be numbers or
exact fractions written as ``"num/den"`` strings. Floats are written with
``repr`` so a matrix survives a write/read cycle bit for bit.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParseError
from .linalg import DensityMatrix, validate_density


def parse_number(x) -> float:
    """Read a JSON number or a ``"num/den"`` string."""
    if isinstance(x, bool):
        raise ParseError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"cannot read {x!r} as a number") from None
    raise ParseError(f"expected a number, got {type(x).__name__}")


def exact_value(x):
    """Like :func:`parse_number` but keeps ``"num/den"`` strings as :class:`Fraction`."""
    if isinstance(x, str) and "/" in x:
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"cannot read {x!r} as a fraction") from None
    return parse_number(x)


def _grid(rows, name: str, n_rows: int, n_cols: int) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n_rows:
        raise ParseError(f'"{name}" must be a list of {n_rows} rows')
    out = np.empty((n_rows, n_cols))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            raise ParseError(f'"{name}" row {i} must have {n_cols} entries')
        out[i] = [parse_number(v) for v in row]
    return out


def matrix_from_json(obj: Any) -> np.ndarray:
    """Read a matrix object; ``"rows"``/``"cols"`` replace ``"dim"`` for rectangular ones."""
    if not isinstance(obj, dict):
        raise ParseError("matrix must be a JSON object")
    if "re" not in obj:
        raise ParseError('matrix object needs a "re" field')
    re_rows = obj["re"]
    if not isinstance(re_rows, list) or not re_rows or not isinstance(re_rows[0], list):
        raise ParseError('"re" must be a non-empty list of rows')
    if "rows" in obj or "cols" in obj:
        shape = (obj.get("rows"), obj.get("cols"))
    else:
        dim = obj.get("dim", len(re_rows))
        shape = (dim, dim)
    for n in shape:
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ParseError(f"bad matrix shape {shape!r}")
    re = _grid(re_rows, "re", *shape)
    im = _grid(obj["im"], "im", *shape) if obj.get("im") is not None else np.zeros(shape)
    return re + 1j * im


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    if a.shape[0] == a.shape[1]:
        out = {"dim": int(a.shape[0])}
    else:
        out = {"rows": int(a.shape[0]), "cols": int(a.shape[1])}
    out["re"] = a.real.tolist()
    if np.any(a.imag != 0):
        out["im"] = a.imag.tolist()
    return out


def density_from_json(obj: Any, tol: float = 1e-10) -> DensityMatrix:
    return validate_density(matrix_from_json(obj), tol=tol)


def read_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def load_density(path, tol: float = 1e-10) -> DensityMatrix:
    return density_from_json(read_json(path), tol=tol)


def save_matrix(m, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)) + "\n")


def fmt_number(x: float) -> str:
    """15 significant digits; scientific notation below 1e-3 in magnitude."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    if x != 0 and abs(x) < 1e-3:
        return f"{x:.14e}"
    return f"{x:.15g}"


def jsonable(x):
    """Convert numpy scalars/arrays and dataclass-free containers to plain JSON types."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x
