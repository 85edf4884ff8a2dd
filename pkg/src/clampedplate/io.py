"""Domain spec files, field CSVs and table writers.

Domain specs are JSON objects ``{"shape", "params", "resolution"}``; mask
domains add ``"mask"`` (rows of ``1``/``0`` characters, top row first) and
``"h"``. Fields are CSV with columns ``index, x, y, value``. Every number
written to CSV uses six significant digits.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .fdsolver import PAD, GridDomain, ScalarField, make_domain

__all__ = [
    "SHAPES",
    "fmt",
    "load_domain_spec",
    "validate_domain_spec",
    "domain_from_spec",
    "write_field_csv",
    "read_field_csv",
    "write_csv",
    "write_columns",
]

SHAPES = {"disk": 1, "square": 1, "annulus": 2, "mask": None}


def fmt(x) -> str:
    """Six significant digits; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def validate_domain_spec(spec) -> dict:
    """Check the keys and parameter counts of a domain spec.

    Raises
    ------
    ValueError
        With a message naming the offending field.
    """
    if not isinstance(spec, dict):
        raise ValueError("domain spec must be a JSON object")
    shape = spec.get("shape")
    if shape not in SHAPES:
        raise ValueError(f"domain spec: unknown shape {shape!r}; expected one of {sorted(SHAPES)}")
    params = spec.get("params", [])
    if not isinstance(params, list) or not all(isinstance(p, (int, float)) for p in params):
        raise ValueError("domain spec: params must be a list of numbers")
    need = SHAPES[shape]
    if need is not None and len(params) != need:
        raise ValueError(f"domain spec: {shape} takes {need} parameter(s), got {len(params)}")
    if any(p <= 0 for p in params):
        raise ValueError("domain spec: params must be positive")
    if shape == "mask":
        rows = spec.get("mask")
        if not isinstance(rows, list) or not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("domain spec: mask must be a nonempty list of equal-length strings")
    else:
        res = spec.get("resolution")
        if not isinstance(res, int) or isinstance(res, bool) or res < 4:
            raise ValueError("domain spec: resolution must be an integer >= 4")
    return spec


def load_domain_spec(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"domain spec {path}: invalid JSON ({exc.msg})") from exc
    return validate_domain_spec(spec)


def domain_from_spec(spec: dict, resolution: int | None = None) -> GridDomain:
    spec = dict(validate_domain_spec(spec))
    if resolution is not None:
        spec["resolution"] = int(resolution)
    return make_domain(spec)


def write_field_csv(dest, field: ScalarField) -> None:
    """Write ``index, x, y, value`` rows for every interior node."""
    c = field.domain.coords
    rows = ((i, c[i, 0], c[i, 1], field.values[i]) for i in range(len(field.values)))
    write_csv(dest, ("index", "x", "y", "value"), rows)


def _infer_domain(x: np.ndarray, y: np.ndarray) -> tuple[GridDomain, np.ndarray]:
    ux = np.unique(np.round(x, 12))
    uy = np.unique(np.round(y, 12))
    steps = np.concatenate((np.diff(ux), np.diff(uy)))
    steps = steps[steps > 0]
    if steps.size == 0:
        raise ValueError("cannot infer the grid spacing from a single node")
    h = float(steps.min())
    ix = np.rint((x - x.min()) / h).astype(np.int64)
    iy = np.rint((y - y.min()) / h).astype(np.int64)
    if np.abs(ix * h + x.min() - x).max() > 1e-3 * h or np.abs(iy * h + y.min() - y).max() > 1e-3 * h:
        raise ValueError("field nodes do not lie on a uniform grid")
    mask = np.zeros((iy.max() + 1 + 2 * PAD, ix.max() + 1 + 2 * PAD), dtype=bool)
    mask[iy + PAD, ix + PAD] = True
    dom = GridDomain.from_mask(mask, h, origin=(x.min() - PAD * h, y.min() - PAD * h), label="field")
    order = dom.index[iy + PAD, ix + PAD]
    return dom, order


def read_field_csv(src, domain: GridDomain | None = None) -> ScalarField:
    """Read a field CSV. Without ``domain`` the grid is rebuilt from the
    node coordinates (nodes not listed are exterior)."""
    with open(src, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y", "value"} <= set(reader.fieldnames):
            raise ValueError(f"{src}: field CSV needs columns x, y, value")
        rows = [(float(r["x"]), float(r["y"]), float(r["value"])) for r in reader]
    if not rows:
        raise ValueError(f"{src}: no rows")
    data = np.array(rows)
    x, y, v = data.T
    if domain is None:
        domain, order = _infer_domain(x, y)
    else:
        ix = np.rint((x - domain.origin[0]) / domain.h).astype(np.int64)
        iy = np.rint((y - domain.origin[1]) / domain.h).astype(np.int64)
        inside = (ix >= 0) & (ix < domain.shape[1]) & (iy >= 0) & (iy < domain.shape[0])
        if not inside.all():
            raise ValueError(f"{src}: nodes outside the domain grid")
        order = domain.index[iy, ix]
        if (order < 0).any() or len(np.unique(order)) != domain.n_interior:
            raise ValueError(f"{src}: nodes do not match the domain's interior")
    values = np.empty(domain.n_interior)
    values[order] = v
    return ScalarField(domain, values)


def _open(dest) -> tuple[TextIO, bool]:
    if dest is None or dest == "-":
        import sys

        return sys.stdout, False
    if isinstance(dest, io.TextIOBase):
        return dest, False
    return open(Path(dest), "w", encoding="utf-8", newline=""), True


def write_csv(dest, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with a header row; ``dest`` is a path, a text stream or ``-``."""
    fh, close = _open(dest)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    finally:
        if close:
            fh.close()


def write_columns(dest, rows: Iterable[Sequence], comment: str | None = None) -> None:
    """Whitespace-separated columns, optionally under a ``#`` comment line."""
    fh, close = _open(dest)
    try:
        if comment:
            fh.write(f"# {comment}\n")
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row) + "\n")
    finally:
        if close:
            fh.close()
