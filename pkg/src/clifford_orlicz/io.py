"""CSV field files and JSON reports.

Volume field file::

    n,shape_1,...,shape_n,h,origin_1,...,origin_n
    i_1,...,i_n,c_0,...,c_{2^n-1}          (one line per interior cell)

Boundary field file::

    n,n_facets
    x_1,...,x_n,nu_1,...,nu_n,c_0,...,c_{2^n-1}   (one line per facet)

Coefficients are in ascending blade-bitmask order. ``origin`` is the lower
corner of grid cell ``(0, ..., 0)``.
"""
import json
import math

import numpy as np

from .grid import BoundaryField, MultivectorField


class FieldFormatError(ValueError):
    """Malformed field file."""


class DomainMismatchError(FieldFormatError):
    """Field file does not belong to the configured domain or mesh."""


def _fmt(x):
    return repr(float(x))


def write_field_csv(path, f):
    dom = f.domain
    head = [str(dom.dim), *map(str, dom.shape), _fmt(dom.h), *map(_fmt, dom.origin)]
    lines = [",".join(head)]
    for cell, row in zip(dom.cells, f.values):
        lines.append(",".join([*map(str, cell), *map(_fmt, row)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _rows(path):
    with open(path) as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield no, line.split(",")


def _floats(parts, no):
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FieldFormatError(f"line {no}: {exc}") from None


def read_field_csv(path, domain):
    rows = _rows(path)
    try:
        no, head = next(rows)
    except StopIteration:
        raise FieldFormatError("line 1: empty file") from None
    vals = _floats(head, no)
    n = int(vals[0]) if vals else -1
    if n != domain.dim or len(vals) != 2 + 2 * n:
        raise DomainMismatchError(f"line {no}: header does not describe a {domain.dim}-d grid")
    shape = tuple(int(v) for v in vals[1 : 1 + n])
    h = vals[1 + n]
    origin = np.array(vals[2 + n :])
    if (
        shape != tuple(domain.shape)
        or not math.isclose(h, domain.h, rel_tol=1e-12)
        or not np.allclose(origin, domain.origin, rtol=0, atol=1e-9 * domain.h)
    ):
        raise DomainMismatchError(
            f"line {no}: grid {shape}, h={h}, origin={origin.tolist()} does not match the "
            f"configured grid {tuple(domain.shape)}, h={domain.h}, origin={domain.origin.tolist()}"
        )
    size = 1 << n
    out = np.full((domain.n_cells, size), np.nan)
    for no, parts in rows:
        if len(parts) != n + size:
            raise FieldFormatError(f"line {no}: expected {n + size} columns, got {len(parts)}")
        try:
            cell = tuple(int(p) for p in parts[:n])
        except ValueError as exc:
            raise FieldFormatError(f"line {no}: {exc}") from None
        if any(c < 0 or c >= s for c, s in zip(cell, shape)) or domain.lookup[cell] < 0:
            raise DomainMismatchError(f"line {no}: cell {cell} is not an interior cell")
        out[domain.lookup[cell]] = _floats(parts[n:], no)
    missing = np.isnan(out).any(axis=1)
    if missing.any():
        raise DomainMismatchError(f"{int(missing.sum())} interior cells have no values")
    if not np.all(np.isfinite(out)):
        raise FieldFormatError("field values must be finite")
    return MultivectorField(domain, out)


def write_boundary_csv(path, g):
    mesh = g.mesh
    lines = [f"{mesh.dim},{mesh.n_facets}"]
    for c, nu, row in zip(mesh.centers, mesh.normals, g.values):
        lines.append(",".join([*map(_fmt, c), *map(_fmt, nu), *map(_fmt, row)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_boundary_csv(path, mesh):
    rows = _rows(path)
    try:
        no, head = next(rows)
    except StopIteration:
        raise FieldFormatError("line 1: empty file") from None
    vals = _floats(head, no)
    if len(vals) != 2 or int(vals[0]) != mesh.dim or int(vals[1]) != mesh.n_facets:
        raise DomainMismatchError(
            f"line {no}: header does not describe {mesh.n_facets} facets in {mesh.dim}-d"
        )
    n, size = mesh.dim, 1 << mesh.dim
    data = []
    for no, parts in rows:
        if len(parts) != 2 * n + size:
            raise FieldFormatError(f"line {no}: expected {2 * n + size} columns, got {len(parts)}")
        row = _floats(parts, no)
        i = len(data)
        if i >= mesh.n_facets or not np.allclose(row[:n], mesh.centers[i], rtol=0, atol=1e-9):
            raise DomainMismatchError(f"line {no}: facet center does not match the mesh")
        data.append(row[2 * n :])
    if len(data) != mesh.n_facets:
        raise DomainMismatchError(f"expected {mesh.n_facets} facets, got {len(data)}")
    return BoundaryField(mesh, np.array(data))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report):
    """Deterministic JSON text (sorted keys, non-finite floats as strings)."""
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_report(path, report):
    text = dumps_report(report)
    with open(path, "w") as fh:
        fh.write(text)
    return text
