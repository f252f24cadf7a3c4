"""Point-set file formats.

* ``xyz``: one ``x y z`` triple per line; ``#`` starts a comment; blank lines
  are ignored. Written with 17 significant digits, so values round-trip
  exactly.
* ``vtk``: legacy ASCII polydata. Only the ``POINTS`` block is read; cells
  and attributes are skipped.
* ``npy``: NumPy binary, bit-exact.
"""
from __future__ import annotations

import enum
from pathlib import Path

import numpy as np

from ..core import GeoshootError, InvalidPointSet, as_points


class ParseError(GeoshootError, ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)


class UnsupportedFormat(GeoshootError, ValueError):
    pass


class PointFormat(str, enum.Enum):
    XYZ_TEXT = "xyz"
    LEGACY_POLYDATA_ASCII = "vtk"
    NPY = "npy"


_SUFFIX = {".xyz": PointFormat.XYZ_TEXT, ".txt": PointFormat.XYZ_TEXT,
           ".vtk": PointFormat.LEGACY_POLYDATA_ASCII, ".npy": PointFormat.NPY}


def guess_format(path) -> PointFormat:
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIX[suffix]
    except KeyError:
        raise UnsupportedFormat(f"cannot infer point format from suffix {suffix!r}") from None


def _parse_format(fmt, path) -> PointFormat:
    if fmt is None:
        return guess_format(path)
    try:
        return PointFormat(fmt)
    except ValueError:
        raise UnsupportedFormat(f"unknown point format {fmt!r}") from None


def _read_xyz(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.replace(",", " ").split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 values, got {len(parts)}", lineno, path)
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise ParseError(f"non-numeric value in {body!r}", lineno, path) from None
    if not rows:
        raise ParseError("no points", path=path)
    return np.array(rows, dtype=np.float64)


def _read_vtk(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# vtk DataFile Version"):
        raise ParseError("missing '# vtk DataFile Version' header", 1, path)
    if len(lines) < 3 or lines[2].strip().upper() != "ASCII":
        raise UnsupportedFormat(f"{path}: only ASCII legacy files are supported")
    i = 3
    dataset = None
    while i < len(lines):
        tok = lines[i].split()
        i += 1
        if not tok:
            continue
        key = tok[0].upper()
        if key == "DATASET":
            dataset = tok[1].upper() if len(tok) > 1 else ""
            if dataset != "POLYDATA":
                raise UnsupportedFormat(f"{path}: dataset {dataset!r} is not POLYDATA")
        elif key == "POINTS":
            if dataset is None:
                raise ParseError("POINTS before DATASET", i, path)
            if len(tok) < 3 or tok[2].lower() not in ("float", "double"):
                raise ParseError("expected 'POINTS n float|double'", i, path)
            try:
                n = int(tok[1])
            except ValueError:
                raise ParseError(f"bad point count {tok[1]!r}", i, path) from None
            if n <= 0:
                raise ParseError("no points", i, path)
            values = []
            start = i
            while len(values) < 3 * n and i < len(lines):
                try:
                    values.extend(float(v) for v in lines[i].split())
                except ValueError:
                    raise ParseError("non-numeric coordinate", i + 1, path) from None
                i += 1
            if len(values) < 3 * n:
                raise ParseError(f"expected {3 * n} coordinates, found {len(values)}",
                                 start, path)
            return np.array(values[: 3 * n], dtype=np.float64).reshape(n, 3)
    raise ParseError("no points", path=path)


def read_points(path, fmt: PointFormat | str | None = None) -> np.ndarray:
    fmt = _parse_format(fmt, path)
    if fmt is PointFormat.XYZ_TEXT:
        pts = _read_xyz(path)
    elif fmt is PointFormat.LEGACY_POLYDATA_ASCII:
        pts = _read_vtk(path)
    else:
        pts = np.load(path)
    try:
        return as_points(pts)
    except InvalidPointSet as exc:
        raise ParseError(str(exc), path=path) from None


def write_points(points, path, fmt: PointFormat | str | None = None,
                 header: str | None = None) -> None:
    """Write ``points``; ``header`` becomes ``#`` comment lines in xyz files."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise InvalidPointSet(f"cannot write point set of shape {pts.shape}")
    pts = as_points(pts)
    fmt = _parse_format(fmt, path)
    if fmt is PointFormat.NPY:
        with open(path, "wb") as fh:
            np.save(fh, pts)
        return
    with open(path, "w") as fh:
        if fmt is PointFormat.XYZ_TEXT:
            if header:
                for line in header.splitlines():
                    fh.write(f"# {line}\n")
            for x, y, z in pts:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        else:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write((header or "geoshoot points").splitlines()[0][:255] + "\n")
            fh.write("ASCII\nDATASET POLYDATA\n")
            fh.write(f"POINTS {pts.shape[0]} double\n")
            for x, y, z in pts:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def read_header(path) -> dict[str, str]:
    """``key=value`` pairs from the leading comment lines of an xyz file."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    out[k] = v
    return out
