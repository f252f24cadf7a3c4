import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from geoshoot.core import InvalidPointSet
from geoshoot.pipeline.io import (ParseError, PointFormat, UnsupportedFormat, read_header,
                                  read_points, write_points)


def test_read_two_points(tmp_path):
    f = tmp_path / "a.xyz"
    f.write_text("0 0 0\n1 0 0\n")
    np.testing.assert_array_equal(read_points(f), [[0, 0, 0], [1, 0, 0]])


def test_comments_and_blank_lines(tmp_path):
    f = tmp_path / "a.xyz"
    f.write_text("# header\n\n1 2 3  # trailing\n\n4,5,6\n")
    np.testing.assert_array_equal(read_points(f), [[1, 2, 3], [4, 5, 6]])


def test_empty_file(tmp_path):
    f = tmp_path / "empty.xyz"
    f.write_text("")
    with pytest.raises(ParseError, match="no points"):
        read_points(f)


@pytest.mark.parametrize("body,line", [("0 0 0\n1 2\n", 2), ("0 0 0\n\nx 1 2\n", 3)])
def test_parse_error_line(tmp_path, body, line):
    f = tmp_path / "bad.xyz"
    f.write_text(body)
    with pytest.raises(ParseError) as exc:
        read_points(f)
    assert exc.value.line == line


def test_nonfinite_rejected(tmp_path):
    f = tmp_path / "nan.xyz"
    f.write_text("0 0 nan\n")
    with pytest.raises(ParseError):
        read_points(f)


@pytest.mark.parametrize("fmt", ["xyz", "vtk", "npy"])
def test_round_trip(tmp_path, rng, fmt):
    pts = rng.normal(scale=100, size=(100, 3))
    path = tmp_path / f"pts.{fmt}"
    write_points(pts, path)
    back = read_points(path)
    # 17 significant digits round-trip doubles exactly
    np.testing.assert_array_equal(back, pts)


def test_single_point_round_trip(tmp_path):
    pts = np.array([[np.pi, -np.e, 1e-300]])
    write_points(pts, tmp_path / "one.xyz")
    np.testing.assert_array_equal(read_points(tmp_path / "one.xyz"), pts)


def test_write_empty_raises(tmp_path):
    with pytest.raises(InvalidPointSet):
        write_points(np.zeros((0, 3)), tmp_path / "x.xyz")


def test_header(tmp_path):
    path = tmp_path / "p0.xyz"
    write_points(np.ones((2, 3)), path, header="sigma=2.0 lambda=1.0 timesteps=40\nnote")
    assert read_header(path) == {"sigma": "2.0", "lambda": "1.0", "timesteps": "40"}
    assert read_points(path).shape == (2, 3)


VTK = """# vtk DataFile Version 3.0
surface
ASCII
DATASET POLYDATA
POINTS 3 float
0 0 0 1 0 0
0 1 0
POLYGONS 1 4
3 0 1 2
"""


def test_vtk_reader(tmp_path):
    f = tmp_path / "mesh.vtk"
    f.write_text(VTK)
    np.testing.assert_array_equal(read_points(f), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("text,exc", [
    (VTK.replace("# vtk DataFile Version 3.0", "hello"), ParseError),
    (VTK.replace("ASCII", "BINARY"), UnsupportedFormat),
    (VTK.replace("POLYDATA", "STRUCTURED_GRID"), UnsupportedFormat),
    (VTK.replace("POINTS 3", "POINTS 5"), ParseError),
])
def test_vtk_errors(tmp_path, text, exc):
    f = tmp_path / "bad.vtk"
    f.write_text(text)
    with pytest.raises(exc):
        read_points(f)


def test_unsupported(tmp_path):
    with pytest.raises(UnsupportedFormat):
        read_points(tmp_path / "a.ply")
    with pytest.raises(UnsupportedFormat):
        read_points(tmp_path / "a.xyz", fmt="ply")
    assert PointFormat("vtk") is PointFormat.LEGACY_POLYDATA_ASCII


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.just(3)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_text_round_trip_property(tmp_path_factory, pts):
    path = tmp_path_factory.mktemp("rt") / "p.xyz"
    write_points(pts, path)
    np.testing.assert_array_equal(read_points(path), pts)
