"""File I/O, rigid pre-alignment, CLI and benchmarks."""
from .io import PointFormat, read_points, write_points
from .procrustes import RigidTransform, procrustes_align

__all__ = ["PointFormat", "RigidTransform", "procrustes_align", "read_points", "write_points"]
