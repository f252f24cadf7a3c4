"""Rigid (rotation + translation) Procrustes alignment of corresponding points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DimensionMismatch, GeoshootError, as_points


class DegenerateConfiguration(GeoshootError, ValueError):
    pass


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.rotation.T + self.translation

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))


def procrustes_align(source, target, rank_tol: float = 1e-12):
    """Least-squares rigid map ``R s + t`` from ``source`` onto ``target``.

    Kabsch solution with the sign of the last singular direction flipped when
    needed so that ``det(R) = +1``. Returns ``(RigidTransform, aligned)``.
    """
    src = as_points(source, "source")
    dst = as_points(target, "target")
    if src.shape != dst.shape:
        raise DimensionMismatch(f"source has {len(src)} points, target {len(dst)}")
    if src.shape[0] < 3:
        raise DegenerateConfiguration("need at least 3 corresponding points")
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    cov = (dst - mu_d).T @ (src - mu_s)
    u, sv, vt = np.linalg.svd(cov)
    # Planar sets have rank 2 and are still determined; collinear ones are not.
    if sv[0] == 0 or sv[1] <= rank_tol * sv[0]:
        raise DegenerateConfiguration("cross-covariance has rank < 2 (collinear points)")
    flip = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        flip[2] = -1.0
    rot = (u * flip) @ vt
    trans = mu_d - rot @ mu_s
    tf = RigidTransform(rot, trans)
    return tf, tf.apply(src)
