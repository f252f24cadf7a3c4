"""Synthetic point sets: circles, flat/bent strips and random fixtures.

All shapes live in 3-D; planar shapes sit at z = 0. Paired shapes built from
the same ``n_points`` share index correspondence (point i of the moving shape
matches point i of the fixed shape).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .core import GeoshootError


class InvalidSpec(GeoshootError, ValueError):
    pass


class ShapeKind(str, enum.Enum):
    CIRCLE = "circle"
    TWO_CIRCLES = "two-circles"
    FLAT_RECTANGLE = "flat-rectangle"
    BENT_RECTANGLE = "bent-rectangle"
    UNIFORM_BOX = "uniform-box"
    CLUSTERED_PAIRS = "clustered-pairs"


@dataclass(frozen=True)
class ShapeSpec:
    kind: ShapeKind
    n_points: int
    radius: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # TwoCircles: centres at center -/+ (separation / 2) along x
    separation: float = 8.0
    # rectangles: ``rows`` points across, spacing between grid neighbours
    rows: int = 6
    spacing: float = 1.0
    bend_angle: float = 0.0
    box_size: float = 10.0
    cluster_spread: float = 0.1
    rng_seed: int = 0

    def validate(self) -> "ShapeSpec":
        kind = ShapeKind(self.kind)
        bad = []
        if int(self.n_points) != self.n_points or self.n_points < 1:
            bad.append("n_points must be a positive integer")
        for name in ("radius", "separation", "spacing", "box_size", "cluster_spread"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be positive")
        if self.rows < 1:
            bad.append("rows must be positive")
        if not np.isfinite(self.bend_angle) or abs(self.bend_angle) >= 2 * np.pi:
            bad.append("bend_angle must lie in (-2 pi, 2 pi)")
        if kind is ShapeKind.TWO_CIRCLES and self.n_points < 2:
            bad.append("two-circles needs at least 2 points")
        if bad:
            raise InvalidSpec("; ".join(bad))
        return replace(self, kind=kind, n_points=int(self.n_points))


def _circle(n, radius, center):
    t = 2.0 * np.pi * np.arange(n) / n
    pts = np.zeros((n, 3))
    pts[:, 0] = radius * np.cos(t)
    pts[:, 1] = radius * np.sin(t)
    return pts + np.asarray(center, dtype=float)


def _strip_coords(spec: ShapeSpec):
    """Arc-length coordinate along the strip and offset across it, centred."""
    cols = -(-spec.n_points // spec.rows)
    i, j = np.divmod(np.arange(spec.n_points), spec.rows)
    s = (i - (cols - 1) / 2.0) * spec.spacing
    y = (j - (spec.rows - 1) / 2.0) * spec.spacing
    return s, y


def _bend(s, y, angle, length):
    """Map the strip onto a circular arc of total turning ``angle``.

    The strip's mid-point stays fixed and the arc curls towards +y.
    """
    if angle == 0.0:
        return s, y
    radius = length / angle
    phi = s / radius
    r = radius - y
    return r * np.sin(phi), radius - r * np.cos(phi)


def generate(spec: ShapeSpec) -> np.ndarray:
    spec = spec.validate()
    n = spec.n_points
    kind = spec.kind
    center = np.asarray(spec.center, dtype=float)
    rng = np.random.default_rng(spec.rng_seed)
    if kind is ShapeKind.CIRCLE:
        return _circle(n, spec.radius, center)
    if kind is ShapeKind.TWO_CIRCLES:
        n1 = -(-n // 2)
        off = np.array([spec.separation / 2.0, 0.0, 0.0])
        return np.vstack([_circle(n1, spec.radius, center - off),
                          _circle(n - n1, spec.radius, center + off)])
    if kind in (ShapeKind.FLAT_RECTANGLE, ShapeKind.BENT_RECTANGLE):
        s, y = _strip_coords(spec)
        if kind is ShapeKind.BENT_RECTANGLE:
            cols = -(-n // spec.rows)
            s, y = _bend(s, y, float(spec.bend_angle), max(cols - 1, 1) * spec.spacing)
        pts = np.stack([s, y, np.zeros(n)], axis=1)
        return pts + center
    if kind is ShapeKind.UNIFORM_BOX:
        return center + rng.uniform(0.0, spec.box_size, size=(n, 3))
    if kind is ShapeKind.CLUSTERED_PAIRS:
        n_pairs = -(-n // 2)
        centres = rng.uniform(0.0, spec.box_size, size=(n_pairs, 3))
        u = rng.normal(size=(n_pairs, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        half = 0.5 * spec.cluster_spread * u
        pts = np.empty((2 * n_pairs, 3))
        pts[0::2] = centres - half
        pts[1::2] = centres + half
        return center + pts[:n]
    raise InvalidSpec(f"unknown shape kind {kind!r}")


# Paired registration cases (moving, fixed). These defaults
# put the strip firmly in the sparse regime (b/N < 0.25 at sigma = 2) and the
# circles in the dense one (b/N > 0.5).
CASES = ("circles", "two-circles", "flat-shape")

# Total arc angle (radians) of the bent strip. 0.1 rad over a 200 mm strip moves
# the ends by about 2.5 mm, which both backends register to convergence.
FLAT_BEND_ANGLE = 0.1


def synthetic_case(name: str, n_points: int, **overrides) -> tuple[np.ndarray, np.ndarray]:
    if name == "circles":
        base = ShapeSpec(ShapeKind.CIRCLE, n_points, radius=1.0)
        moving = generate(replace(base, **overrides))
        fixed = generate(replace(base, radius=2.0, **{k: v for k, v in overrides.items()
                                                      if k != "radius"}))
        return moving, fixed
    if name == "two-circles":
        base = replace(ShapeSpec(ShapeKind.TWO_CIRCLES, n_points, radius=1.0, separation=6.0),
                       **overrides)
        moving = generate(base)
        fixed = generate(replace(base, radius=base.radius * 1.5,
                                 center=(0.0, 1.5, 0.0)))
        return moving, fixed
    if name == "flat-shape":
        base = replace(ShapeSpec(ShapeKind.FLAT_RECTANGLE, n_points), **overrides)
        angle = overrides.get("bend_angle", FLAT_BEND_ANGLE)
        moving = generate(replace(base, kind=ShapeKind.FLAT_RECTANGLE))
        fixed = generate(replace(base, kind=ShapeKind.BENT_RECTANGLE, bend_angle=angle))
        return moving, fixed
    raise InvalidSpec(f"unknown case {name!r}; choose from {CASES}")


def head_on_pair(separation: float = 2.0, speed: float = 1.0):
    """Two points on the x axis with opposite momenta pointing at each other."""
    h = 0.5 * separation
    q = np.array([[-h, 0.0, 0.0], [h, 0.0, 0.0]])
    p = np.array([[speed, 0.0, 0.0], [-speed, 0.0, 0.0]])
    return q, p


def pairwise_stats(q, sigma: float, multiplier: float = 3.0, chunk: int = 1024):
    """Brute-force neighbour statistics.

    Returns ``(b, diameter)`` where ``b`` is the mean number of *other* points
    within ``multiplier * sigma`` of each point.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    thr2 = (multiplier * sigma) ** 2
    neighbours = 0
    diam2 = 0.0
    for start in range(0, n, chunk):
        block = q[start:start + chunk]
        d2 = np.sum((block[:, None, :] - q[None, :, :]) ** 2, axis=-1)
        neighbours += int(np.count_nonzero(d2 <= thr2)) - block.shape[0]
        diam2 = max(diam2, float(d2.max()))
    return neighbours / n, float(np.sqrt(diam2))
