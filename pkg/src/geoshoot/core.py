"""Shared domain types, configuration and errors.

Point sets and momentum sets are plain ``(N, 3)`` float64 arrays; the helpers
here validate and normalise them. Index ``i`` in a point set always refers to
the same physical point across every operation (matching is correspondence
based).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class GeoshootError(Exception):
    """Base class for all package errors."""


class ConfigError(GeoshootError, ValueError):
    """Invalid configuration. ``violations`` lists every violated bound."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + ", ".join(self.violations))


class DimensionMismatch(GeoshootError, ValueError):
    pass


class InvalidPointSet(GeoshootError, ValueError):
    pass


class NonFiniteState(GeoshootError, FloatingPointError):
    """Raised when an integration step produces NaN/Inf."""

    def __init__(self, timestep: int, what: str = "state"):
        self.timestep = timestep
        super().__init__(f"non-finite {what} at timestep {timestep}")


class ConfigMismatch(GeoshootError, ValueError):
    pass


class Backend(str, enum.Enum):
    EXACT = "exact"
    BARNES_HUT = "bh"

    @classmethod
    def parse(cls, value: "Backend | str") -> "Backend":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("-", "_")
        aliases = {"exact": cls.EXACT, "bh": cls.BARNES_HUT, "barnes_hut": cls.BARNES_HUT,
                   "barneshut": cls.BARNES_HUT}
        try:
            return aliases[v]
        except KeyError:
            raise ConfigError([f"UnknownBackend({value!r})"]) from None


@dataclass(frozen=True)
class LineSearchConfig:
    c1: float = 1e-4
    c2: float = 0.9
    max_trials: int = 20


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 200
    memory: int = 10
    gradient_tolerance: float = 1e-6
    relative_objective_tolerance: float = 1e-9
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    # Optional coarse-to-fine list of kernel widths; empty means single level.
    sigma_schedule: tuple[float, ...] = ()


@dataclass(frozen=True)
class ShootingConfig:
    sigma: float = 2.0
    lam: float = 1.0
    timesteps: int = 40
    backend: Backend = Backend.EXACT
    threshold_multiplier: float = 3.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    # Apply the literal 1/n_k factor to approximated momentum dot products.
    literal_mean_momentum: bool = False

    @property
    def threshold(self) -> float:
        return self.threshold_multiplier * self.sigma

    @property
    def dt(self) -> float:
        return 1.0 / self.timesteps

    def replace(self, **changes) -> "ShootingConfig":
        from dataclasses import replace

        return replace(self, **changes)


def validate_config(config: ShootingConfig) -> ShootingConfig:
    """Check every bound of ``config`` and return a normalised copy.

    Raises :class:`ConfigError` listing all violations at once.
    """
    bad = []
    if not (np.isfinite(config.sigma) and config.sigma > 0):
        bad.append("NonPositiveSigma")
    if not (np.isfinite(config.lam) and config.lam > 0):
        bad.append("NonPositiveLambda")
    if int(config.timesteps) != config.timesteps or config.timesteps < 1:
        bad.append("ZeroTimesteps")
    # +inf is allowed: it disables approximation entirely
    if not (config.threshold_multiplier > 0) or np.isnan(config.threshold_multiplier):
        bad.append("NonPositiveThreshold")
    opt = config.optimizer
    if opt.max_iterations < 0:
        bad.append("NegativeMaxIterations")
    if opt.memory < 1:
        bad.append("NonPositiveMemory")
    if not opt.gradient_tolerance > 0:
        bad.append("NonPositiveGradientTolerance")
    if not opt.relative_objective_tolerance >= 0:
        bad.append("NegativeObjectiveTolerance")
    ls = opt.line_search
    if not (0 < ls.c1 < ls.c2 < 1):
        bad.append("InvalidWolfeConstants")
    if ls.max_trials < 1:
        bad.append("NonPositiveLineSearchTrials")
    if any(not s > 0 for s in opt.sigma_schedule):
        bad.append("NonPositiveSigmaSchedule")
    try:
        backend = Backend.parse(config.backend)
    except ConfigError as exc:
        bad.extend(exc.violations)
        backend = None
    if bad:
        raise ConfigError(bad)
    return config.replace(backend=backend, timesteps=int(config.timesteps))


def as_points(x, name: str = "points") -> np.ndarray:
    """Return ``x`` as a C-contiguous ``(N, 3)`` float64 array with N >= 1."""
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if arr.ndim == 1 and arr.shape[0] == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidPointSet(f"{name} must have shape (N, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise InvalidPointSet(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidPointSet(f"{name} contains non-finite values")
    return arr


def check_aligned(*arrays: np.ndarray) -> int:
    n = arrays[0].shape[0]
    for a in arrays[1:]:
        if a.shape[0] != n:
            raise DimensionMismatch(f"expected {n} rows, got {a.shape[0]}")
    return n


@dataclass
class GeodesicTrajectory:
    """Snapshots of positions and momenta at ``t_k = k / T``.

    ``q`` and ``p`` have shape ``(T + 1, N, 3)``. ``trees`` holds the octree
    built at each forward step (Barnes-Hut backend only) so the backward pass
    can reuse the geometry. ``initial_velocity`` is dH/dp at t = 0 and
    ``energy`` is H(q0, p0), both as computed by the configured backend.
    """

    q: np.ndarray
    p: np.ndarray
    config: ShootingConfig
    energy: float = 0.0
    initial_velocity: np.ndarray | None = None
    trees: list | None = None

    @property
    def timesteps(self) -> int:
        return self.q.shape[0] - 1

    @property
    def n_points(self) -> int:
        return self.q.shape[1]

    @property
    def final_points(self) -> np.ndarray:
        return self.q[-1]

    @property
    def states(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return zip(self.q, self.p)

    def __len__(self) -> int:
        return self.q.shape[0]
