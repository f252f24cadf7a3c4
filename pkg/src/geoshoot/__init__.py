"""Diffeomorphic point-set registration by geodesic shooting.

Exact O(N^2) and Barnes-Hut octree backends share one set of kernel
conventions; see :mod:`geoshoot.kernel_exact`.
"""
import os

# The workqueue layer needs no external runtime; an installed but outdated TBB
# would otherwise trigger a warning on first parallel call.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba  # noqa: E402

from .core import (  # noqa: E402
    Backend,
    ConfigError,
    GeodesicTrajectory,
    NonFiniteState,
    OptimizerConfig,
    ShootingConfig,
    validate_config,
)


def set_threads(n: int | None = None) -> int:
    """Cap compiled-kernel parallelism; ``None`` reads ``GEOSHOOT_THREADS``."""
    if n is None:
        env = os.environ.get("GEOSHOOT_THREADS")
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


set_threads()

__all__ = [
    "Backend",
    "ConfigError",
    "GeodesicTrajectory",
    "NonFiniteState",
    "OptimizerConfig",
    "ShootingConfig",
    "set_threads",
    "validate_config",
]
