"""Geodesic shooting: forward Euler integration, objective and adjoint gradient.

Forward step with dt = 1/T::

    q[k+1] = q[k] + dt * dH/dp(q[k], p[k])
    p[k+1] = p[k] - dt * dH/dq(q[k], p[k])

The objective is ``E(p0) = H(q0, p0) + lam * |q[T] - target|^2``. Its gradient
is the exact derivative of this discrete recursion, obtained by running the
transposed step backwards with adjoints alpha (positions) and beta (momenta).
"""
from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import bh_kernel, kernel_exact
from .bh_kernel import TraversalStats
from .core import (
    Backend,
    ConfigMismatch,
    GeodesicTrajectory,
    NonFiniteState,
    ShootingConfig,
    as_points,
    check_aligned,
    validate_config,
)
from .octree import Octree


@dataclass
class AdjointState:
    alpha: np.ndarray
    beta: np.ndarray


@dataclass
class ObjectiveReport:
    energy: float
    attachment: float
    total: float
    residual_sse: float


class StageTimer:
    """Accumulates wall time (seconds) and traversal counts per stage."""

    def __init__(self):
        self.seconds = defaultdict(float)
        self.traversal = TraversalStats()

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] += time.perf_counter() - t0

    def add_stats(self, stats: TraversalStats):
        self.traversal = self.traversal + stats


@contextmanager
def _maybe(timer: StageTimer | None, name: str):
    if timer is None:
        yield
    else:
        with timer.stage(name):
            yield


def _is_bh(config: ShootingConfig) -> bool:
    return Backend.parse(config.backend) is Backend.BARNES_HUT


def _step_terms(q, p, config, timer):
    """dH/dp, dH/dq, H and (BH only) the tree at state (q, p)."""
    s = config.sigma
    if _is_bh(config):
        with _maybe(timer, "tree_build"):
            tree = Octree.build(q, p)
        with _maybe(timer, "forward"):
            dp, dq, h, stats = bh_kernel.bh_forward_terms(
                tree, q, p, s, config.threshold, config.literal_mean_momentum)
        if timer is not None:
            timer.add_stats(stats)
        return dp, dq, h, tree
    with _maybe(timer, "forward"):
        dp, dq, h = kernel_exact.forward_terms(q, p, s)
    if timer is not None:
        n = q.shape[0]
        timer.add_stats(TraversalStats(n * n, 0, n * n, n))
    return dp, dq, h, None


def shoot_forward(q0, p0, config: ShootingConfig, keep_trees: bool = True,
                  timer: StageTimer | None = None) -> GeodesicTrajectory:
    """Integrate the Hamiltonian flow from (q0, p0) over t in [0, 1]."""
    config = validate_config(config)
    q0 = as_points(q0, "q0")
    p0 = as_points(p0, "p0")
    check_aligned(q0, p0)
    T = config.timesteps
    dt = 1.0 / T
    n = q0.shape[0]
    qs = np.empty((T + 1, n, 3))
    ps = np.empty((T + 1, n, 3))
    qs[0] = q0
    ps[0] = p0
    trees = [] if _is_bh(config) and keep_trees else None
    energy = 0.0
    v0 = None
    for k in range(T):
        dp, dq, h, tree = _step_terms(qs[k], ps[k], config, timer)
        if k == 0:
            energy, v0 = h, dp
        if trees is not None:
            trees.append(tree)
        qs[k + 1] = qs[k] + dt * dp
        ps[k + 1] = ps[k] - dt * dq
        if not (np.isfinite(qs[k + 1]).all() and np.isfinite(ps[k + 1]).all()):
            raise NonFiniteState(k + 1)
    return GeodesicTrajectory(q=qs, p=ps, config=config, energy=float(energy),
                              initial_velocity=v0, trees=trees)


def report_from_trajectory(traj: GeodesicTrajectory, target: np.ndarray) -> ObjectiveReport:
    r = traj.q[-1] - target
    sse = float(np.sum(r * r))
    att = traj.config.lam * sse
    return ObjectiveReport(energy=traj.energy, attachment=att, total=traj.energy + att,
                           residual_sse=sse)


def objective(q0, p0, target, config: ShootingConfig) -> ObjectiveReport:
    target = as_points(target, "target")
    traj = shoot_forward(q0, p0, config, keep_trees=False)
    check_aligned(traj.q[0], target)
    return report_from_trajectory(traj, target)


def backward_gradient(trajectory: GeodesicTrajectory, target, config: ShootingConfig | None = None,
                      timer: StageTimer | None = None, return_adjoint: bool = False):
    """dE/dp0 for the discrete objective, by reverse sweep over the trajectory."""
    config = validate_config(config if config is not None else trajectory.config)
    target = as_points(target, "target")
    T = config.timesteps
    if len(trajectory) != T + 1:
        raise ConfigMismatch(f"trajectory has {len(trajectory)} snapshots, expected {T + 1}")
    check_aligned(trajectory.q[0], target)
    dt = 1.0 / T
    s = config.sigma
    bh = _is_bh(config)
    alpha = 2.0 * config.lam * (trajectory.q[-1] - target)
    beta = np.zeros_like(alpha)
    for k in range(T - 1, -1, -1):
        q, p = trajectory.q[k], trajectory.p[k]
        if bh:
            if trajectory.trees is not None:
                tree = trajectory.trees[k]
            else:
                with _maybe(timer, "tree_build"):
                    tree = Octree.build(q, p)
            with _maybe(timer, "backward"):
                gq, gp, stats = bh_kernel.bh_adjoint_products(
                    tree, alpha, beta, s, config.threshold, config.literal_mean_momentum)
            if timer is not None:
                timer.add_stats(stats)
        else:
            with _maybe(timer, "backward"):
                gq, gp = kernel_exact.adjoint_products(q, p, alpha, beta, s)
        alpha = alpha + dt * gq
        beta = beta + dt * gp
        if not (np.isfinite(alpha).all() and np.isfinite(beta).all()):
            raise NonFiniteState(k, "adjoint")
    v0 = trajectory.initial_velocity
    if v0 is None:
        v0, _, _, _ = _step_terms(trajectory.q[0], trajectory.p[0], config, None)
    grad = beta + v0
    if return_adjoint:
        return grad, AdjointState(alpha=alpha, beta=beta)
    return grad


def objective_and_gradient(q0, p0, target, config: ShootingConfig,
                           timer: StageTimer | None = None):
    """One forward + backward sweep: ``(ObjectiveReport, gradient)``."""
    traj = shoot_forward(q0, p0, config, keep_trees=True, timer=timer)
    report = report_from_trajectory(traj, as_points(target, "target"))
    grad = backward_gradient(traj, target, traj.config, timer=timer)
    return report, grad


def warp_points(trajectory: GeodesicTrajectory, x, config: ShootingConfig | None = None,
                return_path: bool = False):
    """Carry arbitrary points along the flow defined by the trajectory.

    Uses the same Euler grid: ``x[k+1] = x[k] + dt * 2 * v_k(x[k])`` where
    ``v_k`` is the kernel-interpolated momentum field at step k.
    """
    config = validate_config(config if config is not None else trajectory.config)
    x = as_points(x, "x").copy()
    T = config.timesteps
    if len(trajectory) != T + 1:
        raise ConfigMismatch(f"trajectory has {len(trajectory)} snapshots, expected {T + 1}")
    dt = 1.0 / T
    s = config.sigma
    bh = _is_bh(config)
    zeros = np.zeros_like(x)
    path = [x.copy()] if return_path else None
    for k in range(T):
        q, p = trajectory.q[k], trajectory.p[k]
        if bh:
            if trajectory.trees is not None:
                tree = trajectory.trees[k]
            else:
                tree = Octree.build(q, p)
            vel, _, _, _ = bh_kernel.forward_sums(tree, x, zeros, s, config.threshold)
        else:
            vel, _, _ = kernel_exact._forward(x, zeros, q, p, s)
        x = x + dt * (kernel_exact.VELOCITY_FACTOR * vel)
        if not np.isfinite(x).all():
            raise NonFiniteState(k + 1, "warped points")
        if path is not None:
            path.append(x.copy())
    if return_path:
        return x, np.stack(path)
    return x
