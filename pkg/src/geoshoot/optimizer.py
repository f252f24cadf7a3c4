"""L-BFGS minimisation of the shooting objective over initial momenta."""
from __future__ import annotations

import csv
import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GeoshootError,
    LineSearchConfig,
    NonFiniteState,
    OptimizerConfig,
    ShootingConfig,
    as_points,
    check_aligned,
    validate_config,
)
from .shooting import ObjectiveReport, StageTimer, objective_and_gradient

log = logging.getLogger(__name__)

__all__ = ["OptimizerConfig", "LineSearchConfig", "OptimizationTrace", "Termination",
           "TraceRecord", "optimize", "lbfgs", "NonFiniteObjectiveAtStart"]


class NonFiniteObjectiveAtStart(GeoshootError, FloatingPointError):
    pass


class Termination(str, enum.Enum):
    GRADIENT_TOLERANCE = "GradientTolerance"
    OBJECTIVE_TOLERANCE = "ObjectiveTolerance"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    NON_FINITE = "NonFinite"


@dataclass
class TraceRecord:
    iteration: int
    total: float
    energy: float
    attachment: float
    grad_inf: float
    wall_ms: float


TRACE_COLUMNS = ("iter", "total", "energy", "attachment", "grad_inf", "wall_ms")


@dataclass
class OptimizationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    termination: Termination | None = None
    evaluations: int = 0
    final: ObjectiveReport | None = None

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in self.records:
                w.writerow([r.iteration, repr(r.total), repr(r.energy), repr(r.attachment),
                            repr(r.grad_inf), f"{r.wall_ms:.3f}"])


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimiser of the cubic interpolant on [a, b], or None if ill-posed."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0 or not np.isfinite(disc):
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


def strong_wolfe(phi, f0, g0, step, ls: LineSearchConfig, step_max=1e20):
    """Line search for the strong Wolfe conditions (bracket, then zoom).

    ``phi(alpha)`` returns ``(f, dphi, payload)``; a non-finite ``f`` fails
    the sufficient-decrease test. Returns ``(alpha, f, payload)``, or ``None``
    when ``ls.max_trials`` evaluations produced no point with sufficient
    decrease. If the curvature condition is never met the best point with
    sufficient decrease is returned instead.
    """
    c1, c2 = ls.c1, ls.c2
    trials = 0
    best = None

    def armijo(a, f):
        return np.isfinite(f) and f <= f0 + c1 * a * g0

    prev = (0.0, f0, g0, None)
    a = step
    bracket = None
    while trials < ls.max_trials:
        f, g, payload = phi(a)
        trials += 1
        cur = (a, f, g, payload)
        if not armijo(a, f) or (prev[0] > 0 and f >= prev[1]):
            bracket = (prev, cur)
            break
        best = cur
        if abs(g) <= -c2 * g0:
            return a, f, payload
        if g >= 0:
            bracket = (cur, prev)
            break
        prev = cur
        a = min(4.0 * a, step_max)
    if bracket is not None:
        lo, hi = bracket
        while trials < ls.max_trials:
            cand = None
            if np.isfinite(hi[1]):
                cand = _cubic_min(lo[0], lo[1], lo[2], hi[0], hi[1], hi[2])
            left, right = min(lo[0], hi[0]), max(lo[0], hi[0])
            margin = 0.1 * (right - left)
            if cand is None or not (left + margin <= cand <= right - margin):
                cand = 0.5 * (lo[0] + hi[0])
            f, g, payload = phi(cand)
            trials += 1
            cur = (cand, f, g, payload)
            if not armijo(cand, f) or f >= lo[1]:
                hi = cur
            else:
                if best is None or f < best[1]:
                    best = cur
                if abs(g) <= -c2 * g0:
                    return cand, f, payload
                if g * (hi[0] - lo[0]) >= 0:
                    hi = lo
                lo = cur
            if abs(hi[0] - lo[0]) <= 1e-14 * max(1.0, abs(lo[0])):
                break
    if best is not None:
        return best[0], best[1], best[3]
    return None


def lbfgs(fun, x0, config: OptimizerConfig, on_iterate=None):
    """Minimise ``fun(x) -> (f, grad, info)`` with limited-memory BFGS.

    ``on_iterate(iteration, x, f, grad, info)`` is called for the start point
    and every accepted iterate. Returns ``(x, f, grad, info, Termination,
    evaluations)``.
    """
    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        try:
            return fun(x)
        except NonFiniteState:
            return np.inf, None, None

    x = np.array(x0, dtype=float)
    f, g, info = call(x)
    if not np.isfinite(f):
        raise NonFiniteObjectiveAtStart("objective is not finite at the start point")
    if on_iterate:
        on_iterate(0, x, f, g, info)
    S, Y, rho = [], [], []
    reason = Termination.MAX_ITERATIONS
    if np.max(np.abs(g)) < config.gradient_tolerance:
        return x, f, g, info, Termination.GRADIENT_TOLERANCE, evals
    for it in range(1, config.max_iterations + 1):
        # two-loop recursion
        d = -g.copy()
        alphas = []
        for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
            a = r * (s @ d)
            alphas.append(a)
            d -= a * y
        if S:
            d *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        for (s, y, r), a in zip(zip(S, Y, rho), reversed(alphas)):
            b = r * (y @ d)
            d += (a - b) * s
        dg = d @ g
        if not dg < 0:
            S.clear(), Y.clear(), rho.clear()
            d = -g
            dg = d @ g
        step = 1.0 if S else 1.0 / max(np.linalg.norm(g), 1e-300)

        def phi(a, x=x, d=d):
            fa, ga, ia = call(x + a * d)
            if ga is None:
                return np.inf, np.nan, None
            return fa, ga @ d, (ga, ia)

        res = strong_wolfe(phi, f, dg, step, config.line_search)
        if res is None:
            reason = Termination.LINE_SEARCH_FAILURE
            break
        a, f_new, (g_new, info_new) = res
        s = a * d
        y = g_new - g
        sy = s @ y
        x = x + s
        f_old, f, g, info = f, f_new, g_new, info_new
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            S.append(s)
            Y.append(y)
            rho.append(1.0 / sy)
            if len(S) > config.memory:
                S.pop(0), Y.pop(0), rho.pop(0)
        if on_iterate:
            on_iterate(it, x, f, g, info)
        if np.max(np.abs(g)) < config.gradient_tolerance:
            reason = Termination.GRADIENT_TOLERANCE
            break
        if f_old - f <= config.relative_objective_tolerance * max(abs(f_old), abs(f), 1.0):
            reason = Termination.OBJECTIVE_TOLERANCE
            break
    return x, f, g, info, reason, evals


def _optimize_level(q0, target, config, p_start, trace, t_start, timer):
    n = q0.shape[0]

    def fun(x):
        report, grad = objective_and_gradient(q0, x.reshape(n, 3), target, config, timer=timer)
        return report.total, grad.ravel(), report

    def on_iterate(it, x, f, g, report):
        trace.records.append(TraceRecord(
            iteration=len(trace.records), total=report.total, energy=report.energy,
            attachment=report.attachment, grad_inf=float(np.max(np.abs(g))),
            wall_ms=1e3 * (time.perf_counter() - t_start)))
        log.debug("iter %d total %.6g grad_inf %.3g", it, report.total, np.max(np.abs(g)))

    x, f, g, report, reason, evals = lbfgs(fun, p_start.ravel(), config.optimizer, on_iterate)
    trace.evaluations += evals
    trace.final = report
    return x.reshape(n, 3), reason


def optimize(q0, target, config: ShootingConfig, p_init=None,
             timer: StageTimer | None = None):
    """Find initial momenta p0 minimising H(q0, p0) + lam |q(1) - target|^2.

    Starts from zero momentum (the identity map) unless ``p_init`` is given.
    Returns ``(p0, OptimizationTrace)``.
    """
    config = validate_config(config)
    q0 = as_points(q0, "q0")
    target = as_points(target, "target")
    check_aligned(q0, target)
    p = np.zeros_like(q0) if p_init is None else as_points(p_init, "p_init").copy()
    trace = OptimizationTrace()
    t_start = time.perf_counter()
    levels = list(config.optimizer.sigma_schedule) + [config.sigma]
    if levels[:-1] and levels[-2] == config.sigma:
        levels.pop()
    for sigma in levels:
        level_cfg = config.replace(sigma=float(sigma))
        p, reason = _optimize_level(q0, target, level_cfg, p, trace, t_start, timer)
    trace.termination = reason
    return p, trace
