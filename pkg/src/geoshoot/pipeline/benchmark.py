"""Benchmark suite: run registration cases and report one CSV row per case.

A suite file is JSON::

    {
      "defaults": {"sigma": 2.0, "lambda": 1.0, "timesteps": 10, "max_iter": 100},
      "cases": [
        {"name": "flat", "shape": "flat-shape", "n": [300, 600, 1200],
         "backend": ["exact", "bh"], "mode": "evaluate", "repeats": 3}
      ]
    }

List-valued ``n`` and ``backend`` expand to their Cartesian product. Modes:

* ``register``: full L-BFGS registration from zero momentum;
* ``evaluate``: ``repeats`` objective + gradient sweeps at a fixed, seeded
  momentum. The fastest repeat is reported, which isolates per-sweep cost
  from iteration counts.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..core import OptimizerConfig, ShootingConfig
from ..optimizer import optimize
from ..shooting import StageTimer, objective_and_gradient
from ..synthetic import synthetic_case

log = logging.getLogger(__name__)


@dataclass
class BenchmarkRecord:
    case: str
    shape: str
    backend: str
    mode: str
    n: int
    timesteps: int
    sigma: float
    lam: float
    status: str = "ok"
    tree_build_ms: float = 0.0
    forward_ms: float = 0.0
    backward_ms: float = 0.0
    total_ms: float = 0.0
    residual_sse: float = float("nan")
    iterations: int = 0
    evaluations: int = 0
    mean_direct: float = 0.0
    mean_approx: float = 0.0


CSV_COLUMNS = tuple(f.name for f in fields(BenchmarkRecord))

_DEFAULTS = {"sigma": 2.0, "lambda": 1.0, "timesteps": 10, "max_iter": 100,
             "threshold_mult": 3.0, "mode": "register", "repeats": 3, "seed": 0}


def expand_cases(suite: dict) -> list[dict]:
    defaults = {**_DEFAULTS, **suite.get("defaults", {})}
    out = []
    for case in suite["cases"]:
        c = {**defaults, **case}
        ns = c["n"] if isinstance(c["n"], list) else [c["n"]]
        backends = c["backend"] if isinstance(c["backend"], list) else [c["backend"]]
        for n, backend in itertools.product(ns, backends):
            out.append({**c, "n": int(n), "backend": backend})
    return out


def _config(c: dict) -> ShootingConfig:
    return ShootingConfig(sigma=float(c["sigma"]), lam=float(c["lambda"]),
                          timesteps=int(c["timesteps"]), backend=c["backend"],
                          threshold_multiplier=float(c["threshold_mult"]),
                          optimizer=OptimizerConfig(max_iterations=int(c["max_iter"])))


def _fill_timer(rec: BenchmarkRecord, timer: StageTimer):
    rec.tree_build_ms = 1e3 * timer.seconds.get("tree_build", 0.0)
    rec.forward_ms = 1e3 * timer.seconds.get("forward", 0.0)
    rec.backward_ms = 1e3 * timer.seconds.get("backward", 0.0)
    tr = timer.traversal
    rec.mean_direct = tr.mean_direct
    rec.mean_approx = tr.mean_approximated


def evaluation_momentum(q0, target, seed: int = 0) -> np.ndarray:
    """Fixed, smooth-ish momentum used to time objective + gradient sweeps."""
    rng = np.random.default_rng(seed)
    return 0.05 * (target - q0) + 0.01 * rng.normal(size=q0.shape)


def run_case(c: dict) -> BenchmarkRecord:
    cfg = _config(c)
    rec = BenchmarkRecord(case=c.get("name", c["shape"]), shape=c["shape"],
                          backend=str(cfg.backend.value if hasattr(cfg.backend, "value")
                                      else cfg.backend),
                          mode=c["mode"], n=c["n"], timesteps=cfg.timesteps, sigma=cfg.sigma,
                          lam=cfg.lam)
    overrides = c.get("shape_params", {})
    q0, target = synthetic_case(c["shape"], c["n"], **overrides)
    if c["mode"] == "register":
        timer = StageTimer()
        t0 = time.perf_counter()
        _, trace = optimize(q0, target, cfg, timer=timer)
        rec.total_ms = 1e3 * (time.perf_counter() - t0)
        _fill_timer(rec, timer)
        rec.residual_sse = trace.final.residual_sse
        rec.iterations = trace.iterations
        rec.evaluations = trace.evaluations
    elif c["mode"] == "evaluate":
        p0 = evaluation_momentum(q0, target, int(c["seed"]))
        best = None
        for _ in range(int(c["repeats"])):
            timer = StageTimer()
            t0 = time.perf_counter()
            report, _ = objective_and_gradient(q0, p0, target, cfg, timer=timer)
            total = time.perf_counter() - t0
            if best is None or total < best[0]:
                best = (total, timer, report)
        rec.total_ms = 1e3 * best[0]
        _fill_timer(rec, best[1])
        rec.residual_sse = best[2].residual_sse
        rec.evaluations = 1
    else:
        raise ValueError(f"unknown mode {c['mode']!r}")
    return rec


def warm_up():
    """Compile all kernels so the first timed case does not pay for JIT."""
    q0, target = synthetic_case("flat-shape", 24)
    p0 = evaluation_momentum(q0, target)
    for backend in ("exact", "bh"):
        objective_and_gradient(q0, p0, target, ShootingConfig(timesteps=2, backend=backend))


def run_suite(suite: dict, out_path=None) -> list[BenchmarkRecord]:
    """Run every case sequentially; failures become rows with an error status."""
    warm_up()
    records = []
    for c in expand_cases(suite):
        try:
            rec = run_case(c)
        except Exception as exc:  # recorded per case, the suite keeps going
            log.exception("case %s failed", c.get("name"))
            rec = BenchmarkRecord(case=c.get("name", str(c.get("shape"))),
                                  shape=str(c.get("shape")), backend=str(c.get("backend")),
                                  mode=str(c.get("mode")), n=int(c.get("n", 0)),
                                  timesteps=int(c.get("timesteps", 0)),
                                  sigma=float(c.get("sigma", 0)), lam=float(c.get("lambda", 0)),
                                  status=f"error: {type(exc).__name__}: {exc}")
        log.info("%s", rec)
        records.append(rec)
    if out_path is not None:
        write_csv(records, out_path)
    return records


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(r).items()})


def load_suite(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
