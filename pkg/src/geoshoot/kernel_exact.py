"""Exact O(N^2) Gaussian kernel sums.

Conventions (used consistently by every backend):

* ``G(r) = exp(-r^2 / (2 sigma^2))`` with ``G(0) = 1``.
* ``H(q, p) = sum_ij (p_i . p_j) G(|q_i - q_j|)``, no factor 1/2.
* Hence ``dH/dp_i = 2 sum_j G_ij p_j = VELOCITY_FACTOR * v(q_i)`` where ``v``
  is the kernel-interpolated field returned by :func:`exact_velocity`
  (self-term included). Points move with ``dq/dt = dH/dp``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import as_points, check_aligned

# dq/dt = dH/dp = VELOCITY_FACTOR * exact_velocity(q, q, p)
VELOCITY_FACTOR = 2.0


@dataclass
class HamiltonianGradients:
    dH_dp: np.ndarray
    dH_dq: np.ndarray


def gaussian(r, sigma: float):
    r = np.asarray(r, dtype=np.float64)
    return np.exp(-0.5 * r * r / (sigma * sigma))


def _forward(q_eval, p_eval, q_src, p_src, sigma):
    m = q_eval.shape[0]
    vel = np.empty((m, 3))
    gq = np.empty((m, 3))
    h = np.empty(m)
    _kernels.exact_forward(q_eval, p_eval, q_src, p_src, 1.0 / (sigma * sigma), vel, gq, h)
    return vel, gq, h


def hamiltonian(q, p, sigma: float) -> float:
    q = as_points(q, "q")
    p = as_points(p, "p")
    check_aligned(q, p)
    _, _, h = _forward(q, p, q, p, sigma)
    return float(h.sum())


def hamiltonian_gradients(q, p, sigma: float) -> HamiltonianGradients:
    q = as_points(q, "q")
    p = as_points(p, "p")
    check_aligned(q, p)
    vel, gq, _ = _forward(q, p, q, p, sigma)
    return HamiltonianGradients(dH_dp=VELOCITY_FACTOR * vel, dH_dq=(-2.0 / sigma**2) * gq)


def exact_velocity(q_eval, q_src, p_src, sigma: float) -> np.ndarray:
    """v(x) = sum_i G(|x - q_i|) p_i for every row x of ``q_eval``."""
    q_eval = as_points(q_eval, "q_eval")
    q_src = as_points(q_src, "q_src")
    p_src = as_points(p_src, "p_src")
    check_aligned(q_src, p_src)
    vel, _, _ = _forward(q_eval, np.zeros_like(q_eval), q_src, p_src, sigma)
    return vel


def forward_terms(q, p, sigma: float):
    """Return ``(dH/dp, dH/dq, H)`` in one pass over all pairs."""
    vel, gq, h = _forward(q, p, q, p, sigma)
    return VELOCITY_FACTOR * vel, (-2.0 / sigma**2) * gq, float(h.sum())


def combine_adjoint(sq1, sq2, sp1, sp2, sigma: float):
    inv_s2 = 1.0 / (sigma * sigma)
    return 2.0 * inv_s2 * (sq2 - sq1), 2.0 * sp1 + 2.0 * inv_s2 * sp2


def adjoint_products(q, p, alpha, beta, sigma: float):
    """Gradients of ``S = alpha . dH/dp - beta . dH/dq`` w.r.t. q and p.

    These are the transposed second-derivative products needed to pull the
    adjoints (alpha, beta) back through one explicit Euler step:
    ``grad_q S = (d2H/dq dp) alpha - (d2H/dq2) beta`` and
    ``grad_p S = (d2H/dp2) alpha - (d2H/dp dq) beta``.
    """
    q = as_points(q, "q")
    p = as_points(p, "p")
    alpha = as_points(alpha, "alpha")
    beta = as_points(beta, "beta")
    check_aligned(q, p, alpha, beta)
    n = q.shape[0]
    sq1, sq2, sp1, sp2 = (np.empty((n, 3)) for _ in range(4))
    _kernels.exact_backward(q, p, alpha, beta, 1.0 / (sigma * sigma), sq1, sq2, sp1, sp2)
    return combine_adjoint(sq1, sq2, sp1, sp2, sigma)
