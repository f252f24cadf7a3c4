"""Compiled pair-sum kernels shared by the exact and Barnes-Hut backends.

Every kernel sums a "pair term" between a query point k and a source unit.
A source unit is either a single point (n = 1) or an octree node summarised
by its centroid Q, total momentum P, total adjoints A, B and count n. For a
single point the aggregate formulas reduce to the exact ones, which is what
makes the Barnes-Hut backend collapse onto the exact backend when nothing is
approximated.

Unscaled accumulators are returned; the public wrappers apply the constant
factors (2, -2/sigma^2, ...).
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

# Sources are visited depth first; one level pushes at most 8 children.
MAX_DEPTH = 32
STACK_SIZE = 8 * (MAX_DEPTH + 2)

# exp() for the kernel's non-positive arguments. libm's exp gets several
# times slower for large negative and subnormal-producing arguments, which
# makes the cost of an "O(N^2)" sum depend on the geometry. This variant has
# argument-independent cost and stays within 2 ulp of libm. Weights below
# exp(-600) are flushed to zero so products never go subnormal; every sum
# contains a unit self weight, so this is far below double resolution.
_EXP_TABLE_BITS = 64
_LN2_HI = 6.93147180369123816490e-01 / _EXP_TABLE_BITS
_LN2_LO = 1.90821492927058770002e-10 / _EXP_TABLE_BITS
_INV_LN2 = _EXP_TABLE_BITS * 1.44269504088896338700e00
_EXP_FRAC = np.array([2.0 ** (j / _EXP_TABLE_BITS) for j in range(_EXP_TABLE_BITS)])
_EXP_POW2 = np.ldexp(1.0, np.arange(-1023, 1))
EXP_FLUSH = -600.0


@njit(inline="always")
def exp_nonpositive(x):
    xc = x if x > EXP_FLUSH else EXP_FLUSH
    kf = np.floor(xc * _INV_LN2 + 0.5)
    r = (xc - kf * _LN2_HI) - kf * _LN2_LO
    k = int(kf)
    j = k & (_EXP_TABLE_BITS - 1)
    m = (k - j) // _EXP_TABLE_BITS
    poly = 1.0 + r * (1.0 + r * (0.5 + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r * (
        1.0 / 120.0 + r * (1.0 / 720.0))))))
    keep = 1.0 if x > EXP_FLUSH else 0.0
    return keep * (_EXP_FRAC[j] * poly * _EXP_POW2[m + 1023])


@njit(inline="always")
def _forward_term(x0, x1, x2, y0, y1, y2, Q0, Q1, Q2, P0, P1, P2, n, inv_s2, literal):
    d0 = x0 - Q0
    d1 = x1 - Q1
    d2 = x2 - Q2
    g = exp_nonpositive(-0.5 * (d0 * d0 + d1 * d1 + d2 * d2) * inv_s2)
    c = y0 * P0 + y1 * P1 + y2 * P2
    if literal and n > 1:
        c /= n
    cg = c * g
    return g * P0, g * P1, g * P2, cg * d0, cg * d1, cg * d2, cg


@njit(inline="always")
def _backward_term(x0, x1, x2, y0, y1, y2, a0, a1, a2, b0, b1, b2,
                   Q0, Q1, Q2, P0, P1, P2, A0, A1, A2, B0, B1, B2, n, inv_s2, literal):
    d0 = x0 - Q0
    d1 = x1 - Q1
    d2 = x2 - Q2
    g = exp_nonpositive(-0.5 * (d0 * d0 + d1 * d1 + d2 * d2) * inv_s2)
    c = y0 * P0 + y1 * P1 + y2 * P2
    if literal and n > 1:
        c /= n
    # first-order cross terms: (a_k . p_j) + (a_j . p_k)
    ap = a0 * P0 + a1 * P1 + a2 * P2 + A0 * y0 + A1 * y1 + A2 * y2
    # b_k minus the source's mean adjoint
    e0 = b0 - B0 / n
    e1 = b1 - B1 / n
    e2 = b2 - B2 / n
    ed = e0 * d0 + e1 * d1 + e2 * d2
    gap = g * ap
    gc = g * c
    ged = g * ed
    return (gap * d0, gap * d1, gap * d2,
            gc * (e0 - d0 * ed * inv_s2), gc * (e1 - d1 * ed * inv_s2), gc * (e2 - d2 * ed * inv_s2),
            g * A0, g * A1, g * A2,
            ged * P0, ged * P1, ged * P2)


# ---------------------------------------------------------------- exact sums

@njit(parallel=True, cache=True)
def exact_forward(xq, xp, q, p, inv_s2, vel, gq, h):
    """vel_k = sum_j G p_j, gq_k = sum_j (y_k.p_j) G d_kj, h_k = sum_j (y_k.p_j) G."""
    m = xq.shape[0]
    n = q.shape[0]
    for k in prange(m):
        x0, x1, x2 = xq[k, 0], xq[k, 1], xq[k, 2]
        y0, y1, y2 = xp[k, 0], xp[k, 1], xp[k, 2]
        v0 = v1 = v2 = 0.0
        s0 = s1 = s2 = 0.0
        hh = 0.0
        for j in range(n):
            t = _forward_term(x0, x1, x2, y0, y1, y2, q[j, 0], q[j, 1], q[j, 2],
                              p[j, 0], p[j, 1], p[j, 2], 1, inv_s2, False)
            v0 += t[0]
            v1 += t[1]
            v2 += t[2]
            s0 += t[3]
            s1 += t[4]
            s2 += t[5]
            hh += t[6]
        vel[k, 0] = v0
        vel[k, 1] = v1
        vel[k, 2] = v2
        gq[k, 0] = s0
        gq[k, 1] = s1
        gq[k, 2] = s2
        h[k] = hh


@njit(parallel=True, cache=True)
def exact_backward(q, p, a, b, inv_s2, sq1, sq2, sp1, sp2):
    n = q.shape[0]
    for k in prange(n):
        x0, x1, x2 = q[k, 0], q[k, 1], q[k, 2]
        y0, y1, y2 = p[k, 0], p[k, 1], p[k, 2]
        a0, a1, a2 = a[k, 0], a[k, 1], a[k, 2]
        b0, b1, b2 = b[k, 0], b[k, 1], b[k, 2]
        acc = np.zeros(12)
        for j in range(n):
            t = _backward_term(x0, x1, x2, y0, y1, y2, a0, a1, a2, b0, b1, b2,
                               q[j, 0], q[j, 1], q[j, 2], p[j, 0], p[j, 1], p[j, 2],
                               a[j, 0], a[j, 1], a[j, 2], b[j, 0], b[j, 1], b[j, 2],
                               1, inv_s2, False)
            for c in range(12):
                acc[c] += t[c]
        for c in range(3):
            sq1[k, c] = acc[c]
            sq2[k, c] = acc[3 + c]
            sp1[k, c] = acc[6 + c]
            sp2[k, c] = acc[9 + c]


# ----------------------------------------------------------- Barnes-Hut sums

@njit(inline="always")
def _min_dist2(amin, amax, k, x0, x1, x2):
    s = 0.0
    lo = amin[k, 0] - x0
    hi = x0 - amax[k, 0]
    t = lo if lo > hi else hi
    if t > 0.0:
        s += t * t
    lo = amin[k, 1] - x1
    hi = x1 - amax[k, 1]
    t = lo if lo > hi else hi
    if t > 0.0:
        s += t * t
    lo = amin[k, 2] - x2
    hi = x2 - amax[k, 2]
    t = lo if lo > hi else hi
    if t > 0.0:
        s += t * t
    return s


@njit(parallel=True, cache=True)
def bh_forward(xq, xp, q, p, children, point, next_in_leaf, count, centroid, mom,
               amin, amax, inv_s2, thr2, literal, vel, gq, h, stats):
    """Tree version of :func:`exact_forward`.

    stats[k] = (direct interactions, approximated interactions, nodes visited).
    A node is approximated when it holds more than one point and the box of
    its actual extent is farther than sqrt(thr2) from the query.
    """
    m = xq.shape[0]
    for k in prange(m):
        x0, x1, x2 = xq[k, 0], xq[k, 1], xq[k, 2]
        y0, y1, y2 = xp[k, 0], xp[k, 1], xp[k, 2]
        v0 = v1 = v2 = 0.0
        s0 = s1 = s2 = 0.0
        hh = 0.0
        n_direct = 0
        n_approx = 0
        n_visit = 0
        stack = np.empty(STACK_SIZE, np.int64)
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            nd = stack[top]
            n_visit += 1
            cnt = count[nd]
            if cnt == 0:
                continue
            j = point[nd]
            if cnt == 1:
                t = _forward_term(x0, x1, x2, y0, y1, y2, q[j, 0], q[j, 1], q[j, 2],
                                  p[j, 0], p[j, 1], p[j, 2], 1, inv_s2, False)
                n_direct += 1
            elif _min_dist2(amin, amax, nd, x0, x1, x2) > thr2:
                t = _forward_term(x0, x1, x2, y0, y1, y2,
                                  centroid[nd, 0], centroid[nd, 1], centroid[nd, 2],
                                  mom[nd, 0], mom[nd, 1], mom[nd, 2], cnt, inv_s2, literal)
                n_approx += 1
            elif j >= 0:
                # bucket of coincident points at maximum depth
                while j >= 0:
                    t = _forward_term(x0, x1, x2, y0, y1, y2, q[j, 0], q[j, 1], q[j, 2],
                                      p[j, 0], p[j, 1], p[j, 2], 1, inv_s2, False)
                    v0 += t[0]
                    v1 += t[1]
                    v2 += t[2]
                    s0 += t[3]
                    s1 += t[4]
                    s2 += t[5]
                    hh += t[6]
                    n_direct += 1
                    j = next_in_leaf[j]
                continue
            else:
                for o in range(7, -1, -1):
                    c = children[nd, o]
                    if c >= 0:
                        stack[top] = c
                        top += 1
                continue
            v0 += t[0]
            v1 += t[1]
            v2 += t[2]
            s0 += t[3]
            s1 += t[4]
            s2 += t[5]
            hh += t[6]
        vel[k, 0] = v0
        vel[k, 1] = v1
        vel[k, 2] = v2
        gq[k, 0] = s0
        gq[k, 1] = s1
        gq[k, 2] = s2
        h[k] = hh
        stats[k, 0] = n_direct
        stats[k, 1] = n_approx
        stats[k, 2] = n_visit


@njit(parallel=True, cache=True)
def bh_backward(q, p, a, b, children, point, next_in_leaf, count, centroid, mom,
                asum, bsum, amin, amax, inv_s2, thr2, literal, sq1, sq2, sp1, sp2, stats):
    n = q.shape[0]
    for k in prange(n):
        x0, x1, x2 = q[k, 0], q[k, 1], q[k, 2]
        y0, y1, y2 = p[k, 0], p[k, 1], p[k, 2]
        a0, a1, a2 = a[k, 0], a[k, 1], a[k, 2]
        b0, b1, b2 = b[k, 0], b[k, 1], b[k, 2]
        acc = np.zeros(12)
        n_direct = 0
        n_approx = 0
        n_visit = 0
        stack = np.empty(STACK_SIZE, np.int64)
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            nd = stack[top]
            n_visit += 1
            cnt = count[nd]
            if cnt == 0:
                continue
            j = point[nd]
            if cnt == 1:
                t = _backward_term(x0, x1, x2, y0, y1, y2, a0, a1, a2, b0, b1, b2,
                                   q[j, 0], q[j, 1], q[j, 2], p[j, 0], p[j, 1], p[j, 2],
                                   a[j, 0], a[j, 1], a[j, 2], b[j, 0], b[j, 1], b[j, 2],
                                   1, inv_s2, False)
                n_direct += 1
            elif _min_dist2(amin, amax, nd, x0, x1, x2) > thr2:
                t = _backward_term(x0, x1, x2, y0, y1, y2, a0, a1, a2, b0, b1, b2,
                                   centroid[nd, 0], centroid[nd, 1], centroid[nd, 2],
                                   mom[nd, 0], mom[nd, 1], mom[nd, 2],
                                   asum[nd, 0], asum[nd, 1], asum[nd, 2],
                                   bsum[nd, 0], bsum[nd, 1], bsum[nd, 2],
                                   cnt, inv_s2, literal)
                n_approx += 1
            elif j >= 0:
                while j >= 0:
                    t = _backward_term(x0, x1, x2, y0, y1, y2, a0, a1, a2, b0, b1, b2,
                                       q[j, 0], q[j, 1], q[j, 2], p[j, 0], p[j, 1], p[j, 2],
                                       a[j, 0], a[j, 1], a[j, 2], b[j, 0], b[j, 1], b[j, 2],
                                       1, inv_s2, False)
                    for c in range(12):
                        acc[c] += t[c]
                    n_direct += 1
                    j = next_in_leaf[j]
                continue
            else:
                for o in range(7, -1, -1):
                    c = children[nd, o]
                    if c >= 0:
                        stack[top] = c
                        top += 1
                continue
            for c in range(12):
                acc[c] += t[c]
        for c in range(3):
            sq1[k, c] = acc[c]
            sq2[k, c] = acc[3 + c]
            sp1[k, c] = acc[6 + c]
            sp2[k, c] = acc[9 + c]
        stats[k, 0] = n_direct
        stats[k, 1] = n_approx
        stats[k, 2] = n_visit
