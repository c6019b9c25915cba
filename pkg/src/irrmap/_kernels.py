"""Compiled multi-start Newton for two theta-series equations on the torus.

Every equation solved by the package is a linear form in the full theta basis.
Since the characteristics of distinct basis functions are distinct, two such
forms are described by a dense coefficient array over the frequency box

    g_k(z) = sum_{i1, i2} C[k, i1, i2] exp(2 pi i (i1' z1 + i2' z2 / d)),

with i1' = i1 - o1 and i2' = i2 - o2. The kernel only ever evaluates at
points whose Omega-coordinates lie in [-1/2, 1/2), where the truncated box is
certified; the lattice factor of automorphy is never needed because zeros are
lattice invariant.
"""
from __future__ import annotations

import os

import numba
import numpy as np

TWO_PI = 2.0 * np.pi

CONVERGED = 0
EXCLUDED = 1
NOT_CONVERGED = 2
SINGULAR = 3
KNOWN = 4

KNOWN_RADIUS = 1e-3

SWITCH_STEP = 1e-4
CAPTURE_RADIUS = 0.1
CAPTURE_MATCH = 0.25


def configure_threads() -> int:
    """Apply IRRMAP_THREADS (default: all logical cores) to the numba pool."""
    limit = numba.config.NUMBA_NUM_THREADS
    raw = os.environ.get("IRRMAP_THREADS")
    n = limit
    if raw:
        try:
            n = max(1, min(limit, int(raw)))
        except ValueError:
            n = limit
    numba.set_num_threads(n)
    return n


@numba.njit(cache=True)
def _to_z(x, Om, d):
    u1 = x[0] - np.floor(x[0] + 0.5)
    u2 = x[1] - np.floor(x[1] + 0.5)
    z1 = Om[0, 0] * u1 + Om[0, 1] * u2 + x[2]
    z2 = Om[1, 0] * u1 + Om[1, 1] * u2 + d * x[3]
    return z1, z2


@numba.njit(cache=True)
def _fill_exponentials(z1, z2, o1, o2, d, e1, e2):
    w1 = np.exp(1j * TWO_PI * z1)
    e1[0] = np.exp(1j * TWO_PI * z1 * (-o1))
    for j in range(1, e1.shape[0]):
        e1[j] = e1[j - 1] * w1
    w2 = np.exp(1j * TWO_PI * z2 / d)
    e2[0] = np.exp(1j * TWO_PI * z2 * (-o2) / d)
    for j in range(1, e2.shape[0]):
        e2[j] = e2[j - 1] * w2


@numba.njit(cache=True, fastmath=True)
def _evaluate(C, o1, o2, d, e1, e2, g, J):
    n1 = C.shape[1]
    n2 = C.shape[2]
    for k in range(C.shape[0]):
        acc = 0j
        acc1 = 0j
        acc2 = 0j
        for i1 in range(n1):
            t = 0j
            t2 = 0j
            for i2 in range(n2):
                c = C[k, i1, i2] * e2[i2]
                t += c
                t2 += c * (i2 - o2)
            t *= e1[i1]
            acc += t
            acc1 += t * (i1 - o1)
            acc2 += t2 * e1[i1]
        g[k] = acc
        J[k, 0] = 1j * TWO_PI * acc1
        J[k, 1] = 1j * TWO_PI * acc2 / d


@numba.njit(cache=True)
def _relative_residual(C, e1, e2):
    worst = 0.0
    for k in range(C.shape[0]):
        acc = 0j
        scale = 0.0
        for i1 in range(C.shape[1]):
            for i2 in range(C.shape[2]):
                c = C[k, i1, i2] * e1[i1] * e2[i2]
                acc += c
                scale += abs(c)
        r = abs(acc) / scale if scale > 0 else np.inf
        if r > worst:
            worst = r
    return worst


@numba.njit(cache=True)
def _wrapped_distance(x, y):
    s = 0.0
    for i in range(4):
        t = x[i] - y[i]
        t -= np.floor(t + 0.5)
        s += t * t
    return np.sqrt(s)


@numba.njit(cache=True)
def _newton_one(x0, Cf, p1, p2, C, o1, o2, Om, Yinv, d, excluded, orders, excl_radius, max_iter,
                step_tol, step_cap, known, x, f1, f2, e1, e2, g, J):
    # iterate on the cheap box Cf until steps are small, then on the certified box C;
    # a contracting iterate next to an already polished root stops early (x = root index)
    for i in range(4):
        x[i] = x0[i]
    fine = False
    for it in range(max_iter):
        z1, z2 = _to_z(x, Om, d)
        if fine:
            _fill_exponentials(z1, z2, o1, o2, d, e1, e2)
            _evaluate(C, o1, o2, d, e1, e2, g, J)
        else:
            _fill_exponentials(z1, z2, p1, p2, d, f1, f2)
            _evaluate(Cf, p1, p2, d, f1, f2, g, J)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        jn = abs(J[0, 0]) + abs(J[0, 1]) + abs(J[1, 0]) + abs(J[1, 1])
        if abs(det) <= 1e-300 or abs(det) < 1e-14 * jn * jn:
            return SINGULAR, it
        dz1 = -(J[1, 1] * g[0] - J[0, 1] * g[1]) / det
        dz2 = -(-J[1, 0] * g[0] + J[0, 0] * g[1]) / det
        du1 = Yinv[0, 0] * dz1.imag + Yinv[0, 1] * dz2.imag
        du2 = Yinv[1, 0] * dz1.imag + Yinv[1, 1] * dz2.imag
        dv1 = dz1.real - Om[0, 0].real * du1 - Om[0, 1].real * du2
        dv2 = (dz2.real - Om[1, 0].real * du1 - Om[1, 1].real * du2) / d
        norm = np.sqrt(du1 * du1 + du2 * du2 + dv1 * dv1 + dv2 * dv2)
        # Near a zero of order m > 1 of both equations, Newton moves by
        # -(x - p) / m and creeps in linearly; stop as soon as that shows.
        for b in range(excluded.shape[0]):
            m = orders[b]
            if m < 2:
                continue
            w0 = x[0] - excluded[b, 0]
            w1 = x[1] - excluded[b, 1]
            w2 = x[2] - excluded[b, 2]
            w3 = x[3] - excluded[b, 3]
            w0 -= np.floor(w0 + 0.5)
            w1 -= np.floor(w1 + 0.5)
            w2 -= np.floor(w2 + 0.5)
            w3 -= np.floor(w3 + 0.5)
            r = np.sqrt(w0 * w0 + w1 * w1 + w2 * w2 + w3 * w3)
            if r < CAPTURE_RADIUS:
                e0 = du1 + w0 / m
                e1_ = du2 + w1 / m
                e2_ = dv1 + w2 / m
                e3 = dv2 + w3 / m
                if np.sqrt(e0 * e0 + e1_ * e1_ + e2_ * e2_ + e3 * e3) < CAPTURE_MATCH * r / m:
                    return EXCLUDED, it + 1
        if norm > step_cap:
            f = step_cap / norm
            du1 *= f
            du2 *= f
            dv1 *= f
            dv2 *= f
        x[0] += du1
        x[1] += du2
        x[2] += dv1
        x[3] += dv2
        for i in range(4):
            x[i] -= np.floor(x[i])
        for b in range(excluded.shape[0]):
            if _wrapped_distance(x, excluded[b]) < excl_radius:
                return EXCLUDED, it + 1
        if norm < KNOWN_RADIUS:
            for b in range(known.shape[0]):
                if _wrapped_distance(x, known[b]) < KNOWN_RADIUS:
                    x[0] = b
                    return KNOWN, it + 1
        if fine and norm < step_tol:
            return CONVERGED, it + 1
        if norm < SWITCH_STEP:
            fine = True
    return NOT_CONVERGED, max_iter


@numba.njit(cache=True, parallel=True)
def newton_batch(seeds, Cf, p1, p2, C, o1, o2, Om, Yinv, d, excluded, orders, excl_radius,
                 max_iter, step_tol, step_cap, known):
    """Run Newton from every seed; returns (points, status, iterations, residual).

    Seeds that stop at a row of ``known`` get status KNOWN, that row as point
    and residual 0 (the caller holds the residual of the known root).
    """
    n = seeds.shape[0]
    out = np.empty((n, 4))
    status = np.empty(n, dtype=np.int64)
    iters = np.empty(n, dtype=np.int64)
    resid = np.full(n, np.inf)
    n1 = C.shape[1]
    n2 = C.shape[2]
    for s in numba.prange(n):
        x = np.empty(4)
        f1 = np.empty(Cf.shape[1], dtype=np.complex128)
        f2 = np.empty(Cf.shape[2], dtype=np.complex128)
        e1 = np.empty(n1, dtype=np.complex128)
        e2 = np.empty(n2, dtype=np.complex128)
        g = np.empty(2, dtype=np.complex128)
        J = np.empty((2, 2), dtype=np.complex128)
        st, it = _newton_one(seeds[s], Cf, p1, p2, C, o1, o2, Om, Yinv, d, excluded, orders,
                             excl_radius, max_iter, step_tol, step_cap, known, x, f1, f2, e1, e2,
                             g, J)
        if st == KNOWN:
            b = int(x[0])
            for i in range(4):
                x[i] = known[b, i]
            resid[s] = 0.0
        if st == CONVERGED:
            z1, z2 = _to_z(x, Om, d)
            _fill_exponentials(z1, z2, o1, o2, d, e1, e2)
            resid[s] = _relative_residual(C, e1, e2)
        for i in range(4):
            out[s, i] = x[i]
        status[s] = st
        iters[s] = it
    return out, status, iters, resid


@numba.njit(cache=True)
def residuals_at(points, C, o1, o2, Om, d):
    """Relative residual of both equations at each torus point."""
    n = points.shape[0]
    out = np.empty(n)
    e1 = np.empty(C.shape[1], dtype=np.complex128)
    e2 = np.empty(C.shape[2], dtype=np.complex128)
    for s in range(n):
        z1, z2 = _to_z(points[s], Om, d)
        _fill_exponentials(z1, z2, o1, o2, d, e1, e2)
        out[s] = _relative_residual(C, e1, e2)
    return out
