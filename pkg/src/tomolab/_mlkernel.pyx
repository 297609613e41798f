# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Newton solver for the ball-constrained log-likelihood.

Hot-loop twin of ``_mlkernel_py`` specialized to full-rank 3-d records;
``tomolab.backend`` selects it at import time when the extension built.
The per-record solve runs without the GIL so batch calls parallelize
across threads.
"""

from libc.math cimport fabs, log, sqrt

import numpy as np

cdef double EDGE = 1e-12
cdef double LAMBDA_SLACK = 1e-9
cdef int MAX_PHASE_SWITCHES = 4
cdef double NEG_INF = -1e308


cdef double _loglik(const double[:, ::1] obs, Py_ssize_t lo, Py_ssize_t n,
                    const double* x) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    for k in range(lo, lo + n):
        t = 1.0 + obs[k, 0] * x[0] + obs[k, 1] * x[1] + obs[k, 2] * x[2]
        if t <= 0.0:
            return NEG_INF
        acc += log(t)
    return acc


cdef void _grad(const double[:, ::1] obs, Py_ssize_t lo, Py_ssize_t n,
                const double* x, double* g) noexcept nogil:
    cdef double w
    cdef Py_ssize_t k
    g[0] = 0.0; g[1] = 0.0; g[2] = 0.0
    for k in range(lo, lo + n):
        w = 1.0 / (1.0 + obs[k, 0] * x[0] + obs[k, 1] * x[1] + obs[k, 2] * x[2])
        g[0] += obs[k, 0] * w
        g[1] += obs[k, 1] * w
        g[2] += obs[k, 2] * w


cdef void _hess(const double[:, ::1] obs, Py_ssize_t lo, Py_ssize_t n,
                const double* x, double* h) noexcept nogil:
    # h: 3x3 row-major, -sum of outer products weighted by 1/t^2
    cdef double w, a, b, c
    cdef Py_ssize_t k, i
    for i in range(9):
        h[i] = 0.0
    for k in range(lo, lo + n):
        w = 1.0 + obs[k, 0] * x[0] + obs[k, 1] * x[1] + obs[k, 2] * x[2]
        w = 1.0 / (w * w)
        a = obs[k, 0]; b = obs[k, 1]; c = obs[k, 2]
        h[0] -= w * a * a; h[1] -= w * a * b; h[2] -= w * a * c
        h[4] -= w * b * b; h[5] -= w * b * c
        h[8] -= w * c * c
    h[3] = h[1]; h[6] = h[2]; h[7] = h[5]


cdef bint _chol3(const double* a, double* l) noexcept nogil:
    # Cholesky of a symmetric 3x3; returns False if not positive definite.
    cdef double d
    if a[0] <= 0.0:
        return False
    l[0] = sqrt(a[0])
    l[1] = a[3] / l[0]
    l[2] = a[6] / l[0]
    d = a[4] - l[1] * l[1]
    if d <= 0.0:
        return False
    l[3] = sqrt(d)
    l[4] = (a[7] - l[2] * l[1]) / l[3]
    d = a[8] - l[2] * l[2] - l[4] * l[4]
    if d <= 0.0:
        return False
    l[5] = sqrt(d)
    return True


cdef void _chol3_solve(const double* l, const double* b, double* out) noexcept nogil:
    # Solve L L^T out = b with L = [l0 0 0; l1 l3 0; l2 l4 l5].
    cdef double y0, y1, y2
    y0 = b[0] / l[0]
    y1 = (b[1] - l[1] * y0) / l[3]
    y2 = (b[2] - l[2] * y0 - l[4] * y1) / l[5]
    out[2] = y2 / l[5]
    out[1] = (y1 - l[4] * out[2]) / l[3]
    out[0] = (y0 - l[1] * out[1] - l[2] * out[2]) / l[0]


cdef void _newton_direction3(const double* h, const double* g, double* p) noexcept nogil:
    # Ascent direction -H^{-1} g with ridge retries, mirroring the fallback.
    cdef double neg[9]
    cdef double l[6]
    cdef double ridge = 0.0, scale
    cdef Py_ssize_t i, attempt
    for i in range(9):
        neg[i] = -h[i]
    scale = neg[0] + neg[4] + neg[8]
    if scale < 1.0:
        scale = 1.0
    for attempt in range(3):
        neg[0] = -h[0] + ridge
        neg[4] = -h[4] + ridge
        neg[8] = -h[8] + ridge
        if _chol3(neg, l):
            _chol3_solve(l, g, p)
            return
        ridge = 1e-12 * scale if ridge == 0.0 else 10.0 * ridge
    p[0] = g[0]; p[1] = g[1]; p[2] = g[2]


cdef double _step_to_sphere(const double* x, const double* p) noexcept nogil:
    cdef double pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    cdef double xp, xx, disc
    if pp == 0.0:
        return 1e308
    xp = x[0] * p[0] + x[1] * p[1] + x[2] * p[2]
    xx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    disc = xp * xp + pp * (1.0 - xx)
    if disc <= 0.0:
        return 0.0
    return (-xp + sqrt(disc)) / pp


cdef void _tangent_basis3(const double* x, double* e1, double* e2) noexcept nogil:
    # Columns 2..3 of the Householder reflection sending e_1 to +/-x.
    cdef double v[3]
    cdef double vv, f1, f2
    v[0] = x[0] + (1.0 if x[0] >= 0.0 else -1.0)
    v[1] = x[1]
    v[2] = x[2]
    vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    f1 = 2.0 * v[1] / vv
    f2 = 2.0 * v[2] / vv
    e1[0] = -f1 * v[0]
    e1[1] = 1.0 - f1 * v[1]
    e1[2] = -f1 * v[2]
    e2[0] = -f2 * v[0]
    e2[1] = -f2 * v[1]
    e2[2] = 1.0 - f2 * v[2]


cdef bint _solve2(double a00, double a01, double a11, double b0, double b1,
                  double* y) noexcept nogil:
    # Solve the 2x2 SPD system A y = b; False if A is not PD.
    cdef double det = a00 * a11 - a01 * a01
    if a00 <= 0.0 or det <= 0.0:
        return False
    y[0] = (a11 * b0 - a01 * b1) / det
    y[1] = (a00 * b1 - a01 * b0) / det
    return True


cdef int _solve_record(const double[:, ::1] obs, Py_ssize_t lo, Py_ssize_t n,
                       double* x, double tol, double boundary_tol,
                       int max_iter, double shrink,
                       double* out_res, int* out_iters,
                       bint* out_boundary) noexcept nogil:
    cdef double g[3]
    cdef double h[9]
    cdef double p[3]
    cdef double e1[3]
    cdef double e2[3]
    cdef double cand[3]
    cdef double y[2]
    cdef double residual, norm, alpha, alpha0, current, floor, lam
    cdef double b0, b1, a00, a01, a11, cnorm, ln
    cdef int iters = 0, switches = 0
    cdef bint on_sphere = False, moved, stepped
    cdef Py_ssize_t i

    while iters < max_iter and switches < MAX_PHASE_SWITCHES:
        _grad(obs, lo, n, x, g)
        if not on_sphere:
            residual = fabs(g[0])
            if fabs(g[1]) > residual: residual = fabs(g[1])
            if fabs(g[2]) > residual: residual = fabs(g[2])
            norm = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
            if residual <= tol and norm < 1.0 - EDGE:
                out_res[0] = residual
                out_iters[0] = iters
                out_boundary[0] = False
                return 1
            if norm >= 1.0 - EDGE:
                x[0] /= norm; x[1] /= norm; x[2] /= norm
                on_sphere = True
                switches += 1
                continue
            iters += 1
            _hess(obs, lo, n, x, h)
            _newton_direction3(h, g, p)
            alpha0 = _step_to_sphere(x, p)
            if alpha0 > 1.0:
                alpha0 = 1.0
            current = _loglik(obs, lo, n, x)
            floor = current - 1e-14 * (1.0 + fabs(current))
            alpha = alpha0
            stepped = False
            while alpha > 1e-18:
                cand[0] = x[0] + alpha * p[0]
                cand[1] = x[1] + alpha * p[1]
                cand[2] = x[2] + alpha * p[2]
                if _loglik(obs, lo, n, cand) >= floor:
                    x[0] = cand[0]; x[1] = cand[1]; x[2] = cand[2]
                    stepped = True
                    break
                alpha *= shrink
            if not stepped:
                out_res[0] = residual
                out_iters[0] = iters
                out_boundary[0] = False
                return 1 if residual <= tol else 0
        else:
            lam = g[0] * x[0] + g[1] * x[1] + g[2] * x[2]
            residual = fabs(g[0] - lam * x[0])
            if fabs(g[1] - lam * x[1]) > residual: residual = fabs(g[1] - lam * x[1])
            if fabs(g[2] - lam * x[2]) > residual: residual = fabs(g[2] - lam * x[2])
            if residual <= boundary_tol:
                if lam >= -LAMBDA_SLACK:
                    out_res[0] = residual
                    out_iters[0] = iters
                    out_boundary[0] = True
                    return 1
                x[0] *= 1.0 - 1e-3
                x[1] *= 1.0 - 1e-3
                x[2] *= 1.0 - 1e-3
                on_sphere = False
                switches += 1
                continue
            iters += 1
            _hess(obs, lo, n, x, h)
            _tangent_basis3(x, e1, e2)
            # Riemannian Hessian in the tangent basis, negated for descent->ascent.
            a00 = -(e1[0] * (h[0] * e1[0] + h[1] * e1[1] + h[2] * e1[2])
                    + e1[1] * (h[3] * e1[0] + h[4] * e1[1] + h[5] * e1[2])
                    + e1[2] * (h[6] * e1[0] + h[7] * e1[1] + h[8] * e1[2])) + lam
            a01 = -(e1[0] * (h[0] * e2[0] + h[1] * e2[1] + h[2] * e2[2])
                    + e1[1] * (h[3] * e2[0] + h[4] * e2[1] + h[5] * e2[2])
                    + e1[2] * (h[6] * e2[0] + h[7] * e2[1] + h[8] * e2[2]))
            a11 = -(e2[0] * (h[0] * e2[0] + h[1] * e2[1] + h[2] * e2[2])
                    + e2[1] * (h[3] * e2[0] + h[4] * e2[1] + h[5] * e2[2])
                    + e2[2] * (h[6] * e2[0] + h[7] * e2[1] + h[8] * e2[2])) + lam
            b0 = g[0] * e1[0] + g[1] * e1[1] + g[2] * e1[2]
            b1 = g[0] * e2[0] + g[1] * e2[1] + g[2] * e2[2]
            if not _solve2(a00, a01, a11, b0, b1, y):
                y[0] = b0
                y[1] = b1
            p[0] = y[0] * e1[0] + y[1] * e2[0]
            p[1] = y[0] * e1[1] + y[1] * e2[1]
            p[2] = y[0] * e1[2] + y[1] * e2[2]
            current = _loglik(obs, lo, n, x)
            floor = current - 1e-14 * (1.0 + fabs(current))
            alpha = 1.0
            moved = False
            while alpha > 1e-18:
                cand[0] = x[0] + alpha * p[0]
                cand[1] = x[1] + alpha * p[1]
                cand[2] = x[2] + alpha * p[2]
                cnorm = sqrt(cand[0] * cand[0] + cand[1] * cand[1] + cand[2] * cand[2])
                cand[0] /= cnorm; cand[1] /= cnorm; cand[2] /= cnorm
                if _loglik(obs, lo, n, cand) >= floor:
                    x[0] = cand[0]; x[1] = cand[1]; x[2] = cand[2]
                    moved = True
                    break
                alpha *= shrink
            if not moved:
                out_res[0] = residual
                out_iters[0] = iters
                out_boundary[0] = True
                return 1 if residual <= boundary_tol else 0
    _grad(obs, lo, n, x, g)
    if on_sphere:
        lam = g[0] * x[0] + g[1] * x[1] + g[2] * x[2]
        residual = fabs(g[0] - lam * x[0])
        if fabs(g[1] - lam * x[1]) > residual: residual = fabs(g[1] - lam * x[1])
        if fabs(g[2] - lam * x[2]) > residual: residual = fabs(g[2] - lam * x[2])
    else:
        residual = fabs(g[0])
        if fabs(g[1]) > residual: residual = fabs(g[1])
        if fabs(g[2]) > residual: residual = fabs(g[2])
    out_res[0] = residual
    out_iters[0] = iters
    out_boundary[0] = on_sphere
    return 0


def solve_batch(obs, x0, double tol, double boundary_tol, int max_iter, double shrink):
    """Solve a stack of records; obs is (M, N, 3), x0 is (M, 3)."""
    obs_arr = np.ascontiguousarray(obs, dtype=np.float64)
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    if obs_arr.ndim != 3 or obs_arr.shape[2] != 3:
        raise ValueError("obs must be (M, N, 3)")
    cdef Py_ssize_t m = obs_arr.shape[0]
    cdef Py_ssize_t n = obs_arr.shape[1]
    flat = obs_arr.reshape(m * n if m * n else 0, 3)
    out_x = np.array(x0_arr, dtype=np.float64, copy=True)
    out_conv = np.zeros(m, dtype=np.uint8)
    out_iters = np.zeros(m, dtype=np.int32)
    out_res = np.zeros(m, dtype=np.float64)
    out_boundary = np.zeros(m, dtype=np.uint8)
    cdef double[:, ::1] obs_mv = flat
    cdef double[:, ::1] x_mv = out_x
    cdef unsigned char[::1] conv_mv = out_conv
    cdef int[::1] iters_mv = out_iters
    cdef double[::1] res_mv = out_res
    cdef unsigned char[::1] bnd_mv = out_boundary
    cdef Py_ssize_t i
    cdef double res
    cdef int iters
    cdef bint bnd
    with nogil:
        for i in range(m):
            conv_mv[i] = _solve_record(
                obs_mv, i * n, n, &x_mv[i, 0], tol, boundary_tol,
                max_iter, shrink, &res, &iters, &bnd,
            )
            res_mv[i] = res
            iters_mv[i] = iters
            bnd_mv[i] = bnd
    return (
        out_x,
        out_conv.astype(bool),
        out_iters,
        out_res,
        out_boundary.astype(bool),
    )


def solve(obs, x0, double tol, double boundary_tol, int max_iter, double shrink):
    """Single-record variant matching ``_mlkernel_py.solve``."""
    obs_arr = np.ascontiguousarray(obs, dtype=np.float64)
    if obs_arr.ndim != 2 or obs_arr.shape[1] != 3:
        raise ValueError("obs must be (N, 3)")
    xs, conv, iters, res, bnd = solve_batch(
        obs_arr[None, :, :], np.asarray(x0, dtype=np.float64)[None, :],
        tol, boundary_tol, max_iter, shrink,
    )
    return xs[0], bool(conv[0]), int(iters[0]), float(res[0]), bool(bnd[0])
