# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batched solver kernels.

Same iteration as the numpy fallback in ``_solvers_py``, but with a
per-machine loop that exits early once a machine converges instead of
carrying it through full-width array passes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt, tanh

cnp.import_array()

cdef double CUBE_LO = -1.0
cdef double CUBE_HI = 1.0
cdef double ARMIJO_SLACK = 1e-12
cdef double ETA_MIN = 1e-20
DEF MAX_D = 8


cdef inline double _clip(double v) nogil:
    if v < CUBE_LO:
        return CUBE_LO
    if v > CUBE_HI:
        return CUBE_HI
    return v


cdef inline double _quad_value(const double* h, const double* lin,
                               const double* th, int d) nogil:
    cdef double acc = 0.0
    cdef double hth
    cdef int i, j
    for i in range(d):
        hth = 0.0
        for j in range(d):
            hth += h[i * d + j] * th[j]
        acc += 0.5 * th[i] * hth - lin[i] * th[i]
    return acc


cdef inline void _quad_grad(const double* h, const double* lin,
                            const double* th, double* g, int d) nogil:
    cdef int i, j
    for i in range(d):
        g[i] = -lin[i]
        for j in range(d):
            g[i] += h[i * d + j] * th[j]


cdef inline double _sigmoid(double z) nogil:
    return 0.5 * (1.0 + tanh(0.5 * z))


cdef inline double _log1pexp(double z) nogil:
    if z > 30.0:
        return z
    return log1p(exp(z))


cdef inline double _logistic_value(const double* x, const double* y,
                                   const double* th, int n, int d) nogil:
    cdef double acc = 0.0
    cdef double z
    cdef int j, k
    for j in range(n):
        z = 0.0
        for k in range(d):
            z += x[j * d + k] * th[k]
        acc += _log1pexp(-y[j] * z)
    return acc / n


cdef inline void _logistic_grad(const double* x, const double* y,
                                const double* th, double* g, int n, int d) nogil:
    cdef double z, coeff
    cdef int j, k
    for k in range(d):
        g[k] = 0.0
    for j in range(n):
        z = 0.0
        for k in range(d):
            z += x[j * d + k] * th[k]
        coeff = -y[j] * _sigmoid(-y[j] * z)
        for k in range(d):
            g[k] += coeff * x[j * d + k]
    for k in range(d):
        g[k] /= n


cdef int _pgd_one(const double* h, const double* lin, const double* x,
                  const double* y, int n, int d, bint quadratic,
                  int max_iters, double tol, bint backtracking,
                  double step_size, double* theta) nogil:
    """Run PGD for one machine; returns 1 on convergence."""
    cdef double g[MAX_D]
    cdef double cand[MAX_D]
    cdef double eta = 1.0
    cdef double tol2 = tol * tol
    cdef double pg2, f_cur, f_cand, bound, step, gdot, s2
    cdef int it, k

    for k in range(d):
        theta[k] = 0.0
    for it in range(max_iters):
        if quadratic:
            _quad_grad(h, lin, theta, g, d)
        else:
            _logistic_grad(x, y, theta, g, n, d)
        pg2 = 0.0
        for k in range(d):
            step = theta[k] - _clip(theta[k] - g[k])
            pg2 += step * step
        if pg2 <= tol2:
            return 1
        if not backtracking:
            for k in range(d):
                theta[k] = _clip(theta[k] - step_size * g[k])
            continue
        if quadratic:
            f_cur = _quad_value(h, lin, theta, d)
        else:
            f_cur = _logistic_value(x, y, theta, n, d)
        while True:
            gdot = 0.0
            s2 = 0.0
            for k in range(d):
                cand[k] = _clip(theta[k] - eta * g[k])
                step = cand[k] - theta[k]
                gdot += g[k] * step
                s2 += step * step
            bound = f_cur + gdot + s2 / (2.0 * eta)
            if fabs(f_cur) > 1.0:
                bound += ARMIJO_SLACK * fabs(f_cur)
            else:
                bound += ARMIJO_SLACK
            if quadratic:
                f_cand = _quad_value(h, lin, cand, d)
            else:
                f_cand = _logistic_value(x, y, cand, n, d)
            if f_cand <= bound or eta <= ETA_MIN:
                break
            eta *= 0.5
        for k in range(d):
            theta[k] = cand[k]
    # final projected-gradient check at the last iterate
    if quadratic:
        _quad_grad(h, lin, theta, g, d)
    else:
        _logistic_grad(x, y, theta, g, n, d)
    pg2 = 0.0
    for k in range(d):
        step = theta[k] - _clip(theta[k] - g[k])
        pg2 += step * step
    return 1 if pg2 <= tol2 else 0


def quad_pgd(h, lin, int max_iters, double tol, bint backtracking=True,
             double step_size=1.0):
    """Minimize 0.5 theta'H theta - lin'theta over the cube, per machine."""
    cdef double[:, :, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[:, ::1] lv = np.ascontiguousarray(lin, dtype=np.float64)
    cdef Py_ssize_t m = lv.shape[0]
    cdef int d = <int> lv.shape[1]
    if d > MAX_D:
        raise ValueError(f"compiled kernel supports d <= {MAX_D}")
    theta_arr = np.zeros((m, d))
    conv_arr = np.zeros(m, dtype=np.uint8)
    cdef double[:, ::1] tv = theta_arr
    cdef cnp.uint8_t[::1] cv = conv_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            cv[i] = <cnp.uint8_t> _pgd_one(&hv[i, 0, 0], &lv[i, 0], NULL, NULL,
                                           0, d, True, max_iters, tol,
                                           backtracking, step_size, &tv[i, 0])
    return theta_arr, conv_arr.astype(bool)


def logistic_pgd(x, y, int max_iters, double tol, bint backtracking=True,
                 double step_size=1.0):
    """Minimize the mean logistic loss over each machine's samples."""
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0]
    cdef int n = <int> xv.shape[1]
    cdef int d = <int> xv.shape[2]
    if d > MAX_D:
        raise ValueError(f"compiled kernel supports d <= {MAX_D}")
    theta_arr = np.zeros((m, d))
    conv_arr = np.zeros(m, dtype=np.uint8)
    cdef double[:, ::1] tv = theta_arr
    cdef cnp.uint8_t[::1] cv = conv_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            cv[i] = <cnp.uint8_t> _pgd_one(NULL, NULL, &xv[i, 0, 0], &yv[i, 0],
                                           n, d, False, max_iters, tol,
                                           backtracking, step_size, &tv[i, 0])
    return theta_arr, conv_arr.astype(bool)
