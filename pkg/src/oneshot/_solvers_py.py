"""Pure-numpy batched solver kernels (fallback for the compiled extension).

Each kernel runs the same projected-gradient iteration as
``solver.minimize_empirical`` for m independent machines at once: start at
the cube center, backtracking with the quadratic upper-model test, stop on
the unit-step projected gradient.  Machines that converge are frozen while
the rest keep iterating.
"""

from __future__ import annotations

import numpy as np

from .solver import ARMIJO_SLACK, ETA_MIN

CUBE_LO = -1.0
CUBE_HI = 1.0


def _pgd(m, d, value_at, grad_at, max_iters, tol, backtracking, step_size):
    """Generic masked batch PGD.

    value_at(idx, theta) -> (k,) and grad_at(idx, theta) -> (k, d) evaluate
    the per-machine objective for the machines listed in ``idx``.
    """
    theta = np.zeros((m, d))
    eta = np.ones(m)
    converged = np.zeros(m, dtype=bool)
    active = np.arange(m)
    tol2 = tol * tol

    for _ in range(max_iters):
        g = grad_at(active, theta[active])
        pg = theta[active] - np.clip(theta[active] - g, CUBE_LO, CUBE_HI)
        done = np.einsum("kd,kd->k", pg, pg) <= tol2
        if done.any():
            converged[active[done]] = True
            active = active[~done]
            g = g[~done]
        if active.size == 0:
            break
        if not backtracking:
            theta[active] = np.clip(theta[active] - step_size * g,
                                    CUBE_LO, CUBE_HI)
            continue
        f_cur = value_at(active, theta[active])
        pending = np.arange(active.size)
        new_theta = theta[active].copy()
        while pending.size:
            rows = active[pending]
            et = eta[rows][:, None]
            cand = np.clip(theta[rows] - et * g[pending], CUBE_LO, CUBE_HI)
            step = cand - theta[rows]
            bound = (f_cur[pending]
                     + np.einsum("kd,kd->k", g[pending], step)
                     + np.einsum("kd,kd->k", step, step) / (2.0 * et[:, 0])
                     + ARMIJO_SLACK * np.maximum(1.0, np.abs(f_cur[pending])))
            ok = (value_at(rows, cand) <= bound) | (eta[rows] <= ETA_MIN)
            new_theta[pending[ok]] = cand[ok]
            eta[rows[~ok]] *= 0.5
            pending = pending[~ok]
        theta[active] = new_theta
    if active.size:
        g = grad_at(active, theta[active])
        pg = theta[active] - np.clip(theta[active] - g, CUBE_LO, CUBE_HI)
        converged[active] = np.einsum("kd,kd->k", pg, pg) <= tol2
    return theta, converged


def quad_pgd(h, lin, max_iters, tol, backtracking=True, step_size=1.0):
    """Minimize 0.5 theta'H theta - lin'theta over the cube, per machine.

    h: (m, d, d) symmetric PSD, lin: (m, d).
    """
    h = np.ascontiguousarray(h, dtype=float)
    lin = np.ascontiguousarray(lin, dtype=float)
    m, d = lin.shape

    def value_at(idx, th):
        hth = np.einsum("kde,ke->kd", h[idx], th)
        return 0.5 * np.einsum("kd,kd->k", th, hth) - np.einsum("kd,kd->k", lin[idx], th)

    def grad_at(idx, th):
        return np.einsum("kde,ke->kd", h[idx], th) - lin[idx]

    return _pgd(m, d, value_at, grad_at, max_iters, tol, backtracking, step_size)


def logistic_pgd(x, y, max_iters, tol, backtracking=True, step_size=1.0):
    """Minimize the mean logistic loss over each machine's samples.

    x: (m, n, d), y: (m, n) with labels in {-1, +1}.
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    m, n, d = x.shape

    def value_at(idx, th):
        z = -y[idx] * np.einsum("knd,kd->kn", x[idx], th)
        loss = np.where(z > 30.0, z, np.log1p(np.exp(np.minimum(z, 30.0))))
        return loss.mean(axis=1)

    def grad_at(idx, th):
        z = -y[idx] * np.einsum("knd,kd->kn", x[idx], th)
        sig = 0.5 * (1.0 + np.tanh(0.5 * z))
        return np.einsum("kn,knd->kd", -y[idx] * sig, x[idx]) / n

    return _pgd(m, d, value_at, grad_at, max_iters, tol, backtracking, step_size)
