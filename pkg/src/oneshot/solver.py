"""Projected gradient descent over the cube for finite sums of sample losses.

The reference implementation here works on arbitrary SampleFunction objects
and is the semantic contract: deterministic start at the cube center,
monotone backtracking line search, stop when the unit-step projected
gradient is small.  The batched solver kernels (numpy fallback and the
compiled extension) implement the same iteration for whole arrays of
machines; see ``_solvers_py`` / ``_solvers_c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError

CUBE_LO = -1.0
CUBE_HI = 1.0

# Shared line-search constants; the kernels replicate these exactly.
# The step size only ever shrinks: regrowing it lets the stiff directions
# overshoot again near the optimum, where the acceptance test loses
# resolution in float64 and the iterate cycles above tight tolerances.
ARMIJO_SLACK = 1e-12
ETA_MIN = 1e-20


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 10_000
    tolerance: float = 1e-8
    step_rule: str = "backtracking"  # or "fixed"
    step_size: float = 1.0  # only used by the fixed rule

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")
        if self.step_rule not in ("backtracking", "fixed"):
            raise DomainError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SolveResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    pg_norm: float


def _project(theta: np.ndarray) -> np.ndarray:
    return np.clip(theta, CUBE_LO, CUBE_HI)


def minimize_empirical(fs: Sequence, cfg: SolverConfig = SolverConfig(),
                       trace: list | None = None) -> SolveResult:
    """Minimize the mean of the given sample losses over [-1, 1]^d.

    Deterministic: fixed start at the cube center and a deterministic line
    search, so equal inputs always give equal outputs.  Non-convergence
    within ``max_iters`` is reported through the flag, never raised.
    ``trace``, if given, collects the objective value at each iterate.
    """
    if len(fs) == 0:
        raise DomainError("cannot minimize an empty list of functions")
    d = fs[0].d
    if any(f.d != d for f in fs):
        raise DimensionMismatch("sample functions have mixed dimensions")

    inv = 1.0 / len(fs)

    def value(theta):
        return sum(f.value(theta) for f in fs) * inv

    def grad(theta):
        g = np.zeros(d)
        for f in fs:
            g += f.grad(theta)
        return g * inv

    theta = np.zeros(d)
    eta = 1.0
    pg_norm = np.inf
    if trace is not None:
        trace.append(value(theta))
    for it in range(cfg.max_iters):
        g = grad(theta)
        pg = theta - _project(theta - g)
        pg_norm = float(np.linalg.norm(pg))
        if pg_norm <= cfg.tolerance:
            return SolveResult(theta, True, it, pg_norm)
        if cfg.step_rule == "fixed":
            theta = _project(theta - cfg.step_size * g)
        else:
            f_cur = value(theta)
            while True:
                cand = _project(theta - eta * g)
                step = cand - theta
                bound = (f_cur + float(g @ step) + float(step @ step) / (2.0 * eta)
                         + ARMIJO_SLACK * max(1.0, abs(f_cur)))
                if value(cand) <= bound or eta <= ETA_MIN:
                    break
                eta *= 0.5
            theta = cand
        if trace is not None:
            trace.append(value(theta))
    g = grad(theta)
    pg_norm = float(np.linalg.norm(theta - _project(theta - g)))
    return SolveResult(theta, pg_norm <= cfg.tolerance, cfg.max_iters, pg_norm)
