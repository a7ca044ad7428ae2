"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set ``ONESHOT_KERNELS=py`` to force the pure-Python kernels, e.g. for
debugging or benchmarking (see benchmarks/bench_solvers.py).
"""

from __future__ import annotations

import os

from . import _solvers_py
from .solver import SolverConfig

_impl = _solvers_py
_name = "python"

if os.environ.get("ONESHOT_KERNELS", "").lower() not in ("py", "python"):
    try:
        from . import _solvers_c  # compiled at install time; optional

        _impl = _solvers_c
        _name = "compiled"
    except ImportError:
        pass


def kernel_backend() -> str:
    """Name of the active solver backend: "compiled" or "python"."""
    return _name


def quad_pgd(h, lin, cfg: SolverConfig):
    return _impl.quad_pgd(h, lin, cfg.max_iters, cfg.tolerance,
                          cfg.step_rule == "backtracking", cfg.step_size)


def logistic_pgd(x, y, cfg: SolverConfig):
    return _impl.logistic_pgd(x, y, cfg.max_iters, cfg.tolerance,
                              cfg.step_rule == "backtracking", cfg.step_size)
