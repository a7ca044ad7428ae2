"""Runtime invariant suite behind the ``selfcheck`` CLI command.

Each check returns (name, passed, detail).  The full suite draws the same
sample sizes as the test suite's property tests; ``fast=True`` shrinks
them for a smoke run.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from . import rngs
from .codec import (batch_decode, batch_encode, decode, dequantize, encode,
                    layout, quantize, quantizer_for_level, Signal)
from .functions import (make_distribution, probe_convexity,
                        probe_gradient_consistency, probe_model_bounds,
                        probe_strong_convexity)
from .multigrid import (GridAddress, compute_params, level_probabilities,
                        refine_points, sample_level)
from .multires import run_multires


def _distributions():
    return [
        make_distribution("two_cubic", 1),
        make_distribution("quadratic_bowl", 2,
                          centers=[[-0.4, 0.2], [0.3, -0.3]], weights=[0.5, 0.5]),
        make_distribution("ridge", 2, theta_star=[0.3, 0.7]),
        make_distribution("logistic", 2, theta_star=[0.4, 0.6]),
    ]


def check_gradient_consistency(fast=False):
    trials = 100 if fast else 1000
    worst = 0.0
    for dist in _distributions():
        rng = rngs.generator(11, 1)
        worst = max(worst, probe_gradient_consistency(dist, rng, trials=trials))
    return "gradient finite-difference consistency", worst <= 1e-5, f"max rel err {worst:.2e}"


def check_convexity(fast=False):
    trials = 1000 if fast else 10_000
    worst = -np.inf
    for dist in _distributions():
        rng = rngs.generator(12, 1)
        worst = max(worst, probe_convexity(dist, rng, trials=trials))
    return "sample convexity", worst <= 1e-9, f"max violation {worst:.2e}"


def check_model_bounds(fast=False):
    trials = 1000 if fast else 10_000
    worst = 0.0
    for dist in _distributions():
        if dist.assumption_exempt:
            continue
        rng = rngs.generator(13, 1)
        ratios = probe_model_bounds(dist, rng, trials=trials)
        worst = max(worst, max(ratios.values()))
    return "bounded/Lipschitz gradients (non-exempt)", worst <= 1.0 + 1e-9, \
        f"max bound ratio {worst:.6f}"


def check_strong_convexity(fast=False):
    dist = make_distribution("quadratic_bowl", 2,
                             centers=[[-0.4, 0.2], [0.3, -0.3]])
    rng = rngs.generator(14, 1)
    slack = probe_strong_convexity(dist, rng, trials=100 if fast else 1000)
    return "declared curvature constant", slack >= -1e-9, f"min slack {slack:.2e}"


def check_codec_roundtrip(fast=False):
    trials = 2000 if fast else 100_000
    params = compute_params(2, 10_000, 1, polylog_factor=1.0)
    lay = layout(params)
    rng = rngs.generator(15, 1)
    m = trials
    levels = sample_level(rng, params, size=m)
    s_index = rng.integers(0, lay.n_axis, size=(m, 2))
    index = np.floor(rng.random((m, 2)) * np.exp2(levels)[:, None]).astype(np.int64)
    steps = np.array(lay.steps)[levels]
    delta_q = np.floor(rng.random((m, 2)) * steps[:, None]).astype(np.int64)
    words, lens = batch_encode(params, s_index, levels, index, delta_q)
    rs, rl, ri, rq = batch_decode(params, words, lens)
    ok = (np.array_equal(rs, s_index) and np.array_equal(rl, levels)
          and np.array_equal(ri, index) and np.array_equal(rq, delta_q))
    return "codec round trip", ok, f"{m} signals"


def check_quantizer_error(fast=False):
    trials = 2000 if fast else 100_000
    params = compute_params(2, 10_000, 1, polylog_factor=1.0)
    rng = rngs.generator(16, 1)
    worst = 0.0
    for level in range(params.t + 1):
        spec = quantizer_for_level(params, level)
        v = rng.uniform(spec.lo, spec.hi, size=trials)
        err = np.abs(dequantize(spec, quantize(spec, v)) - v).max()
        worst = max(worst, err / (spec.acc / 2.0))
    return "quantizer reconstruction error", worst <= 1.0 + 1e-9, \
        f"max err / (acc/2) = {worst:.6f}"


def check_level_sampling(fast=False):
    draws = 100_000 if fast else 1_000_000
    params = compute_params(1, 100_000, 1, polylog_factor=1.0)
    rng = rngs.generator(17, 1)
    levels = sample_level(rng, params, size=draws)
    observed = np.bincount(levels, minlength=params.t + 1)
    expected = level_probabilities(params) * draws
    stat, p = stats.chisquare(observed, expected)
    return "refinement-level sampling law", p > 0.001, f"chi2 p={p:.4f}"


def check_grid_geometry(fast=False):
    # params with an interior refinement cube: resolution 0.5, s at -0.25
    params = compute_params(1, 64, 1024, polylog_factor=2.0 ** -12)
    s = np.array([-0.25])
    pts = []
    for lvl in (params.t,):
        for i in range(1 << lvl):
            pts.append(refine_points(s, params, np.array(lvl), np.array([i]))[0])
    gaps = np.diff(sorted(pts))
    want = 2.0 * params.h / (1 << params.t)
    ok = np.all(np.abs(gaps - want) < 1e-12)
    return "refinement grid spacing", bool(ok), f"cell {want:.4f}"


def check_determinism(fast=False):
    dist = make_distribution("two_cubic", 1)
    r1 = run_multires(dist, 500, 1, master_seed=99, polylog_factor=1.0)
    r2 = run_multires(dist, 500, 1, master_seed=99, polylog_factor=1.0)
    ok = (np.array_equal(r1.theta_hat, r2.theta_hat)
          and r1.total_bits == r2.total_bits)
    return "seeded rerun determinism", ok, ""


def check_params_monotone(fast=False):
    deltas = [compute_params(2, m, 1, polylog_factor=1.0).delta
              for m in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)]
    ok = all(b <= a for a, b in zip(deltas, deltas[1:]))
    return "cell size monotone in machine count", ok, f"deltas {deltas}"


ALL_CHECKS = [
    check_gradient_consistency,
    check_convexity,
    check_model_bounds,
    check_strong_convexity,
    check_codec_roundtrip,
    check_quantizer_error,
    check_level_sampling,
    check_grid_geometry,
    check_determinism,
    check_params_monotone,
]


def run_all(fast: bool = False):
    return [check(fast) for check in ALL_CHECKS]
