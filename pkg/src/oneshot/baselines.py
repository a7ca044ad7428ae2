"""Comparison estimators: minimizer averaging, the single-axis derivative
grid, and the one-bit randomized estimator.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import rngs
from .codec import bit_quantizer, count_out_of_range, dequantize, quantize
from .errors import DimensionMismatch, DomainError
from .functions import FunctionDistribution
from .results import EstimateResult
from .solver import SolverConfig


def avgm(dist: FunctionDistribution, m: int, n: int, *,
         rng: Optional[np.random.Generator] = None, master_seed: int = 0,
         solver_cfg: SolverConfig = SolverConfig()) -> EstimateResult:
    """Average of the machines' empirical minimizers.

    Each machine solves over all n of its samples and transmits the
    minimizer at ceil(log2(mn)) bits per coordinate; the server averages
    the dequantized vectors.  With a single sample per machine the average
    settles on the mean of the per-sample minimizers, which need not be
    anywhere near the minimizer of the expected loss.
    """
    if m < 1:
        raise DomainError("need at least one machine")
    if rng is None:
        rng = rngs.generator(master_seed)
    desc = dist.sample_batch(rng, m, (n,))
    theta, converged = dist.batch_minimize(desc, 0, solver_cfg)

    bits_per_coord = max(1, math.ceil(math.log2(m * n)))
    spec = bit_quantizer(bits_per_coord)
    q = quantize(spec, theta)
    point = dequantize(spec, q).mean(axis=0)

    native = dist.to_native(point)
    error = None
    if dist.known_minimizer is not None:
        error = float(np.linalg.norm(native - dist.known_minimizer))
    return EstimateResult(
        estimator="avgm", theta_hat=native, error=error, m=m, n=n,
        total_bits=m * dist.d * bits_per_coord,
        bits_per_signal=dist.d * bits_per_coord,
        diagnostics={"nonconverged": int((~converged).sum())})


def naive_grid_size(m: int) -> int:
    """Grid size ceil(m^(1/3) / log2(m)) of the single-axis estimator."""
    return max(1, math.ceil(m ** (1.0 / 3.0) / math.log2(m)))


def naive_1d(dist: FunctionDistribution, m: int, *,
             rng: Optional[np.random.Generator] = None, master_seed: int = 0,
             exact_derivative: bool = False) -> EstimateResult:
    """Randomized derivative grid for one-dimensional problems (n = 1).

    Machines pick a uniform cell center of a k-point grid over the native
    interval (k = ceil(m^(1/3)/log2 m)) and send the derivative of their
    sample there, quantized to ceil(log2 m) bits on [-1, 1].  The server
    averages derivatives per grid point and returns the covered point with
    the smallest average magnitude (ties toward the smaller coordinate).

    ``exact_derivative`` swaps the sampled, quantized derivatives for the
    analytic expected-loss derivative, as an oracle for equivalence tests.
    """
    if dist.d != 1:
        raise DimensionMismatch("the derivative-grid estimator requires d = 1")
    if m < 2:
        raise DomainError("need at least two machines")
    if rng is None:
        rng = rngs.generator(master_seed)

    k = naive_grid_size(m)
    span = dist.native_span
    grid_native = dist.native_lo + (np.arange(k) + 0.5) * span / k
    grid_internal = dist.to_internal(grid_native)

    picks = rng.integers(0, k, size=m)
    clamped = 0
    if exact_derivative:
        deriv = np.array([dist.population_grad(np.array([x]))[0]
                          for x in grid_internal]) * (2.0 / span)
        sums = np.bincount(picks, weights=deriv[picks], minlength=k)
    else:
        desc = dist.sample_batch(rng, m, (1,))
        g_int = dist.batch_grad(desc, 0, grid_internal[picks][:, None])
        g_nat = g_int[:, 0] * (2.0 / span)
        spec = bit_quantizer(max(1, math.ceil(math.log2(m))))
        clamped = count_out_of_range(spec, g_nat)
        g_rx = dequantize(spec, quantize(spec, g_nat))
        sums = np.bincount(picks, weights=g_rx, minlength=k)

    counts = np.bincount(picks, minlength=k)
    covered = counts > 0
    mean_deriv = np.where(covered, sums / np.maximum(counts, 1), np.inf)
    best = int(np.argmin(np.abs(mean_deriv)))

    native = np.array([grid_native[best]])
    error = None
    if dist.known_minimizer is not None:
        error = float(np.linalg.norm(native - dist.known_minimizer))
    bits = math.ceil(math.log2(k)) if k > 1 else 0
    bits += max(1, math.ceil(math.log2(m)))
    return EstimateResult(
        estimator="naive_1d", theta_hat=native, error=error, m=m, n=1,
        total_bits=m * bits, bits_per_signal=bits,
        diagnostics={"uncovered": int((~covered).sum()), "clamped": clamped,
                     "grid_size": k})


def _one_bit_core(u: np.ndarray, rng: np.random.Generator) -> float:
    """Mean of Bernoulli(u_i) draws, the server side of the one-bit scheme."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return float((rng.random(u.shape[0]) < u).mean())


def one_bit(dist: FunctionDistribution, m: int, n: int, *,
            rng: Optional[np.random.Generator] = None, master_seed: int = 0,
            solver_cfg: SolverConfig = SolverConfig()) -> EstimateResult:
    """One bit per machine: send 1 with probability of the (rescaled)
    empirical minimizer, estimate by the average of received bits.

    The native interval maps onto [0, 1]; the bit is 1 with the mapped
    minimizer as probability, so the mean of the bits is an unbiased
    estimate of the mean empirical minimizer.
    """
    if dist.d != 1:
        raise DimensionMismatch("the one-bit estimator requires d = 1")
    if m < 1:
        raise DomainError("need at least one machine")
    if rng is None:
        rng = rngs.generator(master_seed)
    desc = dist.sample_batch(rng, m, (n,))
    theta, converged = dist.batch_minimize(desc, 0, solver_cfg)

    native = dist.to_native(theta[:, 0])
    u = (native - dist.native_lo) / dist.native_span
    est = _one_bit_core(u, rng)
    point = np.array([dist.native_lo + est * dist.native_span])

    error = None
    if dist.known_minimizer is not None:
        error = float(np.linalg.norm(point - dist.known_minimizer))
    return EstimateResult(
        estimator="one_bit", theta_hat=point, error=error, m=m, n=n,
        total_bits=m, bits_per_signal=1,
        diagnostics={"nonconverged": int((~converged).sum())})
