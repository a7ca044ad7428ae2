"""The multi-resolution estimator: machine-side encoding and server-side
gradient-field reconstruction.

Each machine solves its own empirical problem, snaps the minimizer to the
coarse lattice (part s), draws a random refinement point (part p), and
sends the quantized gradient information tied to that point (part delta):
the raw empirical gradient at s for depth 0, or the gradient difference
between the point and its parent for deeper levels.

The server keeps the modal coarse point, averages depth-0 corrections into
a root gradient estimate, then walks the refinement tree breadth-first,
adding each node's average correction to its parent's estimate.  Nodes
that received no signal inherit the parent value unchanged and are counted
as uncovered.  The estimate is the deepest-level grid point with the
smallest reconstructed gradient norm (ties to the lexicographically
smallest index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rngs
from .codec import (Signal, batch_decode, batch_encode, count_out_of_range,
                    dequantize, encode, quantize, quantizer_for_level)
from .errors import DomainError, RootUncovered
from .functions import FunctionDistribution
from .multigrid import (GridAddress, GridParams, address_to_point,
                        coarse_axis_count, coarse_point, compute_params,
                        nearest_coarse_index, parent, refine_points,
                        sample_level, sample_point)
from .results import EstimateResult
from .solver import SolverConfig, minimize_empirical


@dataclass
class MachineOutput:
    signal: Signal
    theta_i: np.ndarray
    solver_converged: bool
    clamped_coords: int


@dataclass
class ServerState:
    s_star_index: tuple
    grad_est: dict
    counts: dict
    uncovered: set


def _split_parts(n: int, strict_split: bool) -> tuple:
    """Sample-block sizes: solve block, then correction block.

    A single part means the lone sample is reused for both roles (only
    allowed when n == 1 and strict splitting is off).
    """
    if strict_split and n < 2:
        raise DomainError("strict_split requires n >= 2")
    n1 = math.ceil(n / 2)
    return (n1,) if n == 1 else (n1, n - n1)


def machine_encode_at(samples: Sequence, params: GridParams, cfg: SolverConfig,
                      level: int, index: tuple,
                      strict_split: bool = False) -> MachineOutput:
    """Deterministic part of the machine step, with (level, index) given."""
    n = len(samples)
    if n < 1:
        raise DomainError("each machine needs at least one sample")
    parts = _split_parts(n, strict_split)
    head = samples[:parts[0]]
    tail = samples[parts[0]:] if len(parts) == 2 else samples

    solved = minimize_empirical(head, cfg)
    s_idx = nearest_coarse_index(params, solved.theta)
    s_pt = coarse_point(params, s_idx)

    def tail_grad(pt):
        g = np.zeros(params.d)
        for f in tail:
            g += f.grad(pt)
        return g / len(tail)

    addr = GridAddress(level, tuple(int(i) for i in index))
    if level == 0:
        delta = tail_grad(s_pt)
    else:
        p = address_to_point(s_pt, params, addr)
        pp = address_to_point(s_pt, params, parent(addr))
        delta = tail_grad(p) - tail_grad(pp)

    spec = quantizer_for_level(params, level)
    clamped = count_out_of_range(spec, delta)
    q = quantize(spec, delta)
    sig = Signal(s_index=tuple(int(i) for i in s_idx), addr=addr,
                 delta_q=tuple(int(v) for v in q))
    return MachineOutput(signal=sig, theta_i=solved.theta,
                         solver_converged=solved.converged, clamped_coords=clamped)


def machine_encode(samples: Sequence, params: GridParams, cfg: SolverConfig,
                   rng: np.random.Generator,
                   strict_split: bool = False) -> MachineOutput:
    """Full machine step: draw the refinement point, then encode."""
    level = sample_level(rng, params)
    addr = sample_point(rng, params, level)
    return machine_encode_at(samples, params, cfg, level, addr.index,
                             strict_split=strict_split)


# -- server -------------------------------------------------------------------


def _ravel(index: np.ndarray, level: int, d: int) -> np.ndarray:
    """C-order flat id of index vectors at one level (lexicographic)."""
    flat = np.zeros(index.shape[0], dtype=np.int64)
    for j in range(d):
        flat = (flat << level) | index[:, j]
    return flat


def _unravel(flat: np.ndarray, level: int, d: int) -> np.ndarray:
    out = np.empty((np.size(flat), d), dtype=np.int64)
    mask = (1 << level) - 1
    f = np.asarray(flat, dtype=np.int64).copy()
    for j in range(d - 1, -1, -1):
        out[:, j] = f & mask
        f >>= level
    return out


def _aggregate(params: GridParams, s_index: np.ndarray, levels: np.ndarray,
               index: np.ndarray, delta: np.ndarray) -> dict:
    """Array-level server pass; returns the field per level plus diagnostics."""
    m, d = delta.shape
    if m == 0:
        raise DomainError("server needs at least one signal")
    n_axis = coarse_axis_count(params)
    bits_s = max(1, (n_axis - 1).bit_length())

    flat_s = _ravel(s_index, bits_s, d)
    # argmax of bincount returns the first (lexicographically smallest) mode
    s_counts = np.bincount(flat_s, minlength=int(flat_s.max()) + 1)
    s_star_flat = int(np.argmax(s_counts))
    keep = flat_s == s_star_flat
    s_star_index = _unravel(np.array([s_star_flat]), bits_s, d)[0]

    grads = []
    counts = []
    uncovered = 0
    for lvl in range(params.t + 1):
        nodes = 1 << (lvl * d)
        sel = keep & (levels == lvl)
        flat = _ravel(index[sel], lvl, d) if lvl > 0 else np.zeros(int(sel.sum()), dtype=np.int64)
        cnt = np.bincount(flat, minlength=nodes)
        sums = np.empty((nodes, d))
        for j in range(d):
            sums[:, j] = np.bincount(flat, weights=delta[sel, j], minlength=nodes)
        if lvl == 0:
            if cnt[0] == 0:
                raise RootUncovered("no depth-0 signal at the modal coarse point")
            grads.append(sums / cnt[0])
        else:
            pmap = _ravel(_unravel(np.arange(nodes), lvl, d) >> 1, lvl - 1, d)
            corr = np.where(cnt[:, None] > 0, sums / np.maximum(cnt, 1)[:, None], 0.0)
            grads.append(grads[lvl - 1][pmap] + corr)
            uncovered += int((cnt == 0).sum())
        counts.append(cnt)

    leaf_norms = np.linalg.norm(grads[params.t], axis=1)
    best = int(np.argmin(leaf_norms))
    best_index = _unravel(np.array([best]), params.t, d)[0] if params.t > 0 \
        else np.zeros(d, dtype=np.int64)
    return {
        "s_star_index": s_star_index,
        "s_star_flat_kept": int(keep.sum()),
        "grads": grads,
        "counts": counts,
        "uncovered": uncovered,
        "best_index": best_index,
    }


def server_estimate_full(signals: Sequence[Signal], params: GridParams):
    """Object-level server pass; returns (point, ServerState)."""
    m = len(signals)
    if m == 0:
        raise DomainError("server needs at least one signal")
    d = params.d
    s_index = np.array([sig.s_index for sig in signals], dtype=np.int64)
    levels = np.array([sig.addr.level for sig in signals], dtype=np.int64)
    index = np.array([sig.addr.index for sig in signals], dtype=np.int64)
    delta = np.empty((m, d))
    for lvl in range(params.t + 1):
        sel = levels == lvl
        if sel.any():
            spec = quantizer_for_level(params, lvl)
            delta[sel] = dequantize(spec, np.array([signals[i].delta_q
                                                    for i in np.where(sel)[0]]))
    agg = _aggregate(params, s_index, levels, index, delta)

    s_pt = coarse_point(params, agg["s_star_index"])
    point = refine_points(s_pt, params, np.array(params.t), agg["best_index"])

    grad_est = {}
    counts = {}
    uncovered = set()
    for lvl in range(params.t + 1):
        nodes = 1 << (lvl * d)
        idxs = _unravel(np.arange(nodes), max(lvl, 1), d) if lvl > 0 \
            else np.zeros((1, d), dtype=np.int64)
        for node in range(nodes):
            addr = GridAddress(lvl, tuple(int(v) for v in idxs[node]))
            grad_est[addr] = agg["grads"][lvl][node]
            counts[addr] = int(agg["counts"][lvl][node])
            if lvl > 0 and counts[addr] == 0:
                uncovered.add(addr)
    state = ServerState(s_star_index=tuple(int(v) for v in agg["s_star_index"]),
                        grad_est=grad_est, counts=counts, uncovered=uncovered)
    return point, state


def server_estimate(signals: Sequence[Signal], params: GridParams) -> np.ndarray:
    """The estimate alone (deepest-grid point of smallest gradient norm)."""
    return server_estimate_full(signals, params)[0]


# -- end-to-end run -------------------------------------------------------------


def run_multires(dist: FunctionDistribution, m: int, n: int, *,
                 rng: Optional[np.random.Generator] = None,
                 master_seed: int = 0,
                 params: Optional[GridParams] = None,
                 polylog_factor: Optional[float] = None,
                 solver_cfg: SolverConfig = SolverConfig(),
                 strict_split: bool = False,
                 collect_fidelity: bool = False) -> EstimateResult:
    """Simulate the whole protocol: m machines, the bit channel, the server.

    The server consumes only what survives encode/decode, so quantization
    loss is always on the measured path.  Draw order (samples, then levels,
    then grid points) is fixed, which makes results a pure function of the
    rng state.
    """
    if m < 1:
        raise DomainError("need at least one machine")
    if params is None:
        params = compute_params(dist.d, m, n, polylog_factor)
    if rng is None:
        rng = rngs.generator(master_seed)
    d = dist.d

    parts = _split_parts(n, strict_split)
    tail_part = 1 if len(parts) == 2 else 0
    desc = dist.sample_batch(rng, m, parts)
    theta, converged = dist.batch_minimize(desc, 0, solver_cfg)

    s_index = nearest_coarse_index(params, theta)
    s_pts = coarse_point(params, s_index)
    levels = sample_level(rng, params, size=m)
    index = sample_point(rng, params, levels, size=m)

    p_pts = refine_points(s_pts, params, levels, index)
    parent_levels = np.maximum(levels - 1, 0)
    pp_pts = refine_points(s_pts, params, parent_levels, index >> 1)
    lvl0 = levels == 0
    pp_pts[lvl0] = p_pts[lvl0]

    g_p = dist.batch_grad(desc, tail_part, p_pts)
    g_pp = dist.batch_grad(desc, tail_part, pp_pts)
    delta = np.where(lvl0[:, None], g_p, g_p - g_pp)

    q = np.zeros((m, d), dtype=np.int64)
    clamped = 0
    for lvl in range(params.t + 1):
        sel = levels == lvl
        if sel.any():
            spec = quantizer_for_level(params, lvl)
            clamped += count_out_of_range(spec, delta[sel])
            q[sel] = quantize(spec, delta[sel])

    words, bit_lengths = batch_encode(params, s_index, levels, index, q)
    rx_s, rx_levels, rx_index, rx_q = batch_decode(params, words, bit_lengths)
    rx_delta = np.empty((m, d))
    for lvl in range(params.t + 1):
        sel = rx_levels == lvl
        if sel.any():
            spec = quantizer_for_level(params, lvl)
            rx_delta[sel] = dequantize(spec, rx_q[sel])

    agg = _aggregate(params, rx_s, rx_levels, rx_index, rx_delta)
    s_star_pt = coarse_point(params, agg["s_star_index"])
    point = refine_points(s_star_pt, params, np.array(params.t), agg["best_index"])

    native = dist.to_native(point)
    error = None
    if dist.known_minimizer is not None:
        error = float(np.linalg.norm(native - dist.known_minimizer))

    diagnostics = {
        "uncovered": agg["uncovered"],
        "clamped": clamped,
        "nonconverged": int((~converged).sum()),
        "s_star_index": tuple(int(v) for v in agg["s_star_index"]),
        "signals_kept": agg["s_star_flat_kept"],
    }
    if collect_fidelity:
        diagnostics.update(_fidelity(dist, params, agg, s_star_pt,
                                     rx_s, rx_levels, rx_index, delta))

    return EstimateResult(
        estimator="multires", theta_hat=native, error=error, m=m, n=n,
        total_bits=int(bit_lengths.sum()), bits_per_signal=int(bit_lengths.max()),
        diagnostics=diagnostics)


def _fidelity(dist, params, agg, s_star_pt, rx_s, rx_levels, rx_index, exact_delta):
    """Max gradient-field error over covered deepest-level points.

    Reported twice: for the decoded field actually used by the server, and
    for a shadow aggregation of the exact (unquantized) corrections, which
    isolates sampling error from quantization error.
    """
    d = params.d
    t = params.t
    leaves = 1 << (t * d)
    leaf_idx = _unravel(np.arange(leaves), max(t, 1), d) if t > 0 \
        else np.zeros((1, d), dtype=np.int64)
    leaf_pts = refine_points(s_star_pt, params, np.full(leaves, t), leaf_idx)
    pop = np.stack([dist.population_grad(pt) for pt in leaf_pts])

    covered = _covered_leaf_mask(params, agg)
    err_q = np.linalg.norm(agg["grads"][t] - pop, axis=1)

    shadow = _aggregate(params, rx_s, rx_levels, rx_index, exact_delta)
    err_x = np.linalg.norm(shadow["grads"][t] - pop, axis=1)
    return {
        "fidelity_quantized": float(err_q[covered].max()) if covered.any() else float("nan"),
        "fidelity_exact": float(err_x[covered].max()) if covered.any() else float("nan"),
        "covered_leaves": int(covered.sum()),
    }


def _covered_leaf_mask(params: GridParams, agg: dict) -> np.ndarray:
    """Leaves whose own node received at least one signal."""
    return np.asarray(agg["counts"][params.t]) > 0
