"""Quantization and bit-packing of (coarse point, grid point, correction)
signals.

Wire format
-----------
A signal is one unsigned integer built by concatenating fields MSB-first,
then serialized little-endian into ceil(bits/8) bytes:

    [s_0 .. s_{d-1}] [level] [idx_0 .. idx_{d-1}] [q_0 .. q_{d-1}]

* each coarse coordinate ``s_j`` uses ceil(log2(points per axis)) bits,
* ``level`` uses ceil(log2(t+1)) bits,
* each refinement coordinate ``idx_j`` uses t bits (levels below t are
  zero-padded on the high side),
* each quantized correction coordinate ``q_j`` uses ceil(log2(steps))
  bits, where steps is the level's cell count.

Fields whose range has a single value use zero bits.  The encoded length
is therefore a pure function of (params, level); the receiver reads the
fixed-width fields, resolves the level, and then knows the remaining
widths without any in-band header.  ``bit_length`` accompanies the bytes
as framing and is validated against the level on decode.

Quantizers are uniform with midpoint reconstruction.  Out-of-range values
are clamped rather than rejected (training distributions without bounded
gradients can exceed the nominal ranges); callers count clamps as a
diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DecodeError, DomainError
from .multigrid import GridAddress, GridParams, coarse_axis_count


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform midpoint quantizer for one refinement level."""

    level: int
    lo: float
    hi: float
    acc: float
    steps: int


@dataclass(frozen=True)
class Signal:
    """Decoded signal: coarse index vector, grid address, quantized cells."""

    s_index: tuple
    addr: GridAddress
    delta_q: tuple


@dataclass(frozen=True)
class EncodedSignal:
    bits: bytes
    bit_length: int


def quantizer_for_level(params: GridParams, level: int) -> QuantizerSpec:
    """Quantizer for the correction vector sent at the given level.

    Depth 0 carries a raw gradient, bounded coordinatewise by 1 under the
    model assumptions; deeper levels carry gradient differences between a
    point and its parent, bounded by the points' distance
    2^-level sqrt(d) log2(mn)/sqrt(n).

    The server sums one reconstructed correction per level along a root-to-
    leaf path, so per-level cell sizes must leave room for t+1 of them: the
    accuracy is quant_acc / (4 (t+1)), which caps the accumulated
    worst-case quantization error of any path at an eighth of the accuracy
    radius (eps = sqrt(d) quant_acc) while staying within O(d log(mn))
    bits per signal.
    """
    if not 0 <= level <= params.t:
        raise DomainError(f"level {level} out of range [0, {params.t}]")
    if level == 0:
        lo, hi = -params.grad_range, params.grad_range
    else:
        half = 2.0 ** (-level) * math.sqrt(params.d) * params.resolution
        lo, hi = -half, half
    acc = params.quant_acc / (4.0 * (params.t + 1))
    steps = max(1, math.ceil((hi - lo) / acc))
    return QuantizerSpec(level=level, lo=lo, hi=hi, acc=acc, steps=steps)


def quantize(spec: QuantizerSpec, v: np.ndarray) -> np.ndarray:
    """Cell indices of the (clamped) values."""
    v = np.clip(np.asarray(v, dtype=float), spec.lo, spec.hi)
    q = np.floor((v - spec.lo) / spec.acc).astype(np.int64)
    return np.clip(q, 0, spec.steps - 1)


def dequantize(spec: QuantizerSpec, q: np.ndarray) -> np.ndarray:
    """Cell midpoints of the given indices."""
    q = np.asarray(q)
    if np.any(q < 0) or np.any(q >= spec.steps):
        raise DomainError(f"cell index out of range [0, {spec.steps})")
    return spec.lo + (np.asarray(q, dtype=float) + 0.5) * spec.acc


def count_out_of_range(spec: QuantizerSpec, v: np.ndarray) -> int:
    """How many coordinates needed clamping before quantization."""
    v = np.asarray(v, dtype=float)
    return int(np.count_nonzero((v < spec.lo) | (v > spec.hi)))


def bit_quantizer(bits: int, lo: float = -1.0, hi: float = 1.0) -> QuantizerSpec:
    """Plain b-bit uniform quantizer on a fixed range (level -1: not tied
    to the refinement stack)."""
    if bits < 1:
        raise DomainError("need at least one bit")
    steps = 1 << bits
    return QuantizerSpec(level=-1, lo=lo, hi=hi, acc=(hi - lo) / steps, steps=steps)


# -- field layout -------------------------------------------------------------


def _width(count: int) -> int:
    return math.ceil(math.log2(count)) if count > 1 else 0


@dataclass(frozen=True)
class CodecLayout:
    """Field widths implied by a parameter set."""

    d: int
    t: int
    n_axis: int
    w_s: int
    w_level: int
    w_index: int
    steps: tuple  # cells per level
    w_delta: tuple  # bits per correction coordinate, per level

    def total_bits(self, level: int) -> int:
        return (self.d * self.w_s + self.w_level + self.d * self.w_index
                + self.d * self.w_delta[level])


@lru_cache(maxsize=64)
def layout(params: GridParams) -> CodecLayout:
    steps = tuple(quantizer_for_level(params, l).steps for l in range(params.t + 1))
    return CodecLayout(
        d=params.d,
        t=params.t,
        n_axis=coarse_axis_count(params),
        w_s=_width(coarse_axis_count(params)),
        w_level=_width(params.t + 1),
        w_index=params.t,
        steps=steps,
        w_delta=tuple(_width(s) for s in steps),
    )


def budget_report(params: GridParams) -> dict:
    """Measured per-level signal lengths and the budget constant.

    The constant c is the max level length divided by d*ceil(log2(mn)),
    i.e. the measured multiplier on the nominal per-signal budget.
    """
    lay = layout(params)
    per_level = [lay.total_bits(l) for l in range(params.t + 1)]
    nominal = params.d * math.ceil(math.log2(params.m * params.n))
    return {"per_level_bits": per_level, "nominal_bits": nominal,
            "c": max(per_level) / nominal}


# -- scalar encode / decode ----------------------------------------------------


def encode(sig: Signal, params: GridParams) -> EncodedSignal:
    """Pack a signal into its wire form."""
    lay = layout(params)
    level = sig.addr.level
    if not 0 <= level <= params.t:
        raise DomainError(f"level {level} out of range")
    if len(sig.s_index) != params.d or len(sig.delta_q) != params.d:
        raise DomainError("signal fields have wrong dimension")
    value = 0
    for s in sig.s_index:
        if not 0 <= s < lay.n_axis:
            raise DomainError(f"coarse index {s} out of range")
        value = (value << lay.w_s) | int(s)
    value = (value << lay.w_level) | level
    for i in sig.addr.index:
        value = (value << lay.w_index) | int(i)
    w_d = lay.w_delta[level]
    for q in sig.delta_q:
        if not 0 <= q < lay.steps[level]:
            raise DomainError(f"cell index {q} out of range")
        value = (value << w_d) | int(q)
    total = lay.total_bits(level)
    return EncodedSignal(bits=value.to_bytes(max(1, (total + 7) // 8), "little"),
                         bit_length=total)


def decode(enc: EncodedSignal, params: GridParams) -> Signal:
    """Unpack and validate a wire-form signal; exact inverse of encode."""
    lay = layout(params)
    total = enc.bit_length
    if len(enc.bits) != max(1, (total + 7) // 8):
        raise DecodeError("byte length does not match declared bit length")
    value = int.from_bytes(enc.bits, "little")
    if value >> total:
        raise DecodeError("nonzero padding bits")

    pos = total
    def take(width):
        nonlocal pos
        pos -= width
        if pos < 0:
            raise DecodeError("bit string too short for field layout")
        return (value >> pos) & ((1 << width) - 1) if width else 0

    s_index = tuple(take(lay.w_s) for _ in range(params.d))
    if any(s >= lay.n_axis for s in s_index):
        raise DecodeError("coarse index out of range")
    level = take(lay.w_level)
    if level > params.t:
        raise DecodeError(f"level {level} out of range")
    if total != lay.total_bits(level):
        raise DecodeError("bit length inconsistent with level")
    index = tuple(take(lay.w_index) for _ in range(params.d))
    if any(i >= (1 << level) for i in index):
        raise DecodeError("grid index out of range for level")
    w_d = lay.w_delta[level]
    delta_q = tuple(take(w_d) for _ in range(params.d))
    if any(q >= lay.steps[level] for q in delta_q):
        raise DecodeError("cell index out of range")
    return Signal(s_index=s_index, addr=GridAddress(level, index), delta_q=delta_q)


def dump_fields(enc: EncodedSignal, params: GridParams) -> list:
    """Bit-by-bit field decomposition, for inspection tooling."""
    lay = layout(params)
    sig = decode(enc, params)
    level = sig.addr.level
    rows = []
    for j, s in enumerate(sig.s_index):
        rows.append((f"s[{j}]", lay.w_s, int(s)))
    rows.append(("level", lay.w_level, level))
    for j, i in enumerate(sig.addr.index):
        rows.append((f"index[{j}]", lay.w_index, int(i)))
    for j, q in enumerate(sig.delta_q):
        rows.append((f"delta_q[{j}]", lay.w_delta[level], int(q)))
    return rows


# -- batched encode / decode ---------------------------------------------------


def batch_encode(params: GridParams, s_index: np.ndarray, levels: np.ndarray,
                 index: np.ndarray, delta_q: np.ndarray):
    """Vectorized encode of m signals into uint64 words plus bit lengths.

    Layout identical to ``encode``; requires every level's total width to
    fit 64 bits, which holds for any desk-scale parameter set.
    """
    lay = layout(params)
    totals = np.array([lay.total_bits(l) for l in range(params.t + 1)], dtype=np.int64)
    if totals.max() > 64:
        raise DomainError("signal exceeds 64 bits; use the scalar codec")
    levels = np.asarray(levels, dtype=np.int64)
    value = np.zeros(levels.shape[0], dtype=np.uint64)
    for j in range(params.d):
        value = (value << np.uint64(lay.w_s)) | s_index[:, j].astype(np.uint64)
    value = (value << np.uint64(lay.w_level)) | levels.astype(np.uint64)
    for j in range(params.d):
        value = (value << np.uint64(lay.w_index)) | index[:, j].astype(np.uint64)
    w_d = np.array(lay.w_delta, dtype=np.uint64)[levels]
    for j in range(params.d):
        value = (value << w_d) | delta_q[:, j].astype(np.uint64)
    return value, totals[levels]


def _low_mask(width: np.ndarray) -> np.ndarray:
    """Per-element mask of `width` low bits, safe for width in [0, 64]."""
    w = np.asarray(width, dtype=np.int64)
    clipped = np.minimum(w, 63).astype(np.uint64)
    mask = (np.uint64(1) << clipped) - np.uint64(1)
    return np.where(w >= 64, np.uint64(0xFFFFFFFFFFFFFFFF), mask)


def batch_decode(params: GridParams, words: np.ndarray, bit_lengths: np.ndarray):
    """Vectorized decode; returns (s_index, levels, index, delta_q) arrays."""
    lay = layout(params)
    totals = np.array([lay.total_bits(l) for l in range(params.t + 1)], dtype=np.int64)
    words = np.asarray(words, dtype=np.uint64)
    m = words.shape[0]
    pos = np.asarray(bit_lengths, dtype=np.int64).copy()
    if np.any(pos < 0) or np.any(pos > 64):
        raise DecodeError("bit length out of range")
    if np.any(words & ~_low_mask(pos)):
        raise DecodeError("nonzero padding bits")

    def take(width):
        nonlocal pos
        w = np.asarray(width, dtype=np.int64)
        pos = pos - w
        if np.any(pos < 0):
            raise DecodeError("bit string too short for field layout")
        shift = np.minimum(pos, 63).astype(np.uint64)  # width 0 masks to 0 anyway
        return ((words >> shift) & _low_mask(w)).astype(np.int64)

    s_index = np.stack([take(lay.w_s) for _ in range(params.d)], axis=1)
    if np.any(s_index >= lay.n_axis):
        raise DecodeError("coarse index out of range")
    levels = take(lay.w_level)
    if np.any(levels > params.t):
        raise DecodeError("level out of range")
    if np.any(np.asarray(bit_lengths, dtype=np.int64) != totals[levels]):
        raise DecodeError("bit length inconsistent with level")
    index = np.stack([take(lay.w_index) for _ in range(params.d)], axis=1)
    if np.any(index >= (np.int64(1) << levels)[:, None]):
        raise DecodeError("grid index out of range for level")
    w_d = np.array(lay.w_delta, dtype=np.int64)[levels]
    steps = np.array(lay.steps, dtype=np.int64)[levels]
    delta_q = np.stack([take(w_d) for _ in range(params.d)], axis=1)
    if np.any(delta_q >= steps[:, None]):
        raise DecodeError("cell index out of range")
    assert m == 0 or np.all(pos == 0)
    return s_index, levels, index, delta_q
