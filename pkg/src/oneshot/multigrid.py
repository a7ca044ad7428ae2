"""Grid geometry for the multi-resolution protocol.

Two nested constructions on the cube [-1, 1]^d:

* a coarse lattice with spacing ``h = min(log2(mn)/sqrt(n), 2)`` per axis
  (points at -1 + h/2 + k h, clamped into the cube), onto which machines
  snap their local minimizers; and
* around any coarse point s, a stack of ``t + 1`` dyadic refinement grids
  over the cube of edge ``2h`` centered at s.  Depth-l holds the 2^(ld)
  cell centers of the l-fold subdivision; depth-(l-1) cells are parents.

Points of a refinement grid that stick out of the domain are clamped
componentwise onto the boundary, so every query stays inside the cube.

All logarithms are base 2, which makes the refinement parameter
``delta = 2^-t`` exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

CUBE_LO = -1.0
CUBE_HI = 1.0


@dataclass(frozen=True)
class GridParams:
    """Derived quantities shared by the grids, the codec and the server.

    resolution  log2(mn)/sqrt(n), the raw coarse spacing
    h           coarse spacing clamped to the cube edge (min(resolution, 2))
    delta       finest relative cell size, exactly 2^-t
    t           number of refinement levels
    eps         accuracy radius 2 sqrt(d) * resolution * delta
    quant_acc   correction-vector quantization accuracy 2 * delta * resolution
    """

    d: int
    m: int
    n: int
    resolution: float
    h: float
    delta: float
    t: int
    eps: float
    quant_acc: float
    polylog_factor: float
    grad_range: float = 1.0


def compute_params(d: int, m: int, n: int,
                   polylog_factor: float | None = None,
                   grad_range: float = 1.0) -> GridParams:
    """Resolve the protocol parameters for a (d, m, n) configuration.

    ``polylog_factor`` replaces the default log2^5(mn) factor inside the
    cell-size formula delta_raw = 4 sqrt(d) (factor / m)^(1/max(d,2)).
    The default collapses the refinement stack (t = 0) for desk-scale m;
    pass 1.0 to exercise the multi-level construction at small scale.

    ``grad_range`` is the coordinatewise envelope of sample gradients,
    1.0 under the model bounds; distributions exempt from those bounds
    declare a wider envelope so that depth-0 signals (raw gradients) are
    representable without systematic clamping.

    t rounds log2(1/delta_raw) to the nearest integer, halves down, and
    clamps at zero; delta is then snapped to exactly 2^-t.
    """
    if d < 1:
        raise DomainError("dimension must be >= 1")
    if m < 1 or n < 1 or m * n < 2:
        raise DomainError("need m*n >= 2 so that log2(mn) is positive")
    log_mn = math.log2(m * n)
    factor = log_mn ** 5 if polylog_factor is None else float(polylog_factor)
    if factor <= 0:
        raise DomainError("polylog_factor must be positive")
    delta_raw = 4.0 * math.sqrt(d) * (factor / m) ** (1.0 / max(d, 2))
    t = max(0, math.ceil(math.log2(1.0 / delta_raw) - 0.5))
    delta = 2.0 ** (-t)
    resolution = log_mn / math.sqrt(n)
    h = min(resolution, 2.0)
    eps = 2.0 * math.sqrt(d) * resolution * delta
    quant_acc = 2.0 * delta * resolution
    if grad_range < 1.0:
        raise DomainError("grad_range must be >= 1")
    return GridParams(d=d, m=m, n=n, resolution=resolution, h=h, delta=delta,
                      t=t, eps=eps, quant_acc=quant_acc,
                      polylog_factor=factor, grad_range=grad_range)


# -- coarse lattice ---------------------------------------------------------


def coarse_axis_count(params: GridParams) -> int:
    return math.ceil(2.0 / params.h)


def coarse_axis_points(params: GridParams) -> np.ndarray:
    """Per-axis coarse coordinates, last point clamped into the cube."""
    k = np.arange(coarse_axis_count(params))
    return np.clip(CUBE_LO + params.h / 2.0 + k * params.h, CUBE_LO, CUBE_HI)


def nearest_coarse_index(params: GridParams, theta: np.ndarray) -> np.ndarray:
    """Per-axis index of the closest coarse point (max-norm nearest).

    Works on a single point (d,) or a batch (m, d).  Ties break toward the
    smaller index, which makes the overall choice the lexicographically
    smallest index vector.
    """
    pts = coarse_axis_points(params)
    if pts.size == 1:
        return np.zeros(np.shape(theta), dtype=np.int64)
    mids = (pts[:-1] + pts[1:]) / 2.0
    return np.searchsorted(mids, np.asarray(theta, dtype=float), side="left")


def coarse_point(params: GridParams, index: np.ndarray) -> np.ndarray:
    return coarse_axis_points(params)[np.asarray(index, dtype=np.int64)]


def nearest_coarse_point(params: GridParams, theta: np.ndarray) -> np.ndarray:
    return coarse_point(params, nearest_coarse_index(params, theta))


# -- refinement grids --------------------------------------------------------


@dataclass(frozen=True)
class GridAddress:
    """(level, index vector) naming one point of a refinement grid."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise DomainError("level must be >= 0")
        top = 1 << self.level
        if any(not 0 <= i < top for i in self.index):
            raise DomainError(
                f"index {self.index} out of range for level {self.level}")


def address_to_point(s_point: np.ndarray, params: GridParams,
                     addr: GridAddress) -> np.ndarray:
    """Center of the addressed refinement cell, clamped into the cube."""
    if addr.level > params.t:
        raise DomainError(f"level {addr.level} exceeds t={params.t}")
    if len(addr.index) != params.d:
        raise DomainError("address has wrong dimension")
    return refine_points(np.asarray(s_point, dtype=float), params,
                         np.array(addr.level), np.array(addr.index))


def refine_points(s_point: np.ndarray, params: GridParams,
                  levels: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Vectorized address-to-point: levels (...,), index (..., d)."""
    cell = (2.0 * params.h) / np.exp2(np.asarray(levels, dtype=float))
    pts = (s_point - params.h) + (np.asarray(index, dtype=float) + 0.5) * cell[..., None]
    return np.clip(pts, CUBE_LO, CUBE_HI)


def parent(addr: GridAddress) -> GridAddress:
    """The depth-(l-1) cell containing this point."""
    if addr.level == 0:
        raise DomainError("the root address has no parent")
    return GridAddress(addr.level - 1, tuple(i >> 1 for i in addr.index))


def parent_index(index: np.ndarray) -> np.ndarray:
    return np.asarray(index, dtype=np.int64) >> 1


# -- random signal placement --------------------------------------------------


def level_probabilities(params: GridParams) -> np.ndarray:
    """Mass 2^((d-2) l) / sum_j 2^((d-2) j) on levels l = 0..t."""
    weights = np.exp2((params.d - 2.0) * np.arange(params.t + 1))
    return weights / weights.sum()


def sample_level(rng: np.random.Generator, params: GridParams, size=None):
    """Draw a level (or an array of them) from the level distribution."""
    cum = np.cumsum(level_probabilities(params))
    u = rng.random(size)
    out = np.searchsorted(cum, u, side="right")
    out = np.minimum(out, params.t)  # guard the u ~ 1.0 edge
    return int(out) if size is None else out.astype(np.int64)


def sample_point(rng: np.random.Generator, params: GridParams, level,
                 size=None):
    """Uniform grid point of the given level.

    Scalar form returns a GridAddress; with ``size`` given, ``level`` may be
    an array of per-row levels and the result is an (size, d) index array.
    """
    if size is None:
        if not 0 <= level <= params.t:
            raise DomainError(f"level {level} out of range [0, {params.t}]")
        idx = np.floor(rng.random(params.d) * (1 << int(level))).astype(np.int64)
        return GridAddress(int(level), tuple(int(i) for i in idx))
    cells = np.exp2(np.asarray(level, dtype=float))[:, None]
    return np.floor(rng.random((size, params.d)) * cells).astype(np.int64)
