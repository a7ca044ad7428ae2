"""Convex sample losses, the distributions that generate them, and
validity probes for the bounded/Lipschitz-gradient model.

All estimators work on the internal cube [-1, 1]^d.  A distribution whose
losses live naturally on another box (e.g. the two-cubic mixture on [0, 1])
carries an affine domain transform; minimizers and errors are reported in
native coordinates, while sample functions and gradients are expressed in
internal coordinates (chain rule included).

The model bounds checked by the probes are |f| <= sqrt(d), ||grad f|| <= 1
and a 1-Lipschitz gradient.  Distributions that violate them (ridge and
logistic with Gaussian inputs, and the two-cubic mixture, whose gradients
exceed 1 on part of the cube) are flagged ``assumption_exempt`` and the
bound probes skip them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError
from .solver import SolverConfig, minimize_empirical

CUBE_LO = -1.0
CUBE_HI = 1.0

_DOMAIN_TOL = 1e-9


def check_point(theta, d: int) -> np.ndarray:
    """Validate an internal-domain point: shape (d,) inside [-1, 1]^d."""
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (d,):
        raise DimensionMismatch(f"expected point of dimension {d}, got shape {arr.shape}")
    if np.any(arr < CUBE_LO - _DOMAIN_TOL) or np.any(arr > CUBE_HI + _DOMAIN_TOL):
        raise DomainError(f"point {arr} outside [-1, 1]^{d}")
    return arr


class SampleFunction:
    """A single convex differentiable loss on the internal cube."""

    d: int
    descriptor: tuple

    def value(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def evaluate(f: SampleFunction, theta) -> float:
    """f(theta) with dimension/domain validation."""
    return f.value(check_point(theta, f.d))


def gradient(f: SampleFunction, theta) -> np.ndarray:
    """Analytic gradient of f at theta with dimension/domain validation."""
    return f.grad(check_point(theta, f.d))


def _cubic_native_value(which: int, u):
    u = np.asarray(u, dtype=float)
    if which == 0:
        return u * u + u ** 3 / 6.0
    v = u - 1.0
    return v * v + v ** 3 / 6.0


def _cubic_native_deriv(which: int, u):
    u = np.asarray(u, dtype=float)
    if which == 0:
        return 2.0 * u + 0.5 * u * u
    v = u - 1.0
    return 2.0 * v + 0.5 * v * v


class CubicSample(SampleFunction):
    """One branch of the two-cubic mixture, remapped from [0, 1] onto [-1, 1]."""

    d = 1

    def __init__(self, which: int):
        self.which = int(which)
        self.descriptor = ("cubic", self.which)

    def value(self, theta):
        u = (theta[0] + 1.0) / 2.0
        return float(_cubic_native_value(self.which, u))

    def grad(self, theta):
        u = (theta[0] + 1.0) / 2.0
        return np.array([_cubic_native_deriv(self.which, u) / 2.0])


class RidgeSample(SampleFunction):
    """Squared error with l2 penalty: (theta'x - y)^2 + 0.1 ||theta||^2."""

    def __init__(self, x: np.ndarray, y: float, reg: float = 0.1):
        self.x = np.asarray(x, dtype=float)
        self.y = float(y)
        self.reg = float(reg)
        self.d = self.x.shape[0]
        self.descriptor = ("ridge", tuple(self.x), self.y)

    def value(self, theta):
        r = float(theta @ self.x) - self.y
        return r * r + self.reg * float(theta @ theta)

    def grad(self, theta):
        r = float(theta @ self.x) - self.y
        return 2.0 * r * self.x + 2.0 * self.reg * theta


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _log1pexp(z):
    # log(1 + e^z), stable for large |z|
    z = np.asarray(z, dtype=float)
    return np.where(z > 30.0, z, np.log1p(np.exp(np.minimum(z, 30.0))))


class LogisticSample(SampleFunction):
    """Logistic loss log(1 + exp(-y theta'x)) for a labelled point."""

    def __init__(self, x: np.ndarray, y: int):
        self.x = np.asarray(x, dtype=float)
        self.y = int(y)
        self.d = self.x.shape[0]
        self.descriptor = ("logistic", tuple(self.x), self.y)

    def value(self, theta):
        return float(_log1pexp(-self.y * float(theta @ self.x)))

    def grad(self, theta):
        z = -self.y * float(theta @ self.x)
        return -self.y * self.x * float(_sigmoid(z))


class BowlSample(SampleFunction):
    """Isotropic quadratic a * ||theta - c||^2."""

    def __init__(self, a: float, c: np.ndarray):
        self.a = float(a)
        self.c = np.asarray(c, dtype=float)
        self.d = self.c.shape[0]
        self.descriptor = ("bowl", self.a, tuple(self.c))

    def value(self, theta):
        diff = theta - self.c
        return self.a * float(diff @ diff)

    def grad(self, theta):
        return 2.0 * self.a * (theta - self.c)


@dataclass
class GradientEstimate:
    """Expected-loss gradient at a point, analytic or Monte Carlo."""

    value: np.ndarray
    stderr: np.ndarray
    analytic: bool


class FunctionDistribution:
    """Sampler of convex losses with optional analytic population data.

    ``known_minimizer`` and ``known_lambda`` are in native coordinates;
    ``population_grad`` operates in internal coordinates like the samples.
    """

    name: str
    d: int
    assumption_exempt: bool = False
    known_minimizer: Optional[np.ndarray] = None
    known_lambda: Optional[float] = None
    native_lo: float = CUBE_LO
    native_hi: float = CUBE_HI
    # Coordinatewise envelope of sample gradients on the cube: 1.0 under the
    # model bounds; exempt distributions declare a high-probability envelope
    # so raw-gradient signals are representable without systematic clamping.
    grad_range: float = 1.0

    # -- domain transform -------------------------------------------------

    @property
    def native_span(self) -> float:
        return self.native_hi - self.native_lo

    def to_native(self, x: np.ndarray) -> np.ndarray:
        return self.native_lo + (np.asarray(x, dtype=float) + 1.0) * (self.native_span / 2.0)

    def to_internal(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(u, dtype=float) - self.native_lo) / self.native_span - 1.0

    @property
    def lambda_internal(self) -> Optional[float]:
        """Strong-convexity constant of F seen on the internal cube."""
        if self.known_lambda is None:
            return None
        scale = self.native_span / 2.0
        return self.known_lambda * scale * scale

    def minimizer_internal(self) -> Optional[np.ndarray]:
        if self.known_minimizer is None:
            return None
        return self.to_internal(self.known_minimizer)

    # -- population quantities --------------------------------------------

    def population_grad(self, theta: np.ndarray) -> Optional[np.ndarray]:
        """Analytic gradient of F at an internal point, when available."""
        return None

    def population_value(self, theta: np.ndarray) -> Optional[float]:
        return None

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> SampleFunction:
        raise NotImplementedError

    def sample_batch(self, rng: np.random.Generator, m: int, parts: tuple):
        """Draw m i.i.d. blocks of samples, one independent block per part size.

        Returns an opaque descriptor consumed by the ``batch_*`` methods.
        """
        raise NotImplementedError

    def batch_minimize(self, desc, part: int, cfg: SolverConfig):
        """Per-machine minimizer of the mean loss over one block.

        Returns ``(theta (m, d), converged (m,))`` in internal coordinates.
        """
        raise NotImplementedError

    def batch_grad(self, desc, part: int, pts: np.ndarray) -> np.ndarray:
        """Per-machine gradient of the block's mean loss at pts (m, d)."""
        raise NotImplementedError

    def materialize(self, desc, machine: int, part: int) -> list:
        """The block of SampleFunction objects behind one descriptor row."""
        raise NotImplementedError


def _validate_interior(point: np.ndarray, what: str) -> None:
    if np.any(point <= CUBE_LO) or np.any(point >= CUBE_HI):
        raise DomainError(f"{what} {point} must lie strictly inside the cube")


class TwoCubicDistribution(FunctionDistribution):
    """Equal mixture of two cubics on [0, 1] whose average minimizer is
    (sqrt(15) - 3) / 2, while each branch minimizes at an endpoint."""

    name = "two_cubic"
    d = 1
    native_lo = 0.0
    native_hi = 1.0
    # Max |f| = 7/6 and max native derivative 2.5 exceed the model bounds.
    assumption_exempt = True
    grad_range = 1.25  # exact bound of the remapped derivative

    def __init__(self):
        self.known_minimizer = np.array([(np.sqrt(15.0) - 3.0) / 2.0])
        # F'' on [0, 1] is (3 + 2u)/2 >= 3/2, and the quadratic-growth
        # constant in F(b) >= F(a) + F'(a)(b-a) + lam (b-a)^2 is min F''/2.
        self.known_lambda = 0.75
        _validate_interior(self.to_internal(self.known_minimizer), "minimizer")

    def population_value(self, theta):
        u = (theta[0] + 1.0) / 2.0
        return float(0.5 * (_cubic_native_value(0, u) + _cubic_native_value(1, u)))

    def population_grad(self, theta):
        u = (np.asarray(theta, dtype=float)[..., 0] + 1.0) / 2.0
        g = 0.25 * (_cubic_native_deriv(0, u) + _cubic_native_deriv(1, u))
        return np.asarray(g, dtype=float)[..., None] if np.ndim(theta) > 1 else np.array([g])

    def sample(self, rng):
        return CubicSample(int(rng.integers(0, 2)))

    def sample_batch(self, rng, m, parts):
        counts = np.empty((m, len(parts)), dtype=np.int64)
        for i, size in enumerate(parts):
            counts[:, i] = rng.binomial(size, 0.5, size=m)  # draws of branch 1
        return {"parts": tuple(parts), "n1_counts": counts}

    def batch_minimize(self, desc, part, cfg):
        total = desc["parts"][part]
        c1 = desc["n1_counts"][:, part].astype(float)
        # Root of the summed derivative (n/2) u^2 + (2n - c1) u - 1.5 c1 = 0.
        b = 2.0 * total - c1
        u = (-b + np.sqrt(b * b + 3.0 * total * c1)) / total
        theta = (2.0 * u - 1.0)[:, None]
        return theta, np.ones(len(c1), dtype=bool)

    def batch_grad(self, desc, part, pts):
        total = desc["parts"][part]
        c1 = desc["n1_counts"][:, part].astype(float)
        u = (pts[:, 0] + 1.0) / 2.0
        g = ((total - c1) * _cubic_native_deriv(0, u) + c1 * _cubic_native_deriv(1, u))
        return (g / (2.0 * total))[:, None]

    def materialize(self, desc, machine, part):
        total = desc["parts"][part]
        c1 = int(desc["n1_counts"][machine, part])
        return [CubicSample(1)] * c1 + [CubicSample(0)] * (total - c1)


class QuadraticBowlDistribution(FunctionDistribution):
    """Mixture of isotropic quadratics a_k ||theta - c_k||^2 on [-1, 1]^d.

    With ``curvatures="auto"`` every a_k is set to 1 / (4 sqrt(d)), the
    largest value for which |f| <= sqrt(d) and ||grad f|| <= 1 hold with
    equality at the cube corners; explicit curvatures above that cap are
    accepted but flag the distribution exempt from the bound probes.
    """

    name = "quadratic_bowl"

    def __init__(self, d: int, centers, weights=None, curvatures="auto"):
        self.d = int(d)
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if self.centers.shape[1] != self.d:
            raise DimensionMismatch(
                f"centers have dimension {self.centers.shape[1]}, expected {d}")
        k = self.centers.shape[0]
        if weights is None:
            weights = np.full(k, 1.0 / k)
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (k,) or np.any(self.weights < 0):
            raise DomainError("weights must be a nonnegative vector, one per center")
        self.weights = self.weights / self.weights.sum()
        cap = 1.0 / (4.0 * np.sqrt(self.d))
        if isinstance(curvatures, str) and curvatures == "auto":
            self.curvatures = np.full(k, cap)
        else:
            self.curvatures = np.asarray(curvatures, dtype=float)
            if self.curvatures.shape != (k,) or np.any(self.curvatures <= 0):
                raise DomainError("curvatures must be positive, one per center")
        self.assumption_exempt = bool(np.any(self.curvatures > cap * (1 + 1e-12)))

        wa = self.weights * self.curvatures
        self._mean_a = float(wa.sum())
        self.known_minimizer = (wa @ self.centers) / self._mean_a
        self.known_lambda = self._mean_a  # exact: F grows as mean_a ||.||^2
        _validate_interior(self.known_minimizer, "minimizer")

    def population_value(self, theta):
        diffs = theta[None, :] - self.centers
        return float(np.sum(self.weights * self.curvatures * np.sum(diffs * diffs, axis=1)))

    def population_grad(self, theta):
        return 2.0 * self._mean_a * (np.asarray(theta, dtype=float) - self.known_minimizer)

    def sample(self, rng):
        k = int(rng.choice(len(self.weights), p=self.weights))
        return BowlSample(self.curvatures[k], self.centers[k])

    def sample_batch(self, rng, m, parts):
        k = len(self.weights)
        counts = np.empty((m, len(parts), k), dtype=np.int64)
        for i, size in enumerate(parts):
            counts[:, i, :] = rng.multinomial(size, self.weights, size=m)
        return {"parts": tuple(parts), "counts": counts}

    def _block_sums(self, desc, part):
        cnt = desc["counts"][:, part, :].astype(float)
        sum_a = cnt @ self.curvatures
        sum_ac = (cnt * self.curvatures[None, :]) @ self.centers
        return sum_a, sum_ac

    def batch_minimize(self, desc, part, cfg):
        sum_a, sum_ac = self._block_sums(desc, part)
        theta = np.clip(sum_ac / sum_a[:, None], CUBE_LO, CUBE_HI)
        return theta, np.ones(len(sum_a), dtype=bool)

    def batch_grad(self, desc, part, pts):
        total = desc["parts"][part]
        sum_a, sum_ac = self._block_sums(desc, part)
        return 2.0 * (sum_a[:, None] * pts - sum_ac) / total

    def materialize(self, desc, machine, part):
        cnt = desc["counts"][machine, part]
        out = []
        for k, c in enumerate(cnt):
            out.extend(BowlSample(self.curvatures[k], self.centers[k]) for _ in range(int(c)))
        return out


class RidgeDistribution(FunctionDistribution):
    """(theta'X - Y)^2 + 0.1 ||theta||^2 with X ~ N(0, I), Y = X'theta* + noise.

    The population minimizer is theta*/1.1 (the l2 penalty shrinks it), and
    that regularized optimum is what errors are measured against.
    """

    name = "ridge"
    assumption_exempt = True  # unbounded Gaussian X breaks the gradient bounds
    REG = 0.1
    NOISE_STD = 0.1

    def __init__(self, d: int, theta_star):
        self.d = int(d)
        self.theta_gen = np.asarray(theta_star, dtype=float)
        if self.theta_gen.shape != (self.d,):
            raise DimensionMismatch("theta_star has wrong dimension")
        self.known_minimizer = self.theta_gen / (1.0 + self.REG)
        # F(theta) = ||theta - theta*||^2 + reg ||theta||^2 + noise_var
        self.known_lambda = 1.0 + self.REG
        _validate_interior(self.known_minimizer, "population minimizer")

    def population_value(self, theta):
        diff = theta - self.theta_gen
        return float(diff @ diff + self.REG * (theta @ theta) + self.NOISE_STD ** 2)

    def population_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 2.0 * (theta - self.theta_gen) + 2.0 * self.REG * theta

    def sample(self, rng):
        x = rng.standard_normal(self.d)
        y = float(x @ self.theta_gen + self.NOISE_STD * rng.standard_normal())
        return RidgeSample(x, y, self.REG)

    def sample_batch(self, rng, m, parts):
        n = int(sum(parts))
        x = rng.standard_normal((m, n, self.d))
        y = np.einsum("mnd,d->mn", x, self.theta_gen) + self.NOISE_STD * rng.standard_normal((m, n))
        offsets = np.concatenate([[0], np.cumsum(parts)]).astype(int)
        return {"parts": tuple(parts), "offsets": offsets, "X": x, "Y": y}

    def _slice(self, desc, part):
        lo, hi = desc["offsets"][part], desc["offsets"][part + 1]
        return desc["X"][:, lo:hi, :], desc["Y"][:, lo:hi]

    def batch_minimize(self, desc, part, cfg):
        from . import _backend

        x, y = self._slice(desc, part)
        cnt = x.shape[1]
        h = (2.0 / cnt) * np.einsum("mnd,mne->mde", x, x)
        h[:, np.arange(self.d), np.arange(self.d)] += 2.0 * self.REG
        lin = (2.0 / cnt) * np.einsum("mnd,mn->md", x, y)
        return _backend.quad_pgd(h, lin, cfg)

    def batch_grad(self, desc, part, pts):
        x, y = self._slice(desc, part)
        cnt = x.shape[1]
        resid = np.einsum("mnd,md->mn", x, pts) - y
        return (2.0 / cnt) * np.einsum("mn,mnd->md", resid, x) + 2.0 * self.REG * pts

    def materialize(self, desc, machine, part):
        x, y = self._slice(desc, part)
        return [RidgeSample(x[machine, j], y[machine, j], self.REG)
                for j in range(x.shape[1])]


class LogisticDistribution(FunctionDistribution):
    """Logistic loss with X ~ N(0, I) and labels from the true model theta*.

    The population minimizer equals theta* (no penalty term); the analytic
    gradient oracle integrates E[X (sigma(theta'X) - sigma(theta*'X))] with
    tensor Gauss-Hermite quadrature.
    """

    name = "logistic"
    assumption_exempt = True
    _QUAD_NODES = 48

    def __init__(self, d: int, theta_star):
        self.d = int(d)
        if self.d > 3:
            raise DomainError("logistic analytic oracle supports d <= 3")
        self.theta_gen = np.asarray(theta_star, dtype=float)
        if self.theta_gen.shape != (self.d,):
            raise DimensionMismatch("theta_star has wrong dimension")
        self.known_minimizer = self.theta_gen.copy()
        self.known_lambda = None  # curvature of E[logistic] has no clean constant
        _validate_interior(self.known_minimizer, "minimizer")
        self._nodes, self._qweights = self._build_quadrature()

    def _build_quadrature(self):
        x, w = np.polynomial.hermite_e.hermegauss(self._QUAD_NODES)
        w = w / np.sqrt(2.0 * np.pi)
        grids = np.meshgrid(*([x] * self.d), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        wgrid = np.meshgrid(*([w] * self.d), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
        return nodes, weights

    def population_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        s_theta = _sigmoid(self._nodes @ theta)
        s_star = _sigmoid(self._nodes @ self.theta_gen)
        return (self._qweights * (s_theta - s_star)) @ self._nodes

    def population_value(self, theta):
        z = self._nodes @ np.asarray(theta, dtype=float)
        p1 = _sigmoid(self._nodes @ self.theta_gen)
        losses = p1 * _log1pexp(-z) + (1.0 - p1) * _log1pexp(z)
        return float(self._qweights @ losses)

    def sample(self, rng):
        x = rng.standard_normal(self.d)
        y = 1 if rng.random() < _sigmoid(float(x @ self.theta_gen)) else -1
        return LogisticSample(x, y)

    def sample_batch(self, rng, m, parts):
        n = int(sum(parts))
        x = rng.standard_normal((m, n, self.d))
        p1 = _sigmoid(np.einsum("mnd,d->mn", x, self.theta_gen))
        y = np.where(rng.random((m, n)) < p1, 1.0, -1.0)
        offsets = np.concatenate([[0], np.cumsum(parts)]).astype(int)
        return {"parts": tuple(parts), "offsets": offsets, "X": x, "Y": y}

    def _slice(self, desc, part):
        lo, hi = desc["offsets"][part], desc["offsets"][part + 1]
        return desc["X"][:, lo:hi, :], desc["Y"][:, lo:hi]

    def batch_minimize(self, desc, part, cfg):
        from . import _backend

        x, y = self._slice(desc, part)
        return _backend.logistic_pgd(x, y, cfg)

    def batch_grad(self, desc, part, pts):
        x, y = self._slice(desc, part)
        z = -y * np.einsum("mnd,md->mn", x, pts)
        coeff = -y * _sigmoid(z)
        return np.einsum("mn,mnd->md", coeff, x) / x.shape[1]

    def materialize(self, desc, machine, part):
        x, y = self._slice(desc, part)
        return [LogisticSample(x[machine, j], int(y[machine, j]))
                for j in range(x.shape[1])]


_KINDS = {
    "two_cubic": TwoCubicDistribution,
    "ridge": RidgeDistribution,
    "logistic": LogisticDistribution,
    "quadratic_bowl": QuadraticBowlDistribution,
}


def make_distribution(kind: str, d: int, **params) -> FunctionDistribution:
    """Construct one of the named distributions.

    two_cubic takes no parameters (d must be 1); ridge and logistic require
    ``theta_star``; quadratic_bowl requires ``centers`` and accepts
    ``weights`` and ``curvatures`` (default "auto").
    """
    if kind not in _KINDS:
        raise DomainError(f"unknown distribution kind {kind!r}; "
                          f"expected one of {sorted(_KINDS)}")
    if kind == "two_cubic":
        if d != 1:
            raise DimensionMismatch("two_cubic is one-dimensional")
        return TwoCubicDistribution()
    if kind == "quadratic_bowl":
        return QuadraticBowlDistribution(d, **params)
    return _KINDS[kind](d, **params)


def expected_gradient(dist: FunctionDistribution, theta, budget: int,
                      rng: np.random.Generator) -> GradientEstimate:
    """Gradient of the expected loss at an internal point.

    Uses the analytic oracle when the distribution has one, otherwise a
    Monte Carlo average over ``budget`` fresh samples with its standard error.
    """
    theta = check_point(theta, dist.d)
    analytic = dist.population_grad(theta)
    if analytic is not None:
        return GradientEstimate(np.asarray(analytic, dtype=float),
                                np.zeros(dist.d), True)
    if budget < 1:
        raise DomainError("Monte Carlo budget must be >= 1")
    grads = np.array([dist.sample(rng).grad(theta) for _ in range(budget)])
    stderr = grads.std(axis=0, ddof=1) / np.sqrt(budget) if budget > 1 else np.full(dist.d, np.inf)
    return GradientEstimate(grads.mean(axis=0), stderr, False)


# -- validity probes -------------------------------------------------------


def probe_gradient_consistency(dist: FunctionDistribution, rng, trials: int = 1000,
                               step: float = 1e-6) -> float:
    """Max relative error of central finite differences vs analytic gradients.

    Points are drawn away from the boundary so the difference stencil stays
    inside the cube.
    """
    worst = 0.0
    for _ in range(trials):
        f = dist.sample(rng)
        theta = rng.uniform(-0.99, 0.99, size=dist.d)
        g = f.grad(theta)
        for j in range(dist.d):
            hi = theta.copy()
            lo = theta.copy()
            hi[j] += step
            lo[j] -= step
            fd = (f.value(hi) - f.value(lo)) / (2.0 * step)
            scale = max(1.0, abs(g[j]))
            worst = max(worst, abs(fd - g[j]) / scale)
    return worst


def probe_convexity(dist: FunctionDistribution, rng, trials: int = 10_000) -> float:
    """Max violation of f(lam a + (1-lam) b) <= lam f(a) + (1-lam) f(b)."""
    worst = -np.inf
    for _ in range(trials):
        f = dist.sample(rng)
        a = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        b = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        lam = rng.random()
        mid = lam * a + (1.0 - lam) * b
        worst = max(worst, f.value(mid) - (lam * f.value(a) + (1.0 - lam) * f.value(b)))
    return worst


def probe_model_bounds(dist: FunctionDistribution, rng, trials: int = 10_000) -> dict:
    """Worst observed ratios against the three model bounds.

    Returns ratios normalized so that <= 1 means the bound holds:
    |f| / sqrt(d), ||grad f||, and the gradient Lipschitz quotient.
    """
    sqrt_d = np.sqrt(dist.d)
    worst = {"value": 0.0, "grad": 0.0, "lipschitz": 0.0}
    for _ in range(trials):
        f = dist.sample(rng)
        a = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        b = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        ga, gb = f.grad(a), f.grad(b)
        worst["value"] = max(worst["value"], abs(f.value(a)) / sqrt_d)
        worst["grad"] = max(worst["grad"], float(np.linalg.norm(ga)))
        gap = float(np.linalg.norm(a - b))
        if gap > 1e-9:
            worst["lipschitz"] = max(worst["lipschitz"],
                                     float(np.linalg.norm(ga - gb)) / gap)
    return worst


def probe_strong_convexity(dist: FunctionDistribution, rng, trials: int = 1000) -> float:
    """Min of [F(b) - F(a) - grad F(a)'(b-a)] / ||b-a||^2 minus known lambda.

    Nonnegative (up to rounding) when the declared strong-convexity constant
    is valid.  Requires analytic population value and gradient.
    """
    lam = dist.lambda_internal
    if lam is None:
        raise DomainError(f"{dist.name} has no declared strong-convexity constant")
    worst = np.inf
    for _ in range(trials):
        a = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        b = rng.uniform(CUBE_LO, CUBE_HI, size=dist.d)
        gap = float(np.linalg.norm(b - a))
        if gap < 1e-6:
            continue
        fa, fb = dist.population_value(a), dist.population_value(b)
        if fa is None:
            raise DomainError(f"{dist.name} has no analytic population value")
        growth = (fb - fa - float(dist.population_grad(a) @ (b - a))) / gap ** 2
        worst = min(worst, growth - lam)
    return worst


def empirical_minimizer(samples: Sequence[SampleFunction], cfg: SolverConfig):
    """Reference solve over a list of sample functions (see solver module)."""
    return minimize_empirical(samples, cfg)
