"""Distributions, labeled-example oracles, Monte-Carlo error estimation, and
equivalence/membership-query oracles.

Every operation is a pure function of its inputs and seed.  Oracles carry a
mutable query counter and are meant to be owned by a single experiment
thread; the samplers themselves are stateless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .booleans import Monomial
from .errors import OracleInconsistencyError, SampleBudgetError

GAUSSIAN = "gaussian"
UNIFORM_BALL = "uniform_ball"
PRODUCT_BERNOULLI = "product_bernoulli"


@dataclass(frozen=True)
class Distribution:
    """Isotropic continuous distributions and product distributions on bits.

    ``uniform_ball`` is the uniform ball scaled by sqrt(n+2) so its covariance
    is the identity (keeps the angle/disagreement sandwich applicable).
    """

    kind: str
    dim: int
    p: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, UNIFORM_BALL, PRODUCT_BERNOULLI):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == PRODUCT_BERNOULLI:
            p = np.asarray(self.p, dtype=np.float64)
            if p.shape != (self.dim,) or np.any(p <= 0) or np.any(p >= 1):
                raise ValueError("product_bernoulli needs p in (0,1)^n")
            p = p.copy()
            p.flags.writeable = False
            object.__setattr__(self, "p", p)
        elif self.p is not None:
            raise ValueError("p is only meaningful for product_bernoulli")

    @classmethod
    def gaussian(cls, dim: int) -> "Distribution":
        return cls(GAUSSIAN, dim)

    @classmethod
    def uniform_ball(cls, dim: int) -> "Distribution":
        return cls(UNIFORM_BALL, dim)

    @classmethod
    def product_bernoulli(cls, p) -> "Distribution":
        p = np.asarray(p, dtype=np.float64)
        return cls(PRODUCT_BERNOULLI, p.size, p)

    @property
    def ball_radius(self) -> float:
        return math.sqrt(self.dim + 2)

    def is_rotationally_symmetric(self) -> bool:
        return self.kind in (GAUSSIAN, UNIFORM_BALL)


def _draw(dist: Distribution, rng: np.random.Generator, count: int) -> np.ndarray:
    n = dist.dim
    if dist.kind == GAUSSIAN:
        return rng.standard_normal((count, n))
    if dist.kind == UNIFORM_BALL:
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.random(count) ** (1.0 / n)
        return dist.ball_radius * radii[:, None] * g
    return (rng.random((count, n)) < dist.p).astype(np.float64)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def sample(dist: Distribution, seed, count: int) -> np.ndarray:
    """Deterministic (count, n) sample for the given seed."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return _draw(dist, np.random.default_rng(seed), count)


def band_mass(dist: Distribution, half_width: float) -> float:
    """P[|u . x| <= half_width] for any unit u, by rotational symmetry."""
    if dist.kind == GAUSSIAN:
        return math.erf(half_width / math.sqrt(2.0))
    if dist.kind == UNIFORM_BALL:
        r = dist.ball_radius
        b = min(half_width, r)
        z = np.linspace(0.0, r, 20001)
        dens = np.power(np.maximum(1.0 - (z / r) ** 2, 0.0), (dist.dim - 1) / 2.0)
        total = np.trapezoid(dens, z)
        cut = np.trapezoid(np.where(z <= b, dens, 0.0), z)
        return float(cut / total)
    raise ValueError("band mass needs a rotationally symmetric distribution")


def _truncated_normal(rng: np.random.Generator, half_width: float, count: int) -> np.ndarray:
    """Exact N(0,1) conditioned on [-b, b], vectorized rejection."""
    out = np.empty(count)
    filled = 0
    if half_width <= 1.5:
        # uniform proposal; accept with prob exp(-z^2/2), acceptance >= e^{-b^2/2}
        while filled < count:
            todo = count - filled
            z = rng.uniform(-half_width, half_width, size=int(todo * 1.4) + 16)
            keep = z[rng.random(z.size) < np.exp(-0.5 * z * z)]
            take = keep[: todo]
            out[filled:filled + take.size] = take
            filled += take.size
    else:
        while filled < count:
            z = rng.standard_normal(2 * (count - filled) + 16)
            keep = z[np.abs(z) <= half_width][: count - filled]
            out[filled:filled + keep.size] = keep
            filled += keep.size
    return out


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: int


class HalfspaceOracle:
    """Labeled examples for a hidden homogeneous halfspace sign(a . x).

    ``query_count`` counts every labeled example handed out, including
    holdout/validation draws; drivers read it for sample accounting.
    """

    def __init__(self, dist: Distribution, target, seed):
        self.dist = dist
        self.target = np.asarray(getattr(target, "coords", target), dtype=np.float64)
        if self.target.shape != (dist.dim,):
            raise ValueError("target dimension does not match the distribution")
        self.rng = np.random.default_rng(seed)
        self.query_count = 0

    @property
    def dim(self) -> int:
        return self.dist.dim

    def label(self, X: np.ndarray) -> np.ndarray:
        s = X @ self.target
        return np.where(s >= 0.0, 1.0, -1.0)

    def draw(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        X = _draw(self.dist, self.rng, count)
        self.query_count += count
        return X, self.label(X)

    def draw_band(self, direction: np.ndarray, half_width: float,
                  count: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw from the distribution conditioned on |direction . x| <= half_width.

        For the Gaussian the conditional law factorizes exactly (truncated
        normal along the direction, standard normal on the complement), so no
        rejection against the ambient stream is needed.  Other kinds fall back
        to rejection filtering.
        """
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        if self.dist.kind == GAUSSIAN:
            z = _truncated_normal(self.rng, half_width, count)
            g = self.rng.standard_normal((count, self.dim))
            g -= np.outer(g @ d, d)
            X = g + np.outer(z, d)
            self.query_count += count
            return X, self.label(X)
        if self.dist.kind == UNIFORM_BALL:
            mass = band_mass(self.dist, half_width)
            if mass <= 0 or count / mass > 5e7:
                raise SampleBudgetError(
                    f"band of mass {mass:.3g} too narrow for rejection sampling")
            rows = []
            have = 0
            while have < count:
                batch = int(min(5e6, (count - have) / mass * 1.3 + 64))
                X = _draw(self.dist, self.rng, batch)
                keep = X[np.abs(X @ d) <= half_width]
                rows.append(keep[: count - have])
                have += rows[-1].shape[0]
            X = np.vstack(rows)
            self.query_count += count
            return X, self.label(X)
        raise ValueError("band draws need a rotationally symmetric distribution")

    def stream(self) -> Iterator[LabeledExample]:
        while True:
            X, y = self.draw(1)
            yield LabeledExample(X[0], int(y[0]))


class ConjunctionOracle:
    """Labeled examples for a hidden monotone conjunction over bits."""

    def __init__(self, dist: Distribution, target: Monomial, seed):
        if dist.kind != PRODUCT_BERNOULLI:
            raise ValueError("conjunction oracles draw from product distributions")
        if dist.dim != target.n:
            raise ValueError("target dimension does not match the distribution")
        self.dist = dist
        self.target = target
        self.rng = np.random.default_rng(seed)
        self.query_count = 0

    @property
    def dim(self) -> int:
        return self.dist.dim

    def label(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.target.evaluate_batch(X), 1.0, -1.0)

    def draw(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        X = _draw(self.dist, self.rng, count)
        self.query_count += count
        return X, self.label(X)

    def draw_unlabeled(self, count: int) -> np.ndarray:
        X = _draw(self.dist, self.rng, count)
        self.query_count += count
        return X

    def stream(self) -> Iterator[LabeledExample]:
        while True:
            X, y = self.draw(1)
            yield LabeledExample(X[0], int(y[0]))


def labeled_stream(dist: Distribution, target, seed) -> Iterator[LabeledExample]:
    """Iterator of labeled examples; dispatches on the target type."""
    if isinstance(target, Monomial):
        return ConjunctionOracle(dist, target, seed).stream()
    return HalfspaceOracle(dist, target, seed).stream()


def estimate_error(h: Callable[[np.ndarray], np.ndarray],
                   target: Callable[[np.ndarray], np.ndarray],
                   dist: Distribution, samples: int, seed) -> tuple[float, float]:
    """Monte-Carlo disagreement estimate with its binomial standard error."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    X = sample(dist, seed, samples)
    disagree = float(np.mean(np.asarray(h(X)) != np.asarray(target(X))))
    se = math.sqrt(max(disagree * (1.0 - disagree), 1.0 / samples) / samples)
    return disagree, se


def halfspace_predictor(direction) -> Callable[[np.ndarray], np.ndarray]:
    d = np.asarray(getattr(direction, "coords", direction), dtype=np.float64)
    return lambda X: np.where(X @ d >= 0.0, 1.0, -1.0)


def conjunction_predictor(m: Monomial) -> Callable[[np.ndarray], np.ndarray]:
    return lambda X: np.where(m.evaluate_batch(X), 1.0, -1.0)


def _bits_to_array(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=np.float64)


class ConjunctionEqOracle:
    """Equivalence queries for a hidden monotone conjunction.

    Counterexamples come from a deterministic canonical candidate list: the
    indicator of the hypothesis's variable set, of the target's set, and all
    single-bit flips of both, in that order.  That list always separates two
    distinct conjunctions, so equivalence is exact.
    """

    def __init__(self, target: Monomial):
        self.target = target
        self.query_count = 0

    @property
    def n(self) -> int:
        return self.target.n

    def query(self, hypothesis: Monomial) -> np.ndarray | None:
        if hypothesis.n != self.n:
            raise ValueError("hypothesis over a different variable set")
        self.query_count += 1
        if hypothesis.mask == self.target.mask:
            return None
        n = self.n
        cands = [hypothesis.mask, self.target.mask]
        for base in (hypothesis.mask, self.target.mask):
            for i in range(n):
                cands.append(base ^ (1 << i))
        for cm in cands:
            x = _bits_to_array(cm, n)
            if hypothesis.evaluate(x) != self.target.evaluate(x):
                return x
        raise OracleInconsistencyError(
            "distinct conjunctions not separated by canonical candidates")


class PredicateEqOracle:
    """Equivalence queries for a conjunction target against arbitrary
    hypothesis predicates, decided by exhaustive scan of {0,1}^n.

    Used for threshold (multiplicative-weights) hypotheses where structural
    comparison is unavailable; guarded to small n.
    """

    def __init__(self, target: Monomial, max_dim: int = 20):
        if target.n > max_dim:
            raise ValueError(f"exhaustive oracle limited to n <= {max_dim}")
        self.target = target
        self.query_count = 0
        codes = np.arange(1 << target.n, dtype=np.int64)
        self.points = ((codes[:, None] >> np.arange(target.n)[None, :]) & 1).astype(np.float64)
        self.target_truth = target.evaluate_batch(self.points)

    def query(self, predicate: Callable[[np.ndarray], np.ndarray]) -> np.ndarray | None:
        self.query_count += 1
        pred = np.asarray(predicate(self.points), dtype=bool)
        mism = np.flatnonzero(pred != self.target_truth)
        if mism.size == 0:
            return None
        return self.points[mism[0]].copy()


class PolynomialEqOracle:
    """Equivalence queries for a hidden multilinear polynomial.

    Equivalence is decided exactly by coefficient-map comparison; when maps
    differ, the counterexample is the first indicator vector (subsets of the
    union of supports, ordered by size then lexicographically) on which the
    two polynomials disagree.
    """

    def __init__(self, target):
        self.target = target
        self.query_count = 0

    def query(self, hypothesis) -> np.ndarray | None:
        self.query_count += 1
        if self.target.same_terms(hypothesis):
            return None
        support = 0
        for m in list(self.target.terms) + list(hypothesis.terms):
            support |= m.mask
        bits = [b for b in range(self.target.n) if (support >> b) & 1]
        for size in range(len(bits) + 1):
            import itertools as _it
            for combo in _it.combinations(bits, size):
                mask = 0
                for b in combo:
                    mask |= 1 << b
                x = _bits_to_array(mask, self.target.n)
                if abs(self.target.evaluate(x) - hypothesis.evaluate(x)) > 1e-12:
                    return x
        raise OracleInconsistencyError("coefficient maps differ but no witness found")


class MqOracle:
    """Membership queries: exact evaluation of a hidden multilinear polynomial."""

    def __init__(self, target):
        self.target = target
        self.query_count = 0

    @property
    def n(self) -> int:
        return self.target.n

    def query(self, x) -> float:
        self.query_count += 1
        return float(self.target.evaluate(np.asarray(x, dtype=np.float64)))

    def query_mask(self, mask: int) -> float:
        self.query_count += 1
        return float(self.target.evaluate_mask(mask))
