import math

import numpy as np
import pytest

from lifelong.errors import SampleBudgetError
from lifelong.halfspaces import (learn_from_scratch, learn_in_subspace,
                                 learn_in_subspace_fine, learn_tau_sparse)
from lifelong.sampling import Distribution, HalfspaceOracle


def angle_to(direction, target):
    d = abs(float(direction @ target))
    if d > 1 - 1e-8:
        return math.sqrt(max(0.0, 2 * (1 - d)))
    return math.acos(min(1.0, d))


def random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


class TestLearnFromScratch:
    def test_moderate_accuracy_many_seeds(self):
        # holdout-style check: validated error estimate within the contract
        failures = 0
        for s in range(30):
            a = random_unit(np.random.default_rng(100 + s), 20)
            o = HalfspaceOracle(Distribution.gaussian(20), a, s)
            h = learn_from_scratch(o, 0.05, 0.05)
            failures += int(angle_to(h.direction, a) / math.pi > 0.05)
        assert failures <= 1

    def test_error_decreases_with_scale(self):
        rng = np.random.default_rng(0)
        a = random_unit(rng, 10)
        angles = []
        for eps_acc in (0.05, 0.005, 0.0005):
            o = HalfspaceOracle(Distribution.gaussian(10), a, 7)
            h = learn_from_scratch(o, eps_acc, 0.02)
            angles.append(angle_to(h.direction, a))
        assert angles[2] < angles[0]
        assert angles[2] <= math.pi * 0.0005

    def test_averaging_concentration_small_n(self):
        a = np.array([1.0, 0.0])
        o = HalfspaceOracle(Distribution.gaussian(2), a, 3)
        h = learn_from_scratch(o, 0.006, 0.02)
        assert angle_to(h.direction, a) <= 0.02

    def test_samples_counted_on_oracle(self):
        a = random_unit(np.random.default_rng(1), 8)
        o = HalfspaceOracle(Distribution.gaussian(8), a, 2)
        h = learn_from_scratch(o, 0.05, 0.05)
        assert h.samples_used == o.query_count

    def test_budget_failure_is_explicit(self):
        a = random_unit(np.random.default_rng(2), 30)
        o = HalfspaceOracle(Distribution.gaussian(30), a, 3)
        with pytest.raises(SampleBudgetError):
            learn_from_scratch(o, 1e-4, 0.05, max_samples=5000)

    def test_uniform_ball_supported(self):
        a = random_unit(np.random.default_rng(4), 6)
        o = HalfspaceOracle(Distribution.uniform_ball(6), a, 5)
        h = learn_from_scratch(o, 0.03, 0.05)
        assert angle_to(h.direction, a) <= math.pi * 0.03

    def test_bernoulli_rejected(self):
        dist = Distribution.product_bernoulli(np.full(4, 0.5))
        o = HalfspaceOracle(dist, np.array([1.0, 0, 0, 0]), 0)
        with pytest.raises(ValueError):
            learn_from_scratch(o, 0.05, 0.05)


class TestLearnInSubspace:
    def _planted(self, n=30, k=4, seed=0, off_angle=0.0):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((n, k)))
        q = q[:, :k].T
        c = random_unit(rng, k)
        target = c @ q
        if off_angle > 0:
            z = random_unit(rng, n)
            z -= q.T @ (q @ z)
            z /= np.linalg.norm(z)
            target = math.cos(off_angle) * target + math.sin(off_angle) * z
        return q, target

    def test_target_in_span_succeeds(self):
        q, target = self._planted(seed=1)
        o = HalfspaceOracle(Distribution.gaussian(30), target, 11)
        h = learn_in_subspace(q, o, 0.1, 0.02)
        assert h is not None
        assert h.achieved_error_estimate <= 0.05
        # coefficients reproduce the direction over the given rows
        assert np.allclose(h.coefficients @ q, h.direction, atol=1e-8)

    def test_orthogonal_target_fails(self):
        q, _ = self._planted(seed=2)
        rng = np.random.default_rng(5)
        z = random_unit(rng, 30)
        z -= q.T @ (q @ z)
        z /= np.linalg.norm(z)
        o = HalfspaceOracle(Distribution.gaussian(30), z, 12)
        assert learn_in_subspace(q, o, 0.1, 0.02) is None

    def test_full_basis_behaves_like_scratch(self):
        rng = np.random.default_rng(8)
        target = random_unit(rng, 6)
        o = HalfspaceOracle(Distribution.gaussian(6), target, 13)
        h = learn_in_subspace(np.eye(6), o, 0.1, 0.02)
        assert h is not None and angle_to(h.direction, target) <= math.pi * 0.1

    def test_nonorthogonal_rows_handled(self):
        # rows span a plane but are highly correlated
        rows = np.array([[1.0, 0.0, 0.0, 0.0], [0.999, 0.04, 0.0, 0.0]])
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        target = np.array([0.0, 1.0, 0.0, 0.0])
        o = HalfspaceOracle(Distribution.gaussian(4), target, 14)
        h = learn_in_subspace(rows, o, 0.1, 0.02)
        assert h is not None

    def test_fine_variant_reaches_small_eps(self):
        q, target = self._planted(n=20, k=3, seed=3)
        o = HalfspaceOracle(Distribution.gaussian(20), target, 15)
        h = learn_in_subspace_fine(q, o, 3e-4, 0.02)
        assert h is not None
        assert angle_to(h.direction, target) <= math.pi * 3e-4

    def test_fine_variant_rejects_far_target(self):
        q, target = self._planted(n=20, k=3, seed=4, off_angle=0.5)
        o = HalfspaceOracle(Distribution.gaussian(20), target, 16)
        assert learn_in_subspace_fine(q, o, 3e-4, 0.02, max_samples=2_000_000) is None


class TestLearnTauSparse:
    def _setup(self, seed=0):
        rng = np.random.default_rng(seed)
        n, k, r = 20, 4, 5
        w, _ = np.linalg.qr(rng.standard_normal((n, k)))
        w = w[:, :k].T
        u_rows = np.array([random_unit(rng, k) for _ in range(r)])
        return n, k, r, w, u_rows

    def test_single_row_target(self):
        n, k, r, w, u = self._setup(1)
        target = u[2] @ w
        target /= np.linalg.norm(target)
        o = HalfspaceOracle(Distribution.gaussian(n), target, 17)
        h = learn_tau_sparse(u, w, 1, o, 0.1, 0.02)
        assert h is not None and h.subset == (2,)
        assert np.count_nonzero(h.coefficients) == 1

    def test_pair_target(self):
        n, k, r, w, u = self._setup(2)
        mix = 0.8 * u[1] + 0.6 * u[3]
        target = mix @ w
        target /= np.linalg.norm(target)
        o = HalfspaceOracle(Distribution.gaussian(n), target, 18)
        h = learn_tau_sparse(u, w, 2, o, 0.1, 0.02)
        assert h is not None
        assert len(h.subset) <= 2
        assert h.achieved_error_estimate <= 0.05

    def test_orthogonal_target_fails_all_subsets(self):
        n, k, r, w, u = self._setup(3)
        rng = np.random.default_rng(9)
        z = random_unit(rng, n)
        z -= w.T @ (w @ z)
        z /= np.linalg.norm(z)
        o = HalfspaceOracle(Distribution.gaussian(n), z, 19)
        assert learn_tau_sparse(u, w, 2, o, 0.1, 0.02) is None
