import math

import numpy as np
import pytest

from lifelong.geometry import AngleBudget
from lifelong.generators import planted_shared_subspace, planted_two_level
from lifelong.linear_lifelong import (LinearRepState, gamma_effective_dimension_lower_bound,
                                      read_linear_rep, run_single_level, run_two_level,
                                      write_linear_rep)
from lifelong.sampling import Distribution, HalfspaceOracle, sample


def oracles_for(stream, dist, seed):
    seqs = np.random.SeedSequence(seed).spawn(stream.targets.shape[0])
    return [HalfspaceOracle(dist, stream.targets[i], s) for i, s in enumerate(seqs)]


class TestGammaEffectiveDimension:
    def test_orthonormal_frame_counts_fully(self):
        eye = np.eye(5)
        assert gamma_effective_dimension_lower_bound(eye, 0.5) == 5

    def test_identical_targets_count_once(self):
        v = np.zeros(4)
        v[0] = 1.0
        assert gamma_effective_dimension_lower_bound([v] * 10, 0.01) == 1

    def test_targets_in_planted_span_bounded_by_k(self):
        stream = planted_shared_subspace(20, 4, 50, 3, gamma=0.05)
        assert gamma_effective_dimension_lower_bound(stream.targets, 0.05) <= 4


class TestSingleLevelDriver:
    def test_identical_targets_one_scratch(self):
        n = 15
        rng = np.random.default_rng(0)
        a = rng.standard_normal(n)
        a /= np.linalg.norm(a)
        dist = Distribution.gaussian(n)
        seqs = np.random.SeedSequence(1).spawn(8)
        oracles = [HalfspaceOracle(dist, a, s) for s in seqs]
        budget = AngleBudget.single_level(0.1, 2)
        state, outcomes = run_single_level(oracles, budget)
        assert state.k == 1
        assert [o.path for o in outcomes].count("scratch") == 1

    def test_planted_stream_bounds(self):
        n, k, m = 24, 3, 40
        budget = AngleBudget.single_level(0.1, k)
        stream = planted_shared_subspace(n, k, m, 5, budget.gamma)
        dist = Distribution.gaussian(n)
        state, outcomes = run_single_level(oracles_for(stream, dist, 6), budget)
        assert state.k <= k
        assert len(state.scratch_indices) <= k
        assert state.total_samples == sum(o.samples for o in outcomes)
        # reconstruction: per-task rows live in the learned span
        A = state.predictor_matrix()
        assert A.shape == (m, n)

    def test_predictions_match_targets(self):
        n, k, m = 20, 3, 15
        budget = AngleBudget.single_level(0.1, k)
        stream = planted_shared_subspace(n, k, m, 7, budget.gamma)
        dist = Distribution.gaussian(n)
        state, outcomes = run_single_level(oracles_for(stream, dist, 8), budget)
        X = sample(dist, 9, 4000)
        for i in range(m):
            truth = np.where(X @ stream.targets[i] >= 0, 1.0, -1.0)
            err = float(np.mean(state.predict(i, X) != truth))
            assert err <= 0.1


class TestTwoLevelDriver:
    def test_planted_two_level_bounds(self):
        n, k, r, tau, m = 24, 4, 3, 2, 30
        budget = AngleBudget.two_level(0.15, k, tau)
        stream = planted_two_level(n, k, r, tau, m, 11)
        dist = Distribution.gaussian(n)
        state, outcomes = run_two_level(oracles_for(stream, dist, 12), budget)
        assert state.k <= k
        assert state.r <= tau * r
        paths = {o.path for o in outcomes}
        assert "reused_level2" in paths and "scratch" in paths

    def test_degenerates_to_single_level(self):
        # r=1 type spanning the whole k-space with tau=k behaves like one level
        n, k, m = 18, 2, 12
        budget = AngleBudget.two_level(0.15, k, k)
        stream = planted_two_level(n, k, 1, k, m, 13)
        dist = Distribution.gaussian(n)
        state, outcomes = run_two_level(oracles_for(stream, dist, 14), budget)
        assert state.k <= k and state.r <= k


class TestSerialization:
    def _small_state(self):
        w = np.array([[1.0, 0.0, 0.0], [0.0, 1 / 3, 2.0 ** 0.5 / 3 * 2]])
        w[1] /= np.linalg.norm(w[1])
        c = np.array([[1.0, 0.0], [0.25, -0.75]])
        return LinearRepState(n=3, w_rows=w, c_rows=c, scratch_indices=(0,),
                              total_samples=123)

    def test_roundtrip_bit_exact(self, tmp_path):
        state = self._small_state()
        path = tmp_path / "state.linrep"
        write_linear_rep(state, path)
        loaded = read_linear_rep(path)
        assert np.array_equal(state.w_rows, loaded.w_rows)
        assert np.array_equal(state.c_rows, loaded.c_rows)
        assert loaded.u_rows is None

    def test_roundtrip_two_level(self, tmp_path):
        state = self._small_state()
        state.u_rows = np.array([[0.1, 0.9], [1.0, 0.0], [-0.3, 0.7]])
        state.c_rows = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
        path = tmp_path / "state2.linrep"
        write_linear_rep(state, path)
        loaded = read_linear_rep(path)
        assert np.array_equal(state.u_rows, loaded.u_rows)
        probe = np.random.default_rng(0).standard_normal((100, 3))
        for i in range(2):
            assert np.array_equal(state.predict(i, probe), loaded.predict(i, probe))

    def test_header_content(self, tmp_path):
        state = self._small_state()
        path = tmp_path / "state3.linrep"
        state.save(path)
        head = path.read_text().splitlines()[0]
        assert head == "LINREP v1 n=3 k=2 r=0"
