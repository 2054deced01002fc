import math

import numpy as np
import pytest

from lifelong.booleans import Monomial, TargetSet
from lifelong.conjunctions import (anchor_set_eq_session, build_significant_filter,
                                   eq_learn_conjunction, lifelong_eq_session,
                                   run_product_transfer, winnow_eq_learn,
                                   winnow_mistake_budget, WinnowState)
from lifelong.generators import (planted_anchor_set, planted_anchored_conjunctions,
                                 planted_balanced_conjunctions)
from lifelong.sampling import (ConjunctionEqOracle, Distribution, PredicateEqOracle,
                               conjunction_predictor, estimate_error)


def mono(vars_, n):
    return Monomial.from_vars(vars_, n)


class TestEqLearnConjunction:
    def test_full_target_one_query(self):
        t = mono(list(range(1, 6)), 5)
        learned, q = eq_learn_conjunction(ConjunctionEqOracle(t), 5)
        assert learned == t and q == 1

    def test_singleton_target(self):
        t = mono([1], 3)
        learned, q = eq_learn_conjunction(ConjunctionEqOracle(t), 3)
        assert learned == t and q <= 3

    def test_empty_target(self):
        t = mono([], 4)
        learned, q = eq_learn_conjunction(ConjunctionEqOracle(t), 4)
        assert learned == t and q <= 5

    def test_query_bound_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            t = Monomial(int(rng.integers(0, 1 << n)), n)
            learned, q = eq_learn_conjunction(ConjunctionEqOracle(t), n)
            assert learned == t and q <= n + 1

    def test_hypothesis_only_shrinks(self):
        t = mono([2], 6)
        oracle = ConjunctionEqOracle(t)
        # drive manually to watch monotonicity
        hyp = Monomial((1 << 6) - 1, 6)
        sizes = [len(hyp)]
        while True:
            x = oracle.query(hyp)
            if x is None:
                break
            keep = [v for v in hyp.vars if x[v - 1] >= 0.5]
            hyp = mono(keep, 6)
            sizes.append(len(hyp))
        assert sizes == sorted(sizes, reverse=True)


class TestLifelongEqSession:
    def test_repeat_target_cheap(self):
        n = 8
        t = mono([1, 2], n)
        tr = lifelong_eq_session([t] * 10, n)
        assert tr.scratch_count == 1
        # repeats identify the target over the one-element dictionary quickly
        for step in tr.steps[1:]:
            assert step.path == "reused" and step.queries <= 3

    def test_envelope_on_planted_streams(self):
        n, k, m = 10, 3, 40
        envelope = m * (k + 1) + (n ** 2 + k) * (n + 1)
        for seed in range(5):
            inst = planted_anchored_conjunctions(n, k, m, seed)
            tr = lifelong_eq_session(list(inst.targets), n, k)
            assert tr.total_queries <= envelope
            assert tr.scratch_count <= n ** 2 + k

    def test_inexpressible_target_goes_scratch_once(self):
        n = 6
        stream = [mono([1, 2], n), mono([3, 4], n), mono([5, 6], n)]
        tr = lifelong_eq_session(stream, n)
        assert tr.scratch_count == 3


class TestWinnow:
    def test_budget_formula(self):
        assert winnow_mistake_budget(1, 4) == pytest.approx(2 + 3 * (2 + 1))

    def test_single_feature_target(self):
        n = 4
        target = mono([1, 2], n)
        feats = [mono([1, 2], n), mono([3], n), mono([4], n), mono([2, 3], n)]
        codes = np.arange(1 << n)
        pts = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        grid = np.column_stack([f.evaluate_batch(pts) for f in feats]).astype(float)

        def feval(x):
            return np.array([1.0 if f.evaluate(x) else 0.0 for f in feats])

        oracle = PredicateEqOracle(target)
        state, converged = winnow_eq_learn(oracle, grid, feval, k=1)
        assert converged
        assert state.mistake_count <= winnow_mistake_budget(1, len(feats))

    def test_always_true_target(self):
        n = 3
        target = mono([], n)
        feats = [mono([1], n), mono([2], n)]
        codes = np.arange(1 << n)
        pts = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        grid = np.column_stack([f.evaluate_batch(pts) for f in feats]).astype(float)
        oracle = PredicateEqOracle(target)
        state, converged = winnow_eq_learn(
            oracle, grid, lambda x: np.array([1.0 if f.evaluate(x) else 0.0 for f in feats]), k=1)
        assert converged and state.mistake_count <= 1

    def test_weights_stay_positive(self):
        s = WinnowState.fresh(6)
        s.update(np.array([1, 0, 1, 0, 0, 1.0]), True)
        s.update(np.array([1, 1, 0, 0, 0, 0.0]), False)
        assert np.all(s.weights > 0)


class TestAnchorSetSession:
    def test_candidates_shrink_monotonically(self):
        inst = planted_anchor_set(10, 3, 3, 2, 30, 5)
        res = anchor_set_eq_session(list(inst.targets), 10, 2, 3)
        full = (1 << 10) - 1
        for fm in res.final_metafeatures:
            assert fm & ~full == 0

    def test_truth_contained_in_candidates(self):
        # invariant m_j <= m~_{y_j} for the planted anchors, at session end
        inst = planted_anchor_set(10, 3, 3, 2, 40, 6)
        res = anchor_set_eq_session(list(inst.targets), 10, 2, 3)
        anchor_index = {y: i for i, y in enumerate(res.candidate_anchors)}
        for mj, ym in zip(inst.features, inst.anchor_masks):
            cand = res.final_metafeatures[anchor_index[ym]]
            assert mj.mask & ~cand == 0

    def test_scratch_events_bounded(self):
        inst = planted_anchor_set(12, 4, 3, 2, 50, 7)
        res = anchor_set_eq_session(list(inst.targets), 12, 2, 3)
        assert res.transcript.scratch_count <= 12 * 4
        assert res.scratch_shrank_every_time

    def test_repeat_target_one_scratch(self):
        inst = planted_anchor_set(10, 3, 3, 2, 5, 8)
        t = inst.targets.targets[0]
        res = anchor_set_eq_session([t] * 6, 10, 2, 3)
        assert res.transcript.scratch_count <= 1


class TestSignificantFilter:
    def test_fair_coin_keeps_everything(self):
        dist = Distribution.product_bernoulli(np.full(8, 0.5))
        f = build_significant_filter(dist, 0.1, 0.05, 0)
        assert f.insignificant == frozenset()

    def test_stuck_variable_filtered(self):
        n = 8
        eps = 0.1
        p = np.full(n, 0.5)
        p[3] = 1.0 - eps / (8.0 * n)  # zero-rate eps/8n, below the eps/4n cut
        dist = Distribution.product_bernoulli(p)
        f = build_significant_filter(dist, eps, 0.05, 1)
        assert 4 in f.insignificant

    def test_keep_rows(self):
        f = build_significant_filter(
            Distribution.product_bernoulli(np.array([0.5, 1.0 - 1e-4])), 0.1, 0.05, 2)
        X = np.array([[1, 1], [1, 0], [0, 1.0]])
        if f.insignificant == frozenset({2}):
            assert f.keep_rows(X).tolist() == [True, False, True]


class TestProductTransfer:
    def test_planted_run_low_error(self):
        n, k, m, eps = 12, 3, 25, 0.1
        dist = Distribution.product_bernoulli(np.full(n, 0.5))
        inst = planted_balanced_conjunctions(n, k, m, 0.1, 3)
        res = run_product_transfer(list(inst.targets), dist, eps, 0.05, k, 4)
        assert res.scratch_count <= len(inst.targets)
        for i, (hyp, target) in enumerate(zip(res.hypotheses, inst.targets)):
            err, _ = estimate_error(conjunction_predictor(hyp),
                                    conjunction_predictor(target), dist, 5000, (5, i))
            assert err <= eps

    def test_scratch_path_exactness(self):
        # scratch-learned hypotheses equal the target on significant variables
        n, k, m = 10, 3, 15
        dist = Distribution.product_bernoulli(np.full(n, 0.5))
        inst = planted_balanced_conjunctions(n, k, m, 0.1, 9)
        res = run_product_transfer(list(inst.targets), dist, 0.1, 0.05, k, 10)
        for out, hyp, target in zip(res.outcomes, res.hypotheses, inst.targets):
            if out.path == "scratch":
                assert hyp == target

    def test_expressible_tasks_draw_no_scratch_samples(self):
        n, k = 10, 2
        dist = Distribution.product_bernoulli(np.full(n, 0.5))
        t = Monomial.from_vars([1, 2], n)
        res = run_product_transfer([t, t, t], dist, 0.1, 0.05, k, 11)
        s2 = res.outcomes[1].samples
        assert res.outcomes[0].path == "scratch"
        assert res.outcomes[1].path == "reused"
        assert res.outcomes[2].samples == s2
