import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lifelong.booleans import (Dictionary, Monomial, TargetSet,
                               brute_force_set_basis, count_implication_edges,
                               covered_vars, online_session, reconstruction_ok,
                               refinement_report, represents, solve_consistency)
from lifelong.errors import CombinatorialBudgetError
from lifelong.generators import planted_anchored_conjunctions


def mono(vars_, n):
    return Monomial.from_vars(vars_, n)


def ts(*var_lists, n):
    return TargetSet(tuple(mono(v, n) for v in var_lists))


class TestMonomial:
    def test_vars_roundtrip(self):
        m = mono([5, 1, 2], 6)
        assert m.vars == (1, 2, 5)
        assert len(m) == 3

    def test_subset_and_ops(self):
        a, b = mono([1, 2], 4), mono([1, 2, 3], 4)
        assert a.subset_of(b) and not b.subset_of(a)
        assert a.union(b).vars == (1, 2, 3)
        assert a.intersection(b).vars == (1, 2)

    def test_evaluate(self):
        m = mono([1, 3], 3)
        assert m.evaluate([1, 0, 1]) and not m.evaluate([1, 1, 0])
        assert mono([], 3).evaluate([0, 0, 0])

    def test_batch_evaluate(self):
        m = mono([2], 3)
        X = np.array([[0, 1, 0], [1, 0, 1]])
        assert m.evaluate_batch(X).tolist() == [True, False]

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            mono([5], 4)

    @given(st.integers(1, 12), st.integers(0, 2 ** 32))
    @settings(max_examples=50, deadline=None)
    def test_subset_matches_set_semantics(self, n, seed):
        rng = np.random.default_rng(seed)
        a = Monomial(int(rng.integers(0, 1 << n)), n)
        b = Monomial(int(rng.integers(0, 1 << n)), n)
        assert a.subset_of(b) == set(a.vars).issubset(b.vars)


class TestCoveredVars:
    def test_empty_dictionary(self):
        assert covered_vars(mono([1, 2], 4), Dictionary(())) == set()

    def test_target_in_dictionary(self):
        t = mono([1, 2], 4)
        assert covered_vars(t, Dictionary((t,))) == {1, 2}

    def test_partial_cover(self):
        t = mono([1, 2, 3, 4], 5)
        d = Dictionary((mono([1, 2], 5), mono([3, 5], 5)))
        assert covered_vars(t, d) == {1, 2}


class TestSolveConsistency:
    def test_single_target(self):
        out = solve_consistency(ts([1, 2, 3], n=4))
        assert [m.vars for m in out] == [(1, 2, 3)]

    def test_hand_trace(self):
        out = solve_consistency(ts([1, 2], [2, 3, 4], [1, 2, 3, 4], n=4))
        assert [m.vars for m in out] == [(1, 2), (2, 3, 4)]

    def test_all_unions_of_anchored_features(self):
        n, k = 9, 4
        feats = [mono([1, 5], n), mono([2, 5], n), mono([3, 6], n), mono([4], n)]
        targets = []
        for mask in range(1, 1 << k):
            m = Monomial(0, n)
            for j in range(k):
                if (mask >> j) & 1:
                    m = m.union(feats[j])
            targets.append(m)
        out = solve_consistency(TargetSet(tuple(targets)))
        assert len(out) == k
        assert reconstruction_ok(TargetSet(tuple(targets)), out)

    def test_duplicates_allowed(self):
        out = solve_consistency(ts([1, 2], [1, 2], n=3))
        assert len(out) == 1

    def test_empty_target_never_drives_loop(self):
        out = solve_consistency(ts([], [1], n=2))
        assert [m.vars for m in out] == [(1,)]

    def test_deterministic(self):
        t = ts([1, 2, 3], [2, 3], [3, 4], n=5)
        assert solve_consistency(t) == solve_consistency(t)

    def test_planted_instances_stay_within_k(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, k = int(rng.integers(6, 12)), int(rng.integers(2, 5))
            inst = planted_anchored_conjunctions(n, k, int(rng.integers(3, 12)),
                                                 rng.integers(0, 2 ** 63))
            out = solve_consistency(inst.targets)
            assert len(out) <= k
            assert reconstruction_ok(inst.targets, out)
            rep = refinement_report(inst, out)
            assert rep["contains_true_ok"] and rep["not_too_specific_ok"]
            assert rep["anchor_closure_ok"]


class TestBruteForce:
    def test_two_singletons_and_union(self):
        out = brute_force_set_basis(ts([1], [2], [1, 2], n=2), 3)
        assert len(out) == 2

    def test_single_target(self):
        out = brute_force_set_basis(ts([1, 2, 5], n=5), 2)
        assert len(out) == 1

    def test_matches_consistency_on_hand_trace(self):
        t = ts([1, 2], [2, 3, 4], [1, 2, 3, 4], n=4)
        assert len(brute_force_set_basis(t, 3)) == len(solve_consistency(t))

    def test_budget_guard(self):
        with pytest.raises(CombinatorialBudgetError):
            brute_force_set_basis(ts(list(range(1, 18)), n=17), 3)

    def test_none_when_kmax_too_small(self):
        out = brute_force_set_basis(ts([1], [2], [3], n=3), 2)
        assert out is None


class TestOnlineSession:
    def test_repeated_target_single_scratch(self):
        tr = online_session([mono([1, 2], 4)] * 7, n=4)
        assert tr.scratch_count == 1

    def test_potential_strictly_increases_at_scratch(self):
        rng = np.random.default_rng(11)
        inst = planted_anchored_conjunctions(10, 3, 60, 17)
        tr = online_session(list(inst.targets), n=10)
        prev = None
        for step in tr.steps:
            if not step.covered:
                if prev is not None:
                    assert step.potential > prev
                prev = step.potential
        assert tr.scratch_count <= 10 ** 2 + 3

    def test_edges_complete_graph_initially(self):
        assert count_implication_edges(TargetSet(()), 5) == 20

    def test_scratch_changes_edge_or_dictionary(self):
        inst = planted_anchored_conjunctions(8, 3, 40, 23)
        tr = online_session(list(inst.targets), n=8)
        prev_edges, prev_d = count_implication_edges(TargetSet(()), 8), 0
        for step in tr.steps:
            if not step.covered:
                assert step.edges < prev_edges or step.dictionary_size > prev_d
            prev_edges, prev_d = step.edges, step.dictionary_size


class TestRepresents:
    def test_union_representation(self):
        d = Dictionary((mono([1], 3), mono([2], 3)))
        assert represents(mono([1, 2], 3), d)
        assert not represents(mono([1, 3], 3), d)
