import math

import numpy as np
import pytest

from lifelong.errors import GenerationBudgetError
from lifelong.generators import (anchor_set_assumption_ok, planted_anchor_set,
                                 planted_anchored_conjunctions,
                                 planted_balanced_conjunctions,
                                 planted_polynomial_stream, planted_shared_subspace,
                                 planted_two_level, random_polynomial,
                                 shared_subspace_assumption_ok,
                                 two_level_assumption_ok)


class TestSharedSubspace:
    def test_exact_span_rank(self):
        stream = planted_shared_subspace(50, 5, 30, 0, gamma=0.025)
        rank = np.linalg.matrix_rank(stream.targets, tol=1e-8)
        assert rank == 5
        assert shared_subspace_assumption_ok(stream)

    def test_unit_targets(self):
        stream = planted_shared_subspace(12, 3, 20, 1, gamma=0.05)
        assert np.allclose(np.linalg.norm(stream.targets, axis=1), 1.0)

    def test_perturbed_stays_certified(self):
        stream = planted_shared_subspace(20, 4, 40, 2, gamma=0.1, perturb=True)
        assert stream.perturb_angle > 0
        assert shared_subspace_assumption_ok(stream)


class TestTwoLevel:
    def test_types_and_membership(self):
        stream = planted_two_level(30, 5, 3, 2, 25, 3)
        assert two_level_assumption_ok(stream)
        assert len(stream.task_types) == 25
        # prefix presents each type's axes in order
        assert stream.task_types[:6] == (0, 0, 1, 1, 2, 2)

    def test_axis_separation_enforced(self):
        stream = planted_two_level(30, 5, 3, 2, 25, 4, min_separation=0.3)
        axes = stream.targets[:6]
        for i in range(1, 5):  # until the k-span fills up
            prev = axes[:i]
            q, _ = np.linalg.qr(prev.T)
            resid = axes[i] - q[:, :i] @ (q[:, :i].T @ axes[i])
            assert np.linalg.norm(resid) >= math.sin(0.3) - 1e-9


class TestAnchoredConjunctions:
    def test_anchor_property(self):
        inst = planted_anchored_conjunctions(12, 4, 20, 5)
        assert inst.anchor_property_holds()

    def test_compositions_match_targets(self):
        inst = planted_anchored_conjunctions(10, 3, 15, 6)
        for t, comp in zip(inst.targets, inst.compositions):
            mask = 0
            for j in comp:
                mask |= inst.true_metafeatures[j].mask
            assert mask == t.mask

    def test_expose_singletons(self):
        inst = planted_anchored_conjunctions(10, 4, 12, 7, expose_singletons=True)
        singles = {c for c in inst.compositions if len(c) == 1}
        assert {(j,) for j in range(4)} <= singles


class TestBalancedConjunctions:
    def test_length_cap(self):
        beta = 0.1
        inst = planted_balanced_conjunctions(16, 4, 30, beta, 8)
        cap = int(math.floor(math.log2(1 / beta)))
        assert all(len(t) <= cap for t in inst.targets)
        assert inst.anchor_property_holds()

    def test_infeasible_beta_rejected(self):
        with pytest.raises(ValueError):
            planted_balanced_conjunctions(16, 4, 30, 0.4, 9)


class TestAnchorSet:
    def test_checker_is_independent_oracle(self):
        inst = planted_anchor_set(20, 5, 3, 2, 30, 10)
        assert anchor_set_assumption_ok(inst.features, inst.anchor_masks,
                                        inst.targets, 3, 2)

    def test_relevant_sets_reconstruct(self):
        inst = planted_anchor_set(18, 4, 3, 2, 25, 11)
        for t, rel in zip(inst.targets, inst.relevant):
            mask = 0
            for j in rel:
                mask |= inst.features[j].mask
            assert mask == t.mask
            assert len(rel) <= 3

    def test_checker_rejects_forced_violation(self):
        inst = planted_anchor_set(14, 4, 3, 2, 10, 12)
        # breaking an anchor (pointing it at variables outside the feature)
        bad_masks = list(inst.anchor_masks)
        outside = (~inst.features[0].mask) & ((1 << 14) - 1)
        bad_masks[0] = outside & -outside
        assert not anchor_set_assumption_ok(inst.features, tuple(bad_masks),
                                            inst.targets, 3, 2)


class TestPolynomialStreams:
    def test_l1_bounded(self):
        stream = planted_polynomial_stream(12, 4, 20, 10.0, 13, t_max=6)
        for task in stream.tasks:
            assert task.l1_norm <= 10.0 + 1e-9
            assert 1 <= task.term_count <= 6

    def test_terms_are_feature_products(self):
        stream = planted_polynomial_stream(10, 3, 10, 5.0, 14, t_max=4)
        feats = stream.layer.true_metafeatures
        for task in stream.tasks:
            for m in task.terms:
                # every term must be a union of some subset of the layer
                union = 0
                for f in feats:
                    if f.mask & ~m.mask == 0:
                        union |= f.mask
                assert union == m.mask

    def test_random_polynomial_distinct_terms(self):
        p = random_polynomial(10, 8, 15)
        assert p.term_count == 8
        assert min(abs(c) for _, c in p.term_items) >= 0.1

    def test_random_polynomial_capacity_guard(self):
        with pytest.raises(ValueError):
            random_polynomial(3, 20, 16)
