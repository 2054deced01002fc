import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lifelong.errors import DimensionMismatchError, EmptyBasisError
from lifelong.geometry import (AngleBudget, OrthonormalBasis, UnitVector,
                               angle_between_vectors, angle_subspace_to_subspace,
                               angle_vector_to_subspace, check_span_perturbation,
                               extend_basis)


def unit(*coords):
    return UnitVector.normalized(np.array(coords, dtype=float))


class TestUnitVector:
    def test_norm_invariant_enforced(self):
        with pytest.raises(ValueError):
            UnitVector(np.array([1.0, 1.0]))

    def test_normalized_factory(self):
        v = UnitVector.normalized([3.0, 4.0])
        assert np.allclose(v.coords, [0.6, 0.8])

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            UnitVector.normalized([0.0, 0.0])


class TestAngleBetweenVectors:
    def test_orthogonal_axes(self):
        assert angle_between_vectors(unit(1, 0, 0), unit(0, 1, 0)) == pytest.approx(math.pi / 2)

    def test_identical(self):
        v = unit(1, 0)
        assert angle_between_vectors(v, v) == 0.0

    def test_planar_construction(self):
        v = unit(math.cos(0.11), math.sin(0.11))
        assert angle_between_vectors(unit(1, 0), v) == pytest.approx(0.11, abs=1e-12)

    def test_tiny_angle_precision(self):
        eps = 3e-7
        v = unit(math.cos(eps), math.sin(eps))
        assert angle_between_vectors(unit(1, 0), v) == pytest.approx(eps, rel=1e-6)

    def test_near_pi(self):
        eps = 3e-7
        v = unit(-math.cos(eps), math.sin(eps))
        assert angle_between_vectors(unit(1, 0), v) == pytest.approx(math.pi - eps, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            angle_between_vectors(unit(1, 0), unit(1, 0, 0))

    @given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_triangle(self, n, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (UnitVector.normalized(rng.standard_normal(n)) for _ in range(3))
        assert angle_between_vectors(a, b) == pytest.approx(angle_between_vectors(b, a), abs=1e-12)
        assert angle_between_vectors(a, c) <= (angle_between_vectors(a, b)
                                               + angle_between_vectors(b, c) + 1e-9)


class TestVectorToSubspace:
    def test_inside_span(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 1, 0)])
        assert angle_vector_to_subspace(unit(1, 1, 0), basis) == pytest.approx(0.0, abs=1e-9)

    def test_orthogonal(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        assert angle_vector_to_subspace(unit(0, 0, 1), basis) == pytest.approx(math.pi / 2)

    def test_planar_tilt(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        b = unit(math.cos(0.1), math.sin(0.1), 0)
        assert angle_vector_to_subspace(b, basis) == pytest.approx(0.1, abs=1e-12)

    def test_empty_basis_rejected(self):
        with pytest.raises(EmptyBasisError):
            angle_vector_to_subspace(unit(1, 0), OrthonormalBasis.empty(2))


class TestSubspaceToSubspace:
    def test_equal_subspaces(self):
        u = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 1, 0)])
        assert angle_subspace_to_subspace(u, u) == pytest.approx(0.0, abs=1e-9)

    def test_orthogonal_planes(self):
        xy = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 1, 0)])
        xz = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 0, 1)])
        assert angle_subspace_to_subspace(xy, xz) == pytest.approx(math.pi / 2, abs=1e-9)

    def test_containment_gives_zero(self):
        line = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        plane = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 1, 0)])
        assert angle_subspace_to_subspace(line, plane) == pytest.approx(0.0, abs=1e-9)

    def test_asymmetry(self):
        line = OrthonormalBasis.from_vectors([unit(0, 0, 1)])
        plane = OrthonormalBasis.from_vectors([unit(1, 0, 0), unit(0, 0, 1)])
        assert angle_subspace_to_subspace(line, plane) == pytest.approx(0.0, abs=1e-9)
        assert angle_subspace_to_subspace(plane, line) == pytest.approx(math.pi / 2, abs=1e-9)

    def test_rank1_agrees_with_vector_angle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = UnitVector.normalized(rng.standard_normal(6))
            rows = [UnitVector.normalized(rng.standard_normal(6)) for _ in range(3)]
            basis = OrthonormalBasis.from_vectors(rows)
            lhs = angle_subspace_to_subspace(OrthonormalBasis.from_vectors([a]), basis)
            assert lhs == pytest.approx(angle_vector_to_subspace(a, basis), abs=1e-10)


class TestExtendBasis:
    def test_appends_orthogonal(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        out, added = extend_basis(basis, unit(0, 1, 0))
        assert added and out.rank == 2

    def test_already_spanned(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        out, added = extend_basis(basis, unit(1, 0, 0))
        assert not added and out.rank == 1

    def test_gram_schmidt_residual(self):
        basis = OrthonormalBasis.from_vectors([unit(1, 0, 0)])
        out, added = extend_basis(basis, unit(1, 1, 0))
        assert added
        assert np.allclose(np.abs(out.mat), [[1, 0, 0], [0, 1, 0]], atol=1e-12)


class TestAngleBudget:
    def test_single_level_chain(self):
        b = AngleBudget.single_level(0.1, 5)
        assert b.gamma == pytest.approx(0.025)
        assert b.eps_acc == pytest.approx(b.gamma ** 2 / 50.0)

    def test_two_level_chain_respects_invariant(self):
        b = AngleBudget.two_level(0.1, 6, 2)
        assert b.eps_acc <= b.gamma ** 2 / (10 * 6) * (1 + 1e-12)
        assert b.gamma_tilde == pytest.approx(0.05)
        assert b.eps_acc_tilde == pytest.approx(0.05 * 0.1 / 16)

    def test_invariant_violation_rejected(self):
        with pytest.raises(ValueError):
            AngleBudget(eps=0.1, eps_acc=0.01, gamma=0.025, k=5)


class TestSpanPerturbation:
    def test_exact_vectors_give_zero(self):
        vecs = [unit(1, 0, 0), unit(0, 1, 0)]
        rep = check_span_perturbation(vecs, vecs, gamma=0.5, eps_acc=1e-3)
        assert rep.holds and rep.measured == pytest.approx(0.0, abs=1e-9)
        assert rep.preconditions_ok

    def test_precondition_violations_reported(self):
        vecs = [unit(1, 0, 0), unit(0, 1, 0)]
        crooked = [unit(0, 1, 0), unit(1, 0, 0)]
        rep = check_span_perturbation(vecs, crooked, gamma=0.5, eps_acc=1e-3)
        assert not rep.preconditions_ok
        assert any("exceeds eps_acc" in f for f in rep.precondition_failures)

    def test_ratio_bound_instance(self):
        # one extra vector at angle 0.1 from the existing span, learned to 0.01
        a1 = unit(1, 0, 0)
        bt = unit(math.cos(0.1), math.sin(0.1), 0)
        b = unit(math.cos(0.11), math.sin(0.11), 0)
        v = OrthonormalBasis.from_vectors([a1, b])
        vt = OrthonormalBasis.from_vectors([a1, bt])
        ratio = (math.pi / 2) * 0.01 / 0.1
        assert angle_subspace_to_subspace(v, vt) <= ratio + 1e-9
