"""Angles between vectors and subspaces, orthonormal bases, perturbation bounds.

Angles are always in radians.  Vector-to-subspace and subspace-to-subspace
angles live in [0, pi/2]; the subspace angle is the one-sided max-min angle
(asymmetric in its arguments), computed from singular values of the
cross-Gram matrix of the two orthonormal bases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, EmptyBasisError

UNIT_NORM_TOL = 1e-9
ORTHOGONALITY_TOL = 1e-9
DEPENDENCE_TOL = 1e-7
# arccos of a clamped dot loses precision once the dot exceeds this; switch
# to the residual-norm (sine) formulation there.
_NEAR_PARALLEL_DOT = 1.0 - 1e-8


def _as_unit_array(coords) -> np.ndarray:
    a = np.asarray(coords, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("expected a nonempty 1-d coordinate array")
    nrm = float(np.linalg.norm(a))
    if abs(nrm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"norm {nrm!r} is not 1 within {UNIT_NORM_TOL}")
    a = a.copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class UnitVector:
    """A direction in R^n with Euclidean norm 1 (checked to 1e-9)."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_unit_array(self.coords))

    @classmethod
    def normalized(cls, coords) -> "UnitVector":
        a = np.asarray(coords, dtype=np.float64)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(a / nrm)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __eq__(self, other):
        return isinstance(other, UnitVector) and np.array_equal(self.coords, other.coords)


@dataclass(frozen=True)
class OrthonormalBasis:
    """Rows of ``mat`` are pairwise-orthogonal unit vectors spanning a subspace.

    ``rank == 0`` (an empty basis of known ambient dimension) is allowed as a
    value, but angle queries against it raise ``EmptyBasisError``.
    """

    mat: np.ndarray
    dim: int

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=np.float64).reshape(-1, self.dim).copy()
        if m.shape[0] > self.dim:
            raise ValueError("rank cannot exceed ambient dimension")
        g = m @ m.T
        if m.shape[0] and np.max(np.abs(g - np.eye(m.shape[0]))) > 1e-7:
            raise ValueError("rows are not orthonormal")
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    @classmethod
    def empty(cls, dim: int) -> "OrthonormalBasis":
        return cls(np.zeros((0, dim)), dim)

    @classmethod
    def from_vectors(cls, vectors, dim: int | None = None) -> "OrthonormalBasis":
        """Orthonormalize ``vectors`` by modified Gram-Schmidt, dropping dependents."""
        rows = [np.asarray(getattr(v, "coords", v), dtype=np.float64) for v in vectors]
        if dim is None:
            if not rows:
                raise ValueError("need an explicit dim for an empty vector list")
            dim = rows[0].size
        basis = cls.empty(dim)
        for r in rows:
            basis, _ = extend_basis(basis, UnitVector.normalized(r))
        return basis

    @property
    def rank(self) -> int:
        return self.mat.shape[0]

    @property
    def vectors(self) -> tuple[UnitVector, ...]:
        return tuple(UnitVector.normalized(row) for row in self.mat)

    def project(self, x: np.ndarray) -> np.ndarray:
        return (x @ self.mat.T) @ self.mat


def _check_dims(a, b):
    if a != b:
        raise DimensionMismatchError(f"dimension mismatch: {a} != {b}")


def angle_between_vectors(u: UnitVector, v: UnitVector) -> float:
    """Angle in [0, pi] between two unit vectors, stable near 0 and pi."""
    _check_dims(u.dim, v.dim)
    d = float(np.dot(u.coords, v.coords))
    if abs(d) > _NEAR_PARALLEL_DOT:
        # residual norm equals |sin(theta)| exactly for unit vectors
        r = float(np.linalg.norm(u.coords - d * v.coords))
        s = math.asin(min(1.0, r))
        return s if d > 0 else math.pi - s
    return math.acos(max(-1.0, min(1.0, d)))


def angle_vector_to_subspace(a: UnitVector, basis: OrthonormalBasis) -> float:
    """min over b in span(basis) of the angle between a and b, in [0, pi/2]."""
    _check_dims(a.dim, basis.dim)
    if basis.rank == 0:
        raise EmptyBasisError("angle to an empty basis is undefined")
    coeff = basis.mat @ a.coords
    resid = a.coords - coeff @ basis.mat
    # atan2 of (residual, projection) norms == arccos of the clamped
    # projection norm, but keeps full precision at both ends.
    return math.atan2(float(np.linalg.norm(resid)), float(np.linalg.norm(coeff)))


def angle_subspace_to_subspace(u: OrthonormalBasis, v: OrthonormalBasis) -> float:
    """max over unit x in span(u) of the angle from x to span(v).

    Asymmetric: theta(U, V) <= alpha iff every direction of U is within alpha
    of some direction of V.  For rank-1 u this equals angle_vector_to_subspace.
    """
    _check_dims(u.dim, v.dim)
    if u.rank == 0 or v.rank == 0:
        raise EmptyBasisError("subspace angle needs nonempty bases on both sides")
    cross = u.mat @ v.mat.T
    sigma = np.linalg.svd(cross, compute_uv=False)
    smallest = float(sigma[u.rank - 1]) if v.rank >= u.rank else 0.0
    # Large angles: arccos of the smallest cross-Gram singular value is
    # accurate.  Small angles: use the largest singular value of the residual
    # block instead (its arcsine), which does not cancel.
    resid = u.mat - cross @ v.mat
    r = float(np.linalg.norm(resid, 2)) if resid.size else 0.0
    if r < math.sqrt(0.5):
        return math.asin(min(1.0, r))
    return math.acos(max(-1.0, min(1.0, smallest)))


def extend_basis(basis: OrthonormalBasis, a: UnitVector) -> tuple[OrthonormalBasis, bool]:
    """Return (basis possibly extended by the residual of ``a``, appended?).

    Modified Gram-Schmidt with one re-orthogonalization pass; ``a`` counts as
    already spanned when its angle to the span is at most 1e-7.
    """
    _check_dims(basis.dim, a.dim)
    r = a.coords.astype(np.float64).copy()
    for _ in range(2):  # one re-orthogonalization pass
        for row in basis.mat:
            r -= np.dot(row, r) * row
    resid_norm = float(np.linalg.norm(r))
    if basis.rank and math.atan2(resid_norm, float(np.linalg.norm(basis.mat @ a.coords))) <= DEPENDENCE_TOL:
        return basis, False
    if resid_norm == 0.0:
        return basis, False
    new = np.vstack([basis.mat, r / resid_norm]) if basis.rank else (r / resid_norm).reshape(1, -1)
    return OrthonormalBasis(new, basis.dim), True


@dataclass(frozen=True)
class AngleBudget:
    """Error/separation parameters tying the streaming drivers together.

    ``single_level`` pins gamma = eps/4 and eps_acc = gamma^2/(10k).
    ``two_level`` additionally pins gamma_tilde = eps/2,
    eps_acc_tilde = gamma_tilde*eps/(8*tau), gamma = eps_acc_tilde/4, and
    eps_acc = min(gamma*eps_acc_tilde/(10k), gamma^2/(10k)); the min keeps the
    perturbation-bound precondition eps_acc <= gamma^2/(10k) satisfied.
    """

    eps: float
    eps_acc: float
    gamma: float
    k: int
    gamma_tilde: float | None = None
    eps_acc_tilde: float | None = None
    tau: int | None = None

    def __post_init__(self):
        if not (0.0 < self.eps < 0.5):
            raise ValueError("eps must lie in (0, 1/2)")
        if self.eps_acc > self.gamma ** 2 / (10.0 * self.k) * (1 + 1e-12):
            raise ValueError("eps_acc must be at most gamma^2/(10k)")

    @classmethod
    def single_level(cls, eps: float, k: int) -> "AngleBudget":
        gamma = eps / 4.0
        return cls(eps=eps, gamma=gamma, eps_acc=gamma ** 2 / (10.0 * k), k=k)

    @classmethod
    def two_level(cls, eps: float, k: int, tau: int) -> "AngleBudget":
        gamma_tilde = eps / 2.0
        eps_acc_tilde = gamma_tilde * eps / (8.0 * tau)
        gamma = eps_acc_tilde / 4.0
        eps_acc = min(gamma * eps_acc_tilde / (10.0 * k), gamma ** 2 / (10.0 * k))
        return cls(eps=eps, gamma=gamma, eps_acc=eps_acc, k=k,
                   gamma_tilde=gamma_tilde, eps_acc_tilde=eps_acc_tilde, tau=tau)


@dataclass(frozen=True)
class SpanPerturbationReport:
    """Outcome of checking the learned-span drift bound 2k*eps_acc/gamma."""

    measured: float
    bound: float
    holds: bool
    k: int
    precondition_failures: tuple[str, ...] = field(default_factory=tuple)

    @property
    def preconditions_ok(self) -> bool:
        return not self.precondition_failures


def check_span_perturbation(true_vectors, learned_vectors, gamma: float,
                            eps_acc: float) -> SpanPerturbationReport:
    """Measure theta(span(true), span(learned)) against the 2k*eps_acc/gamma bound.

    Preconditions (reported, never silently ignored): the two lists have equal
    length k; each learned vector is within eps_acc of its true counterpart;
    each learned vector past the first is at angle >= gamma from the span of
    the previous learned vectors; and eps_acc <= gamma^2/(10k).
    """
    true_vs = [v if isinstance(v, UnitVector) else UnitVector.normalized(v) for v in true_vectors]
    learned_vs = [v if isinstance(v, UnitVector) else UnitVector.normalized(v) for v in learned_vectors]
    failures = []
    if len(true_vs) != len(learned_vs) or not true_vs:
        raise ValueError("need equally many (and at least one) true and learned vectors")
    k = len(true_vs)
    if eps_acc > gamma ** 2 / (10.0 * k) * (1 + 1e-12):
        failures.append(f"eps_acc={eps_acc:g} exceeds gamma^2/(10k)={gamma**2/(10*k):g}")
    for i, (a, b) in enumerate(zip(true_vs, learned_vs)):
        ang = angle_between_vectors(a, b)
        if ang > eps_acc * (1 + 1e-9) + 1e-12:
            failures.append(f"pair {i}: angle {ang:g} exceeds eps_acc {eps_acc:g}")
    partial = OrthonormalBasis.from_vectors(learned_vs[:1])
    for i in range(1, k):
        ang = angle_vector_to_subspace(learned_vs[i], partial)
        if ang < gamma * (1 - 1e-9):
            failures.append(f"learned vector {i}: angle {ang:g} to previous span below gamma {gamma:g}")
        partial, _ = extend_basis(partial, learned_vs[i])
    v_true = OrthonormalBasis.from_vectors(true_vs)
    v_learned = OrthonormalBasis.from_vectors(learned_vs)
    measured = angle_subspace_to_subspace(v_true, v_learned)
    bound = 2.0 * k * eps_acc / gamma if gamma > 0 else math.inf
    return SpanPerturbationReport(measured=measured, bound=bound,
                                  holds=measured <= bound, k=k,
                                  precondition_failures=tuple(failures))
