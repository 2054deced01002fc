"""Single-task halfspace learners used by the streaming drivers.

Learning from scratch targets very small errors (the streaming analysis needs
scratch accuracy around eps^2/k or tighter), which plain averaging of y*x
cannot reach at sane sample counts (its angle error decays like sqrt(n/N)).
The scratch learner therefore refines an averaging estimate through a
sequence of narrowing bands around its current boundary: points conditioned
on |w . x| <= b carry strong signal about the component of the target
orthogonal to w, so each stage roughly halves the remaining angle at constant
label cost.  Validation of tiny error targets uses the same banding as an
importance sampler, scaling the in-band disagreement rate by the known band
mass instead of paying 1/eps samples for a plain holdout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CombinatorialBudgetError, SampleBudgetError
from .sampling import band_mass

_STAGE_BAND_FACTOR = 3.0
_VALIDATION_BAND_FACTOR = 20.0 * math.pi


@dataclass
class HalfspaceHypothesis:
    """A learned unit direction with its validated error estimate."""

    direction: np.ndarray
    achieved_error_estimate: float
    samples_used: int
    coefficients: np.ndarray | None = None  # over the basis handed to the learner


@dataclass
class SparseHalfspaceHypothesis:
    direction: np.ndarray
    coefficients: np.ndarray  # dense length-r vector, nonzero only on the chosen subset
    subset: tuple[int, ...]
    achieved_error_estimate: float
    samples_used: int


class _SubspaceView:
    """Read-through view of a halfspace oracle projected onto orthonormal rows."""

    def __init__(self, oracle, q_rows: np.ndarray):
        self.oracle = oracle
        self.q = q_rows
        self.dist = oracle.dist

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    @property
    def query_count(self) -> int:
        return self.oracle.query_count

    def draw(self, count):
        X, y = self.oracle.draw(count)
        return X @ self.q.T, y

    def draw_band(self, direction, half_width, count):
        X, y = self.oracle.draw_band(direction @ self.q, half_width, count)
        return X @ self.q.T, y


def _orthonormal_rows(rows: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    q: list[np.ndarray] = []
    for r in np.atleast_2d(np.asarray(rows, dtype=np.float64)):
        v = r.copy()
        for _ in range(2):
            for e in q:
                v -= (e @ v) * e
        nrm = np.linalg.norm(v)
        if nrm > tol:
            q.append(v / nrm)
    if not q:
        raise ValueError("no independent rows to orthonormalize")
    return np.array(q)


def _averaged_direction(view, count: int) -> np.ndarray:
    X, y = view.draw(count)
    v = y @ X
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        v = np.zeros(view.dim)
        v[0] = 1.0
        return v
    return v / nrm


def _select_rotation(w, u, X, y, band: float) -> float:
    """Pick the rotation angle from w toward u minimizing band disagreement."""
    s_w = X @ w
    s_u = X @ u
    zetas = np.concatenate([[0.0], band * np.exp2(-0.5 * np.arange(0, 30))[::-1]])
    best_z, best_bad = 0.0, None
    for z in zetas:
        pred = np.where(math.cos(z) * s_w + math.sin(z) * s_u >= 0.0, 1.0, -1.0)
        bad = int(np.sum(pred != y))
        if best_bad is None or bad < best_bad or (bad == best_bad and z < best_z):
            best_bad, best_z = bad, z
    return best_z


def _refine(view, w: np.ndarray, angle_start: float, angle_goal: float,
            m_band: int, budget) -> np.ndarray:
    delta_hat = angle_start
    while delta_hat > angle_goal:
        budget.charge(m_band)
        b = _STAGE_BAND_FACTOR * delta_hat
        X, y = view.draw_band(w, b, m_band)
        v = y @ X
        v_perp = v - (v @ w) * w
        nrm = np.linalg.norm(v_perp)
        if nrm <= 1e-300:
            delta_hat /= 2.0
            continue
        u = v_perp / nrm
        z = _select_rotation(w, u, X, y, b)
        if z > 0.0:
            w = math.cos(z) * w + math.sin(z) * u
            w /= np.linalg.norm(w)
        delta_hat /= 2.0
    return w


class _Budget:
    def __init__(self, cap: int | None):
        self.cap = cap
        self.spent = 0

    def charge(self, count: int):
        self.spent += count
        if self.cap is not None and self.spent > self.cap:
            raise SampleBudgetError(
                f"sample budget {self.cap} exhausted (needed more than {self.spent})")


def _banded_error_estimate(view, ambient_dist, w, err_scale: float,
                           delta: float, budget) -> float:
    """Unbiased error estimate via in-band disagreement times the band mass.

    Valid when the true disagreement wedge is far narrower than the band,
    which holds whenever the true error is within a small multiple of
    err_scale; much larger errors saturate the in-band rate high, which still
    rejects correctly.
    """
    b_v = min(0.3, max(_VALIDATION_BAND_FACTOR * err_scale, 1e-11))
    mass = band_mass(ambient_dist, b_v)
    m_v = int(math.ceil(32.0 * mass / err_scale * math.log(4.0 / delta))) + 16
    budget.charge(m_v)
    X, y = view.draw_band(w, b_v, m_v)
    pred = np.where(X @ w >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != y)) * mass


def learn_from_scratch(oracle, eps_acc: float, delta: float,
                       max_samples: int | None = 30_000_000) -> HalfspaceHypothesis:
    """Learn the oracle's halfspace to validated error at most eps_acc/2.

    Raises SampleBudgetError instead of ever returning an unvalidated
    hypothesis.  Requires a rotationally symmetric distribution.
    """
    if not oracle.dist.is_rotationally_symmetric():
        raise ValueError("scratch learning assumes a rotationally symmetric distribution")
    if not 0.0 < eps_acc < 0.25:
        raise ValueError("eps_acc must lie in (0, 1/4)")
    view = oracle
    return _learn_core(view, oracle.dist, eps_acc, delta, max_samples)


def _learn_core(view, ambient_dist, eps_target: float, delta: float,
                max_samples: int | None) -> HalfspaceHypothesis:
    n = view.dim
    budget = _Budget(max_samples)
    start = view.query_count
    angle_goal = math.pi * eps_target / 8.0
    m_band = max(2000, 25 * n)
    # stage-0 (averaging) only needs to land within ~0.1 rad; band stages cost
    # a constant number of labels per halving, averaging costs 1/angle^2
    delta0 = min(max(angle_goal / 2.0, 0.05), 0.2)
    n0 = int(math.ceil(1.56 * n / delta0 ** 2))
    for attempt in range(4):
        budget.charge(n0)
        w = _averaged_direction(view, n0)
        delta_hat = 2.5 * math.sqrt(n / n0)
        w = _refine(view, w, delta_hat, angle_goal, m_band, budget)
        est = _banded_error_estimate(view, ambient_dist, w, eps_target / 2.0,
                                     delta, budget)
        if est <= eps_target / 2.0:
            return HalfspaceHypothesis(direction=w, achieved_error_estimate=est,
                                       samples_used=view.query_count - start)
        m_band *= 3
    raise SampleBudgetError(
        f"could not validate error <= {eps_target / 2:g} after 4 attempts")


def learn_in_subspace(w_rows: np.ndarray, oracle, eps: float, delta: float,
                      max_samples: int | None = 30_000_000,
                      attempts: int = 2) -> HalfspaceHypothesis | None:
    """Learn over the coordinates (w_1 . x, ..., w_k . x); validate on a fresh
    holdout of ceil(32/eps * ln(4/delta)) points at threshold eps/2.

    Returns None ("no good separator") when no attempt validates; a finite
    sample can only certify absence of separators with error below eps/2.
    """
    w_rows = np.atleast_2d(np.asarray(w_rows, dtype=np.float64))
    if w_rows.shape[0] == 0:
        raise ValueError("empty basis")
    q = _orthonormal_rows(w_rows)
    view = _SubspaceView(oracle, q)
    start = oracle.query_count
    budget = _Budget(max_samples)
    k = view.dim
    angle_goal = math.pi * eps / 4.0
    holdout = int(math.ceil(32.0 / eps * math.log(4.0 / delta)))
    delta0 = min(max(angle_goal / 2.0, 0.02), 0.3)
    n0 = int(math.ceil(1.56 * k / delta0 ** 2))
    for attempt in range(attempts):
        budget.charge(n0)
        w_sub = _averaged_direction(view, n0)
        delta_hat = 2.5 * math.sqrt(k / n0)
        if delta_hat > angle_goal:
            w_sub = _refine(view, w_sub, delta_hat, angle_goal,
                            max(2000, 25 * k), budget)
        direction = w_sub @ q
        # sequential test: a small pre-holdout rejects hopeless candidates
        # before paying for the full-size one
        pre = min(300, holdout)
        budget.charge(pre)
        Xp, yp = oracle.draw(pre)
        pre_err = float(np.mean(np.where(Xp @ direction >= 0.0, 1.0, -1.0) != yp))
        if pre_err > eps / 2.0 + 3.0 * math.sqrt(eps / pre):
            n0 *= 2
            continue
        budget.charge(holdout)
        X, y = oracle.draw(holdout)
        pred = np.where(X @ direction >= 0.0, 1.0, -1.0)
        err = float(np.mean(pred != y))
        if err <= eps / 2.0:
            coeff, *_ = np.linalg.lstsq(w_rows.T, direction, rcond=None)
            return HalfspaceHypothesis(direction=direction,
                                       achieved_error_estimate=err,
                                       samples_used=oracle.query_count - start,
                                       coefficients=coeff)
        n0 *= 2
    return None


def learn_in_subspace_fine(w_rows: np.ndarray, oracle, eps: float, delta: float,
                           max_samples: int | None = 30_000_000) -> HalfspaceHypothesis | None:
    """learn_in_subspace for error targets too small for a plain holdout.

    Identical contract, but validates with the banded importance estimator at
    threshold eps/2 (the plain ceil(32/eps * ln(4/delta)) holdout would need
    more draws than the whole run for eps below ~1e-4).
    """
    w_rows = np.atleast_2d(np.asarray(w_rows, dtype=np.float64))
    q = _orthonormal_rows(w_rows)
    view = _SubspaceView(oracle, q)
    start = oracle.query_count
    try:
        hyp = _learn_core(view, oracle.dist, eps, delta, max_samples)
    except SampleBudgetError:
        return None
    direction = hyp.direction @ q
    coeff, *_ = np.linalg.lstsq(w_rows.T, direction, rcond=None)
    return HalfspaceHypothesis(direction=direction,
                               achieved_error_estimate=hyp.achieved_error_estimate,
                               samples_used=oracle.query_count - start,
                               coefficients=coeff)


def learn_tau_sparse(u_rows: np.ndarray, w_rows: np.ndarray, tau: int, oracle,
                     eps: float, delta: float, max_subsets: int = 5000,
                     max_samples: int | None = 30_000_000) -> SparseHalfspaceHypothesis | None:
    """Search the <= tau-subsets of the second-level rows for one whose span
    admits a validated error <= eps/2 separator.

    Subsets are attempted in the order of a cheap shared-probe least-squares
    screen (lexicographic among ties), which is deterministic given the
    oracle's stream; every returned hypothesis still passes the full holdout
    validation, so the screen only affects the number of failed attempts.
    """
    import itertools

    u_rows = np.atleast_2d(np.asarray(u_rows, dtype=np.float64))
    w_rows = np.atleast_2d(np.asarray(w_rows, dtype=np.float64))
    r = u_rows.shape[0]
    subsets = []
    for size in range(1, min(tau, r) + 1):
        subsets.extend(itertools.combinations(range(r), size))
    if len(subsets) > max_subsets:
        raise CombinatorialBudgetError(
            f"{len(subsets)} candidate subsets exceed the cap {max_subsets}")
    start = oracle.query_count
    per_delta = delta / max(1, len(subsets))
    if len(subsets) > 1:
        probe = min(1000, max(400, 40 * r))
        Xp, yp = oracle.draw(probe)
        proj = Xp @ (u_rows @ w_rows).T
        scores = []
        for subset in subsets:
            cols = proj[:, list(subset)]
            coef, *_ = np.linalg.lstsq(cols, yp, rcond=None)
            miss = float(np.mean(np.where(cols @ coef >= 0, 1.0, -1.0) != yp))
            scores.append(miss)
        subsets = [s for _, s in sorted(zip(scores, subsets), key=lambda t: (t[0], t[1]))]
    for subset in subsets:
        dirs = u_rows[list(subset)] @ w_rows
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms < 1e-12):
            continue
        hyp = learn_in_subspace(dirs, oracle, eps, per_delta,
                                max_samples=max_samples, attempts=1)
        if hyp is not None:
            beta, *_ = np.linalg.lstsq(dirs.T, hyp.direction, rcond=None)
            coeff = np.zeros(r)
            coeff[list(subset)] = beta
            return SparseHalfspaceHypothesis(direction=hyp.direction,
                                             coefficients=coeff,
                                             subset=tuple(subset),
                                             achieved_error_estimate=hyp.achieved_error_estimate,
                                             samples_used=oracle.query_count - start)
    return None
