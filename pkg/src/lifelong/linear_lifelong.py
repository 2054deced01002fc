"""Streaming drivers for halfspace tasks sharing linear structure.

``run_single_level`` maintains one layer of learned directions; per task it
first attempts to learn inside the span of the current rows and learns from
scratch (appending a new row) only on failure.  ``run_two_level`` adds a
second layer of sparse coefficient rows on top.  Both are strictly sequential
across tasks and keep no per-task sample storage: only the learned rows and
coefficients survive a task, so past labeled data is unreachable by
construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import AngleBudget, OrthonormalBasis, UnitVector, angle_vector_to_subspace, extend_basis
from .halfspaces import (learn_from_scratch, learn_in_subspace,
                         learn_in_subspace_fine, learn_tau_sparse)

PATH_REUSED_LEVEL2 = "reused_level2"
PATH_REUSED_LEVEL1 = "reused_level1"
PATH_SCRATCH = "scratch"

# below this error target a plain ceil(32/eps ln(4/delta)) holdout costs more
# than the learning itself; switch to the banded validator
_FINE_VALIDATION_CUTOFF = 1e-3


@dataclass(frozen=True)
class TaskOutcome:
    task_index: int
    path: str
    samples: int
    final_error_estimate: float


@dataclass
class LinearRepState:
    """Learned representation: first-level rows, optional second-level rows,
    and one coefficient row per task (zero-padded to the final widths)."""

    n: int
    w_rows: np.ndarray                 # (k, n)
    c_rows: np.ndarray                 # (m, k) single level, (m, r) two level
    u_rows: np.ndarray | None = None   # (r, k) for the two-level driver
    scratch_indices: tuple[int, ...] = ()
    total_samples: int = 0

    @property
    def k(self) -> int:
        return self.w_rows.shape[0]

    @property
    def r(self) -> int:
        return 0 if self.u_rows is None else self.u_rows.shape[0]

    def predictor_matrix(self) -> np.ndarray:
        """Per-task prediction rows: C @ W, or C @ U @ W with two levels."""
        if self.u_rows is None:
            return self.c_rows @ self.w_rows
        return self.c_rows @ self.u_rows @ self.w_rows

    def predict(self, task_index: int, X: np.ndarray) -> np.ndarray:
        row = self.predictor_matrix()[task_index]
        return np.where(X @ row >= 0.0, 1.0, -1.0)

    def save(self, path):
        write_linear_rep(self, path)

    @classmethod
    def load(cls, path) -> "LinearRepState":
        return read_linear_rep(path)


def _pad_rows(rows: list[np.ndarray], width: int) -> np.ndarray:
    out = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        out[i, : r.size] = r
    return out


def run_single_level(oracles, budget: AngleBudget, delta: float = 0.02):
    """One-layer streaming driver (shared low-dimensional subspace).

    Per task: attempt to learn over the current rows to error budget.eps; on
    failure learn from scratch to budget.eps_acc and append the hypothesis as
    a new row with coefficient row e_k.
    """
    oracles = list(oracles)
    m = len(oracles)
    per_task_delta = delta / max(1, 2 * m)
    w_rows: list[np.ndarray] = []
    c_rows: list[np.ndarray] = []
    outcomes: list[TaskOutcome] = []
    scratch_idx: list[int] = []
    for i, oracle in enumerate(oracles):
        before = oracle.query_count
        hyp = None
        if w_rows:
            hyp = learn_in_subspace(np.array(w_rows), oracle, budget.eps, per_task_delta)
        if hyp is not None:
            c_rows.append(hyp.coefficients)
            path, err = PATH_REUSED_LEVEL1, hyp.achieved_error_estimate
        else:
            scratch = learn_from_scratch(oracle, budget.eps_acc, per_task_delta)
            w_rows.append(scratch.direction)
            e = np.zeros(len(w_rows))
            e[-1] = 1.0
            c_rows.append(e)
            scratch_idx.append(i)
            path, err = PATH_SCRATCH, scratch.achieved_error_estimate
        outcomes.append(TaskOutcome(i, path, oracle.query_count - before, err))
    k = len(w_rows)
    state = LinearRepState(n=oracles[0].dim if oracles else 0,
                           w_rows=np.array(w_rows).reshape(k, -1),
                           c_rows=_pad_rows(c_rows, k),
                           scratch_indices=tuple(scratch_idx),
                           total_samples=sum(o.samples for o in outcomes))
    return state, outcomes


def run_two_level(oracles, budget: AngleBudget, delta: float = 0.02):
    """Two-layer streaming driver.

    Per task, in order: (1) tau-sparse reuse over the second-level rows at
    error eps; (2) learning over the first-level rows at error eps_acc_tilde,
    appending the coefficients as a new second-level row; (3) scratch at
    eps_acc, appending both a first-level row and the unit second-level row.
    """
    if budget.tau is None or budget.eps_acc_tilde is None:
        raise ValueError("two-level driver needs a budget with tau and eps_acc_tilde")
    oracles = list(oracles)
    m = len(oracles)
    per_task_delta = delta / max(1, 2 * m)
    w_rows: list[np.ndarray] = []
    u_rows: list[np.ndarray] = []
    c_rows: list[np.ndarray] = []
    outcomes: list[TaskOutcome] = []
    scratch_idx: list[int] = []
    fine_level1 = budget.eps_acc_tilde < _FINE_VALIDATION_CUTOFF
    for i, oracle in enumerate(oracles):
        before = oracle.query_count
        path = None
        if u_rows:
            sparse = learn_tau_sparse(_pad_rows(u_rows, len(w_rows)), np.array(w_rows),
                                      budget.tau, oracle, budget.eps, per_task_delta)
            if sparse is not None:
                c_rows.append(sparse.coefficients)
                path, err = PATH_REUSED_LEVEL2, sparse.achieved_error_estimate
        if path is None and w_rows:
            learner = learn_in_subspace_fine if fine_level1 else learn_in_subspace
            lvl1 = learner(np.array(w_rows), oracle, budget.eps_acc_tilde, per_task_delta)
            if lvl1 is not None:
                u_rows.append(lvl1.coefficients)
                e = np.zeros(len(u_rows))
                e[-1] = 1.0
                c_rows.append(e)
                path, err = PATH_REUSED_LEVEL1, lvl1.achieved_error_estimate
        if path is None:
            scratch = learn_from_scratch(oracle, budget.eps_acc, per_task_delta)
            w_rows.append(scratch.direction)
            unit = np.zeros(len(w_rows))
            unit[-1] = 1.0
            u_rows.append(unit)
            e = np.zeros(len(u_rows))
            e[-1] = 1.0
            c_rows.append(e)
            scratch_idx.append(i)
            path, err = PATH_SCRATCH, scratch.achieved_error_estimate
        outcomes.append(TaskOutcome(i, path, oracle.query_count - before, err))
    k, r = len(w_rows), len(u_rows)
    state = LinearRepState(n=oracles[0].dim if oracles else 0,
                           w_rows=np.array(w_rows).reshape(k, -1),
                           u_rows=_pad_rows(u_rows, k),
                           c_rows=_pad_rows(c_rows, r),
                           scratch_indices=tuple(scratch_idx),
                           total_samples=sum(o.samples for o in outcomes))
    return state, outcomes


def gamma_effective_dimension_lower_bound(targets, gamma: float) -> int:
    """Greedy in-order count of targets at angle > gamma from the span of the
    previously counted ones; certifies a separated subsequence, so it lower
    bounds the maximum over all subsequences."""
    count = 0
    basis = None
    for t in targets:
        u = t if isinstance(t, UnitVector) else UnitVector.normalized(np.asarray(t, dtype=np.float64))
        if basis is None:
            basis = OrthonormalBasis.from_vectors([u])
            count += 1
            continue
        if angle_vector_to_subspace(u, basis) > gamma:
            basis, _ = extend_basis(basis, u)
            count += 1
    return count


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_linear_rep(state: LinearRepState, path):
    """LINREP v1: header, then W rows, then U rows, then C rows, one row per
    line of space-separated decimals at 17 significant digits."""
    lines = [f"LINREP v1 n={state.n} k={state.k} r={state.r}"]
    for row in state.w_rows:
        lines.append(" ".join(_fmt(v) for v in row))
    if state.u_rows is not None:
        for row in state.u_rows:
            lines.append(" ".join(_fmt(v) for v in row))
    for row in state.c_rows:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_linear_rep(path) -> LinearRepState:
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    head = lines[0].split()
    if head[:2] != ["LINREP", "v1"]:
        raise ValueError("not a LINREP v1 file")
    fields = dict(kv.split("=") for kv in head[2:])
    n, k, r = int(fields["n"]), int(fields["k"]), int(fields["r"])
    rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1:]]
    w = np.array(rows[:k]).reshape(k, n)
    u = np.array(rows[k:k + r]).reshape(r, k) if r else None
    c = np.array(rows[k + r:])
    return LinearRepState(n=n, w_rows=w, u_rows=u, c_rows=c)
