"""Dense two-phase primal simplex for small linear programs.

Minimizes c.x subject to row constraints (<=, >=, =) and x >= 0, on a dense
tableau.  Pivoting uses Bland's anti-cycling rule (smallest eligible variable
index enters; among minimum-ratio rows the smallest basic index leaves), so
the solve always terminates; feasibility and optimality tolerances are 1e-9.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_BUDGET = "budget_exceeded"


@dataclass(frozen=True)
class LpProblem:
    """min c.x  s.t.  A x (ops) b,  x >= 0."""

    c: np.ndarray
    A: np.ndarray
    ops: tuple[str, ...]
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=np.float64))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64))
        if len(self.ops) != A.shape[0] or self.b.shape[0] != A.shape[0]:
            raise ValueError("constraint row counts disagree")
        if any(op not in ("<=", ">=", "=") for op in self.ops):
            raise ValueError("ops must be <=, >= or =")

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _run_phase(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
               max_pivots: int, start_iter: int) -> tuple[str, int]:
    it = start_iter
    ncols = T.shape[1] - 1
    while True:
        red = T[-1, :ncols]
        cand = np.flatnonzero((red < -TOL) & allowed)
        if cand.size == 0:
            return STATUS_OPTIMAL, it
        j = int(cand[0])  # Bland: smallest eligible variable index
        col = T[:-1, j]
        pos = col > TOL
        if not pos.any():
            return STATUS_UNBOUNDED, it
        ratios = np.full(col.shape, np.inf)
        ratios[pos] = T[:-1, -1][pos] / col[pos]
        rmin = ratios.min()
        rows = np.flatnonzero(ratios <= rmin + 1e-12)
        r = int(rows[np.argmin(basis[rows])])
        _pivot(T, basis, r, j)
        it += 1
        if it >= max_pivots:
            return STATUS_BUDGET, it


def solve_lp(problem: LpProblem, max_pivots: int = 1_000_000) -> LpSolution:
    """Two-phase dense simplex; returns an optimal basic solution or an
    infeasibility/unboundedness/budget status."""
    A = problem.A.copy()
    b = problem.b.copy()
    ops = list(problem.ops)
    m, n = A.shape
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            ops[i] = {"<=": ">=", ">=": "<=", "=": "="}[ops[i]]
    slack_cols = sum(1 for op in ops if op in ("<=", ">="))
    art_cols = sum(1 for op in ops if op in (">=", "="))
    total = n + slack_cols + art_cols
    T = np.zeros((m + 1, total + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = np.zeros(m, dtype=np.int64)
    si = n
    ai = n + slack_cols
    art_idx = []
    for i, op in enumerate(ops):
        if op == "<=":
            T[i, si] = 1.0
            basis[i] = si
            si += 1
        elif op == ">=":
            T[i, si] = -1.0
            si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            art_idx.append(ai)
            ai += 1
        else:
            T[i, ai] = 1.0
            basis[i] = ai
            art_idx.append(ai)
            ai += 1
    art_idx = np.array(art_idx, dtype=np.int64)
    allowed = np.ones(total, dtype=bool)

    iterations = 0
    if art_idx.size:
        cost1 = np.zeros(total)
        cost1[art_idx] = 1.0
        T[-1, :total] = cost1
        T[-1, -1] = 0.0
        for i in range(m):
            if cost1[basis[i]]:
                T[-1] -= T[i]
        status, iterations = _run_phase(T, basis, allowed, max_pivots, 0)
        if status == STATUS_BUDGET:
            return LpSolution(STATUS_BUDGET, None, None, iterations)
        if -T[-1, -1] > 1e-7:
            return LpSolution(STATUS_INFEASIBLE, None, None, iterations)
        # drive any degenerate artificial out of the basis, then freeze them
        for i in range(m):
            if basis[i] in art_idx:
                row = T[i, :total]
                pivots = np.flatnonzero((np.abs(row) > TOL) & allowed
                                        & ~np.isin(np.arange(total), art_idx))
                if pivots.size:
                    _pivot(T, basis, i, int(pivots[0]))
                    iterations += 1
        allowed[art_idx] = False

    cost2 = np.zeros(total)
    cost2[:n] = problem.c
    T[-1, :total] = cost2
    T[-1, -1] = 0.0
    for i in range(m):
        if cost2[basis[i]]:
            T[-1] -= cost2[basis[i]] * T[i]
    status, iterations = _run_phase(T, basis, allowed, max_pivots, iterations)
    if status in (STATUS_BUDGET, STATUS_UNBOUNDED):
        return LpSolution(status, None, None, iterations)
    x = np.zeros(total)
    x[basis] = T[:m, -1]
    return LpSolution(STATUS_OPTIMAL, x[:n].copy(), float(problem.c @ x[:n]), iterations)


def write_lp(problem: LpProblem, path):
    """LP v1 debug format: header, `min`, objective row, one constraint per line."""
    lines = ["LP v1", "min", " ".join(format(v, ".17g") for v in problem.c)]
    for row, op, rhs in zip(problem.A, problem.ops, problem.b):
        lines.append(" ".join(format(v, ".17g") for v in row) + f" {op} " + format(rhs, ".17g"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_lp(path) -> LpProblem:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if lines[0] != "LP v1":
        raise ValueError("not an LP v1 file")
    if lines[1] != "min":
        raise ValueError("only minimization problems are supported")
    c = np.array([float(v) for v in lines[2].split()])
    A, ops, b = [], [], []
    for ln in lines[3:]:
        toks = ln.split()
        op_pos = next(i for i, t in enumerate(toks) if t in ("<=", ">=", "="))
        A.append([float(v) for v in toks[:op_pos]])
        ops.append(toks[op_pos])
        b.append(float(toks[op_pos + 1]))
    return LpProblem(c=c, A=np.array(A), ops=tuple(ops), b=np.array(b))
