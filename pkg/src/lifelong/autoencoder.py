"""Sparse Boolean autoencoding: anchor-pattern candidate generation, the
covering/sparsity linear program, randomized rounding with Las Vegas retries,
and the exact minimal autoencoder built on the consistency solver.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .booleans import Dictionary, Monomial, TargetSet, solve_consistency, represents
from .errors import CombinatorialBudgetError
from .lp import LpProblem, LpSolution, solve_lp, STATUS_OPTIMAL


class UncoverableBitError(ValueError):
    """Some target bit is covered by no candidate; carries the (r, i) witness."""

    def __init__(self, target_index: int, variable: int):
        super().__init__(f"bit {variable} of target {target_index} has no covering candidate")
        self.target_index = target_index
        self.variable = variable


@dataclass(frozen=True)
class CandidateSet:
    """Deduplicated anchor-pattern candidates.

    ``anchors[v]`` is the least (weight, mask)-ordered anchor pattern whose
    intersection-of-containing-targets equals ``metafeatures[v]``.
    """

    metafeatures: tuple[Monomial, ...]
    anchors: tuple[int, ...]
    anchor_to_var: dict[int, int]

    def __len__(self):
        return len(self.metafeatures)


def generate_candidates(ts: TargetSet, c: int) -> CandidateSet:
    """One candidate per bit pattern y of weight <= c contained in at least
    one target: the bitwise-AND of all containing targets.  Candidates with
    identical variable sets are merged keeping the least-index y."""
    if c > 3:
        raise CombinatorialBudgetError("candidate generation guarded to c <= 3")
    n = ts.n
    masks = [t.mask for t in ts]
    seen: dict[int, int] = {}
    metas: list[Monomial] = []
    anchors: list[int] = []
    anchor_to_var: dict[int, int] = {}
    for weight in range(1, c + 1):
        for combo in itertools.combinations(range(n), weight):
            y = 0
            for b in combo:
                y |= 1 << b
            inter = None
            for tm in masks:
                if y & ~tm == 0:
                    inter = tm if inter is None else inter & tm
            if inter is None:
                continue
            if inter in seen:
                anchor_to_var[y] = seen[inter]
                continue
            var = len(metas)
            seen[inter] = var
            metas.append(Monomial(inter, n))
            anchors.append(y)
            anchor_to_var[y] = var
    return CandidateSet(metafeatures=tuple(metas), anchors=tuple(anchors),
                        anchor_to_var=anchor_to_var)


@dataclass(frozen=True)
class SparseLpInstance:
    """The covering/sparsity relaxation over candidate indicator variables.

    Objective: minimize the total selected mass.  Per target bit, the
    candidates containing that bit and contained in the target must sum to at
    least 1 (identical cover rows are emitted once); per target, the contained
    candidates must sum to at most the sparsity level.
    """

    candidates: CandidateSet
    targets: TargetSet
    k: int
    problem: LpProblem
    containment: np.ndarray  # (num_targets, num_candidates) bool


def build_lp(candidates: CandidateSet, ts: TargetSet, k: int) -> SparseLpInstance:
    metas = candidates.metafeatures
    nv = len(metas)
    n = ts.n
    contain = np.zeros((len(ts.targets), nv), dtype=bool)
    for r, t in enumerate(ts.targets):
        for v, m in enumerate(metas):
            contain[r, v] = m.mask & ~t.mask == 0
    rows: list[np.ndarray] = []
    ops: list[str] = []
    rhs: list[float] = []
    seen_rows: set[bytes] = set()
    for r, t in enumerate(ts.targets):
        for b in range(n):
            if not (t.mask >> b) & 1:
                continue
            sel = np.array([contain[r, v] and bool((metas[v].mask >> b) & 1)
                            for v in range(nv)])
            if not sel.any():
                raise UncoverableBitError(r, b + 1)
            key = sel.tobytes()
            if key in seen_rows:
                continue
            seen_rows.add(key)
            rows.append(sel.astype(np.float64))
            ops.append(">=")
            rhs.append(1.0)
    for r in range(len(ts.targets)):
        rows.append(contain[r].astype(np.float64))
        ops.append("<=")
        rhs.append(float(k))
    for v in range(nv):
        e = np.zeros(nv)
        e[v] = 1.0
        rows.append(e)
        ops.append("<=")
        rhs.append(1.0)
    problem = LpProblem(c=np.ones(nv), A=np.array(rows), ops=tuple(ops),
                        b=np.array(rhs))
    return SparseLpInstance(candidates=candidates, targets=ts, k=k,
                            problem=problem, containment=contain)


def ground_truth_vector(instance: SparseLpInstance, feature_anchor_masks) -> np.ndarray | None:
    """Indicator of the candidates generated by the planted anchors; None when
    some anchor produced no candidate (cannot happen on planted instances)."""
    z = np.zeros(len(instance.candidates))
    for y in feature_anchor_masks:
        var = instance.candidates.anchor_to_var.get(int(y))
        if var is None:
            return None
        z[var] = 1.0
    return z


def check_feasible(instance: SparseLpInstance, z: np.ndarray, tol: float = 1e-9) -> bool:
    p = instance.problem
    lhs = p.A @ z
    for v, op, rb in zip(lhs, p.ops, p.b):
        if op == ">=" and v < rb - tol:
            return False
        if op == "<=" and v > rb + tol:
            return False
        if op == "=" and abs(v - rb) > tol:
            return False
    return True


@dataclass
class RoundedDictionary:
    dictionary: Dictionary
    selected_vars: tuple[int, ...]
    relevant_sets: tuple[tuple[int, ...], ...]  # per target, contained selected vars
    retries: int
    per_target_counts: tuple[int, ...]
    sparsity_bound: float


def round_solution(instance: SparseLpInstance, solution: LpSolution, seed,
                   max_retries: int = 16) -> RoundedDictionary:
    """Independent rounding: keep candidate y with probability
    min(1, Z_y ln(n^2 |TS|)); verify full coverage and the per-target
    sparsity bound 2 max(k,3) ln(n^2 |TS|), retrying with fresh coins."""
    if solution.status != STATUS_OPTIMAL or solution.x is None:
        raise ValueError("rounding needs an optimal LP solution")
    ts = instance.targets
    n = ts.n
    boost = math.log((n ** 2) * max(1, len(ts.targets)))
    probs = np.minimum(1.0, np.maximum(solution.x, 0.0) * boost)
    sparsity_bound = 2.0 * max(instance.k, 3) * boost
    rng = np.random.default_rng(seed)
    last_violation = None
    for attempt in range(max_retries):
        pick = rng.random(len(probs)) < probs
        selected = np.flatnonzero(pick)
        ok = True
        rel: list[tuple[int, ...]] = []
        counts: list[int] = []
        for r, t in enumerate(ts.targets):
            inside = [int(v) for v in selected if instance.containment[r, v]]
            union = 0
            for v in inside:
                union |= instance.candidates.metafeatures[v].mask
            if union != t.mask:
                ok = False
                last_violation = ("coverage", r)
                break
            if len(inside) > sparsity_bound:
                ok = False
                last_violation = ("sparsity", r)
                break
            rel.append(tuple(inside))
            counts.append(len(inside))
        if ok:
            d = Dictionary(tuple(instance.candidates.metafeatures[v] for v in selected))
            return RoundedDictionary(dictionary=d,
                                     selected_vars=tuple(int(v) for v in selected),
                                     relevant_sets=tuple(rel), retries=attempt,
                                     per_target_counts=tuple(counts),
                                     sparsity_bound=sparsity_bound)
    kind, r = last_violation if last_violation else ("unknown", -1)
    raise RuntimeError(
        f"rounding failed {max_retries} times; last violation: {kind} on target {r}")


@dataclass
class SparsePipelineResult:
    candidates: CandidateSet
    lp: SparseLpInstance
    solution: LpSolution
    rounded: RoundedDictionary


def sparse_autoencode(ts: TargetSet, c: int, k: int, seed,
                      max_retries: int = 16) -> SparsePipelineResult:
    """Full pipeline: candidates, LP relaxation, simplex solve, rounding."""
    cands = generate_candidates(ts, c)
    lp = build_lp(cands, ts, k)
    sol = solve_lp(lp.problem)
    if sol.status != STATUS_OPTIMAL:
        raise RuntimeError(f"LP solve ended with status {sol.status}")
    rounded = round_solution(lp, sol, seed, max_retries=max_retries)
    return SparsePipelineResult(candidates=cands, lp=lp, solution=sol, rounded=rounded)


@dataclass
class MinAutoencodeResult:
    dictionary: Dictionary
    decompositions: tuple[tuple[int, ...], ...]
    exact: bool


def autoencode_min(ts: TargetSet) -> MinAutoencodeResult:
    """Fewest hidden nodes whose unions reproduce every input exactly (under
    the anchor-variable assumption); reports rather than asserts on arbitrary
    inputs."""
    d = solve_consistency(ts)
    decomp = []
    for t in ts:
        decomp.append(tuple(j for j, m in enumerate(d) if m.mask & ~t.mask == 0))
    exact = all(represents(t, d) for t in ts)
    return MinAutoencodeResult(dictionary=d, decompositions=tuple(decomp), exact=exact)
