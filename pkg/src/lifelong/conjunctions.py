"""Conjunction learners over the Boolean core: exact equivalence-query
elimination, dictionary-reusing EQ sessions, Winnow over anchor-set
candidates, and product-distribution transfer with insignificant-variable
filtering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .booleans import (Dictionary, Monomial, TargetSet, count_implication_edges,
                       represents, solve_consistency)
from .errors import OracleInconsistencyError, SampleBudgetError
from .sampling import (ConjunctionEqOracle, ConjunctionOracle, Distribution,
                       PredicateEqOracle, sample)


def eq_learn_conjunction(oracle: ConjunctionEqOracle, n: int) -> tuple[Monomial, int]:
    """Exact elimination learner: start from the all-variables conjunction and
    drop every variable set to 0 in each positive counterexample.

    Monotone targets admit no negative counterexamples under this invariant;
    seeing one means the oracle lied, which is a hard failure.  Uses at most
    n+1 queries.
    """
    before = oracle.query_count
    hyp = Monomial((1 << n) - 1, n)
    while True:
        x = oracle.query(hyp)
        if x is None:
            return hyp, oracle.query_count - before
        if hyp.evaluate(x):
            raise OracleInconsistencyError(
                "negative counterexample against a monotone elimination hypothesis")
        keep = 0
        for b in range(n):
            if (hyp.mask >> b) & 1 and x[b] >= 0.5:
                keep |= 1 << b
        hyp = Monomial(keep, n)


@dataclass(frozen=True)
class SessionStep:
    task_index: int
    path: str  # "reused" | "scratch"
    queries: int
    dictionary_size: int
    potential: int
    mistakes: int = 0


@dataclass
class SessionTranscript:
    steps: list[SessionStep]
    dictionary: Dictionary
    total_queries: int
    scratch_count: int

    def queries_by_path(self, path: str) -> int:
        return sum(s.queries for s in self.steps if s.path == path)


def _reuse_by_elimination(oracle: ConjunctionEqOracle, dictionary: Dictionary,
                          n: int) -> Monomial | None:
    """Try to identify the target as a union of dictionary elements with a
    derived elimination learner; each derived query costs one real EQ query.

    Returns None when the target is not expressible over the dictionary
    (detected by a negative counterexample or by convergence without
    equivalence)."""
    live = list(range(len(dictionary)))
    mons = list(dictionary)
    for _ in range(len(mons) + 2):
        mask = 0
        for j in live:
            mask |= mons[j].mask
        hyp = Monomial(mask, n)
        x = oracle.query(hyp)
        if x is None:
            return hyp
        if hyp.evaluate(x):
            return None  # negative counterexample: not expressible
        pruned = [j for j in live if mons[j].evaluate(x)]
        if len(pruned) == len(live):
            return None
        live = pruned
    return None


def lifelong_eq_session(targets, n: int, k_hint: int | None = None) -> SessionTranscript:
    """Stream of conjunction targets learned by equivalence queries.

    Per target: attempt the derived elimination learner over the current
    dictionary (at most |D|+2 queries); on failure learn from scratch (at
    most n+1 queries), add the exact target to the scratch set, and re-solve
    consistency.
    """
    steps: list[SessionStep] = []
    ts: list[Monomial] = []
    d = Dictionary(())
    scratch_count = 0
    total = 0
    for idx, target in enumerate(targets):
        oracle = ConjunctionEqOracle(target)
        hyp = _reuse_by_elimination(oracle, d, n) if len(d) else None
        if hyp is None:
            learned, _ = eq_learn_conjunction(oracle, n)
            scratch_count += 1
            ts.append(learned)
            d = solve_consistency(TargetSet(tuple(ts)))
            path = "scratch"
        else:
            path = "reused"
        edges = count_implication_edges(TargetSet(tuple(ts)), n)
        total += oracle.query_count
        steps.append(SessionStep(idx, path, oracle.query_count, len(d),
                                 len(d) - edges))
    return SessionTranscript(steps=steps, dictionary=d, total_queries=total,
                             scratch_count=scratch_count)


def winnow_mistake_budget(k: int, num_features: int) -> float:
    return 2.0 + 3.0 * k * (math.log2(max(2, num_features)) + 1.0)


@dataclass
class WinnowState:
    """Multiplicative-weight state for learning a conjunction of candidate
    features, run as a monotone disjunction over the complemented bits."""

    weights: np.ndarray
    threshold: float
    mistake_count: int = 0

    @classmethod
    def fresh(cls, num_features: int) -> "WinnowState":
        return cls(weights=np.ones(num_features), threshold=float(num_features))

    def predict_conjunction(self, complemented_bits: np.ndarray) -> np.ndarray:
        scores = complemented_bits.astype(np.float64) @ self.weights
        return scores < self.threshold  # conjunction side of the reduction

    def update(self, complemented_bits: np.ndarray, disjunction_label: bool):
        self.mistake_count += 1
        active = complemented_bits >= 0.5
        if disjunction_label:
            self.weights[active] *= 2.0
        else:
            self.weights[active] /= 2.0


def winnow_eq_learn(oracle: PredicateEqOracle, feature_bits: np.ndarray,
                    feature_eval, k: int) -> tuple[WinnowState, bool]:
    """Drive Winnow with equivalence queries until equivalence or the classic
    mistake envelope 2 + 3k(log2 N + 1) is exhausted.

    ``feature_bits`` holds the candidate-feature truth values on the oracle's
    point grid; ``feature_eval(x)`` returns them for a single point.  Returns
    (state, converged).
    """
    state = WinnowState.fresh(feature_bits.shape[1])
    budget = winnow_mistake_budget(k, feature_bits.shape[1])
    comp_grid = 1.0 - feature_bits
    while True:
        pred_grid = state.predict_conjunction(comp_grid)
        x = oracle.query(lambda pts, pred=pred_grid: pred)
        if x is None:
            return state, True
        if state.mistake_count + 1 > budget:
            # an expressible target would have converged within the envelope,
            # so one more mistake proves inexpressibility; stop without it
            return state, False
        comp = 1.0 - feature_eval(x)
        conj_pred = bool(state.predict_conjunction(comp.reshape(1, -1))[0])
        # the counterexample's true conjunction label is the negation of the
        # prediction; the disjunction side flips it once more
        state.update(comp, disjunction_label=conj_pred)


def _weight_le_c_masks(n: int, c: int) -> list[int]:
    import itertools
    out = []
    for w in range(1, c + 1):
        for combo in itertools.combinations(range(n), w):
            m = 0
            for b in combo:
                m |= 1 << b
            out.append(m)
    return out


@dataclass
class AnchorSetSessionResult:
    transcript: SessionTranscript
    candidate_anchors: list[int]
    final_metafeatures: list[int]
    shrink_events: int
    scratch_shrank_every_time: bool
    max_mistakes: int


def anchor_set_eq_session(targets, n: int, c: int, k: int) -> AnchorSetSessionResult:
    """EQ session under the anchor-set assumption.

    Maintains one candidate metafeature per bit pattern y of weight <= c,
    initialized to the all-variables conjunction.  Per target, Winnow over the
    containment indicators of the candidates tries to express the target as a
    conjunction of at most k of them; on failure the target is learned from
    scratch and every candidate with y inside the target is intersected with
    it, which strictly shrinks at least one candidate on anchored instances.
    """
    if n > 16:
        raise ValueError("exhaustive equivalence oracles are guarded to n <= 16")
    anchors = _weight_le_c_masks(n, c)
    feats = [(1 << n) - 1 for _ in anchors]
    codes = np.arange(1 << n, dtype=np.int64)
    points = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)

    def containment_grid() -> np.ndarray:
        cols = []
        for fm in feats:
            idx = [b for b in range(n) if (fm >> b) & 1]
            cols.append(points[:, idx].all(axis=1) if idx else np.ones(len(points), bool))
        return np.column_stack(cols).astype(np.float64)

    grid = containment_grid()
    steps: list[SessionStep] = []
    ts: list[Monomial] = []
    scratch_count = 0
    shrink_events = 0
    always_shrank = True
    total = 0
    max_mistakes = 0
    for idx, target in enumerate(targets):
        pred_oracle = PredicateEqOracle(target)

        def feature_eval(x, feats=tuple(feats)):
            vals = []
            for fm in feats:
                ok = all(x[b] >= 0.5 for b in range(n) if (fm >> b) & 1)
                vals.append(1.0 if ok else 0.0)
            return np.array(vals)

        state, converged = winnow_eq_learn(pred_oracle, grid, feature_eval, k)
        queries = pred_oracle.query_count
        max_mistakes = max(max_mistakes, state.mistake_count)
        if converged:
            path = "reused"
        else:
            scratch_oracle = ConjunctionEqOracle(target)
            learned, q = eq_learn_conjunction(scratch_oracle, n)
            queries += q
            scratch_count += 1
            ts.append(learned)
            shrank = False
            for j, ym in enumerate(anchors):
                if ym & ~learned.mask == 0:
                    newmask = feats[j] & learned.mask
                    if newmask != feats[j]:
                        shrank = True
                    feats[j] = newmask
            shrink_events += int(shrank)
            always_shrank &= shrank
            grid = containment_grid()
            path = "scratch"
        edges = count_implication_edges(TargetSet(tuple(ts)), n)
        total += queries
        steps.append(SessionStep(idx, path, queries, len(ts), len(ts) - edges,
                                 mistakes=state.mistake_count))
    transcript = SessionTranscript(steps=steps, dictionary=Dictionary(tuple()),
                                   total_queries=total, scratch_count=scratch_count)
    return AnchorSetSessionResult(transcript=transcript, candidate_anchors=anchors,
                                  final_metafeatures=feats, shrink_events=shrink_events,
                                  scratch_shrank_every_time=always_shrank,
                                  max_mistakes=max_mistakes)


@dataclass(frozen=True)
class SignificantVarFilter:
    """Variables that are 0 too rarely to matter, frozen from one unlabeled sample."""

    insignificant: frozenset[int]  # 1-based indices
    sample_size_used: int
    threshold: float

    def keep_rows(self, X: np.ndarray) -> np.ndarray:
        idx = [v - 1 for v in sorted(self.insignificant)]
        if not idx:
            return np.ones(X.shape[0], dtype=bool)
        return (np.asarray(X)[:, idx] >= 0.5).all(axis=1)


def build_significant_filter(dist: Distribution, eps: float, delta: float,
                             seed) -> SignificantVarFilter:
    n = dist.dim
    s1 = int(math.ceil(4.0 * n / eps * math.log(4.0 * n / delta)))
    X = sample(dist, seed, s1)
    zero_frac = np.mean(X < 0.5, axis=0)
    thr = eps / (4.0 * n)
    insig = frozenset(int(i) + 1 for i in np.flatnonzero(zero_frac < thr))
    return SignificantVarFilter(insignificant=insig, sample_size_used=s1, threshold=thr)


@dataclass(frozen=True)
class TransferTaskOutcome:
    task_index: int
    path: str
    samples: int
    dictionary_size: int
    potential: int


@dataclass
class TransferResult:
    hypotheses: list[Monomial]
    outcomes: list[TransferTaskOutcome]
    dictionary: Dictionary
    var_filter: SignificantVarFilter
    unlabeled_samples: int
    labeled_samples: int
    scratch_count: int


def _consistent_over_dictionary(Xf, yf, dictionary: Dictionary, n: int) -> Monomial | None:
    """Most-specific conjunction over dictionary-containment bits consistent
    with the filtered sample, returned as its union of original variables."""
    bits = np.column_stack([m.evaluate_batch(Xf) for m in dictionary]) \
        if len(dictionary) else np.zeros((Xf.shape[0], 0), dtype=bool)
    pos = yf > 0
    if pos.any():
        selected = bits[pos].all(axis=0)
    else:
        selected = np.ones(len(dictionary), dtype=bool)
    neg = ~pos
    if neg.any() and len(dictionary):
        neg_hits = bits[neg][:, selected].all(axis=1) if selected.any() else np.ones(int(neg.sum()), bool)
        if neg_hits.any():
            return None
    elif neg.any() and not len(dictionary):
        return None  # empty conjunction predicts +1 everywhere, negatives refute it
    mask = 0
    for j, m in enumerate(dictionary):
        if selected[j]:
            mask |= m.mask
    return Monomial(mask, n)


def run_product_transfer(task_targets, dist: Distribution, eps: float, delta: float,
                         k: int, seed) -> TransferResult:
    """Conjunction transfer over a product distribution.

    Build the insignificant-variable filter once from unlabeled data; per
    task try a consistent conjunction over dictionary-containment features
    from a small labeled sample, otherwise learn from scratch on a larger
    sample, add the learned target to the scratch set, and re-solve
    consistency.  Sample sizes use explicit constants:
    s1 = ceil(4n/eps ln(4n/delta)), s2 = ceil(4k/eps ln(4m/delta)),
    s3 = ceil(4n/eps ln(4nk/delta)).
    """
    targets = list(task_targets)
    m = len(targets)
    n = dist.dim
    rootseq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    filt_seed, *task_seeds = rootseq.spawn(m + 1)
    var_filter = build_significant_filter(dist, eps, delta, filt_seed)
    s2 = int(math.ceil(4.0 * k / eps * math.log(4.0 * m / delta)))
    s3 = int(math.ceil(4.0 * n / eps * math.log(4.0 * n * max(1, k) / delta)))
    sig_mask = 0
    for v in range(1, n + 1):
        if v not in var_filter.insignificant:
            sig_mask |= 1 << (v - 1)
    ts: list[Monomial] = []
    d = Dictionary(())
    hyps: list[Monomial] = []
    outcomes: list[TransferTaskOutcome] = []
    scratch_count = 0
    labeled = 0
    for r, target in enumerate(targets):
        oracle = ConjunctionOracle(dist, target, task_seeds[r])
        X, y = oracle.draw(s2)
        keep = var_filter.keep_rows(X)
        hyp = _consistent_over_dictionary(X[keep], y[keep], d, n) if len(d) else None
        if hyp is not None:
            path = "reused"
        else:
            X3, y3 = oracle.draw(s3)
            keep3 = var_filter.keep_rows(X3)
            Xf, yf = X3[keep3], y3[keep3]
            pos = yf > 0
            if not pos.any():
                raise SampleBudgetError(
                    f"task {r}: no positive example among {s3} scratch draws; "
                    "target too unbalanced for the configured eps")
            inter = sig_mask
            for row in Xf[pos]:
                rowmask = 0
                for b in range(n):
                    if row[b] >= 0.5:
                        rowmask |= 1 << b
                inter &= rowmask
            hyp = Monomial(inter, n)
            bad = hyp.evaluate_batch(Xf[~pos]) if (~pos).any() else np.zeros(0, bool)
            if bad.any():
                raise OracleInconsistencyError(
                    f"task {r}: no conjunction consistent with the scratch sample")
            scratch_count += 1
            ts.append(hyp)
            d = solve_consistency(TargetSet(tuple(ts)))
            path = "scratch"
        hyps.append(hyp)
        edges = count_implication_edges(TargetSet(tuple(ts)), n)
        outcomes.append(TransferTaskOutcome(r, path, oracle.query_count, len(d),
                                            len(ts) - edges))
        labeled += oracle.query_count
    return TransferResult(hypotheses=hyps, outcomes=outcomes, dictionary=d,
                          var_filter=var_filter,
                          unlabeled_samples=var_filter.sample_size_used,
                          labeled_samples=labeled, scratch_count=scratch_count)
