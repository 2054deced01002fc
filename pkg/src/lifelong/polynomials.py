"""Multilinear polynomials over {0,1}^n: membership-query interpolation,
L1-bounded regression over conjunction features, and the lifelong driver that
re-compactifies its monomial dictionary after every scratch-learned task.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .booleans import Dictionary, Monomial, TargetSet, solve_consistency
from .errors import SampleBudgetError
from .sampling import Distribution, MqOracle, PolynomialEqOracle, _draw

SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class MultilinearPolynomial:
    """Map from monomials to nonzero real coefficients, in a fixed ambient n."""

    term_items: tuple[tuple[int, float], ...]  # (mask, coefficient), sorted by mask
    n: int

    @classmethod
    def from_terms(cls, terms, n: int) -> "MultilinearPolynomial":
        items = {}
        for key, coef in (terms.items() if hasattr(terms, "items") else terms):
            mask = key.mask if isinstance(key, Monomial) else Monomial.from_vars(key, n).mask
            if coef != 0.0:
                items[mask] = items.get(mask, 0.0) + float(coef)
        return cls(tuple(sorted((m, c) for m, c in items.items() if c != 0.0)), n)

    @classmethod
    def zero(cls, n: int) -> "MultilinearPolynomial":
        return cls((), n)

    @property
    def terms(self) -> dict[Monomial, float]:
        return {Monomial(m, self.n): c for m, c in self.term_items}

    @property
    def term_count(self) -> int:
        return len(self.term_items)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(c) for _, c in self.term_items))

    def coefficient(self, monomial: Monomial) -> float:
        for m, c in self.term_items:
            if m == monomial.mask:
                return c
        return 0.0

    def evaluate_mask(self, mask: int) -> float:
        return float(sum(c for m, c in self.term_items if m & ~mask == 0))

    def evaluate(self, x) -> float:
        x = np.asarray(x)
        mask = 0
        for i in range(self.n):
            if x[i] >= 0.5:
                mask |= 1 << i
        return self.evaluate_mask(mask)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X) >= 0.5
        out = np.zeros(X.shape[0])
        for m, c in self.term_items:
            idx = [b for b in range(self.n) if (m >> b) & 1]
            out += c * (X[:, idx].all(axis=1) if idx else 1.0)
        return out

    def subset_sums(self, mask: int) -> float:
        """Zeta transform at one point: sum of coefficients of subsets of mask."""
        return self.evaluate_mask(mask)

    def same_terms(self, other: "MultilinearPolynomial", tol: float = SUPPORT_TOL) -> bool:
        if self.n != other.n:
            return False
        mine = dict(self.term_items)
        theirs = dict(other.term_items)
        for mask in set(mine) | set(theirs):
            if abs(mine.get(mask, 0.0) - theirs.get(mask, 0.0)) > tol:
                return False
        return True


class PolynomialValueOracle:
    """Labeled (x, f(x)) examples for a hidden polynomial under a distribution."""

    def __init__(self, dist: Distribution, target: MultilinearPolynomial, seed):
        self.dist = dist
        self.target = target
        self.rng = np.random.default_rng(seed)
        self.query_count = 0

    def draw(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        X = _draw(self.dist, self.rng, count)
        self.query_count += count
        return X, self.target.evaluate_batch(X)


def mq_interpolate(oracle: MqOracle, n: int, t_max: int,
                   tol: float = SUPPORT_TOL,
                   eq_oracle: PolynomialEqOracle | None = None) -> MultilinearPolynomial:
    """Exact sparse multilinear interpolation from membership queries.

    Maintains found coefficients; the residual of a variable set S is the
    oracle value at S's indicator minus the subset sums of found terms.  A
    descent from any set with nonzero residual, greedily dropping variables
    while the residual stays nonzero, lands on a minimal nonzero-residual set,
    whose residual equals its coefficient.  Terms are discovered by probing
    the full variable set and, when an equivalence oracle is supplied, by
    descending from its counterexamples; exact subset-sum cancellations can
    hide support from the full-set probe, which the counterexample loop
    repairs (they have measure zero for generic real coefficients).
    """
    known: dict[int, float] = {}
    cache: dict[int, float] = {}

    def g(mask: int) -> float:
        if mask not in cache:
            cache[mask] = oracle.query_mask(mask)
        return cache[mask]

    def residual(mask: int) -> float:
        acc = g(mask)
        for m, c in known.items():
            if m & ~mask == 0:
                acc -= c
        return acc

    def descend(mask: int) -> int:
        while True:
            removed = False
            probe = mask
            while probe:
                lsb = probe & -probe
                probe ^= lsb
                child = mask ^ lsb
                if abs(residual(child)) > tol:
                    mask = child
                    removed = True
            if not removed:
                return mask

    full = (1 << n) - 1
    while True:
        start = None
        if abs(residual(full)) > tol:
            start = full
        elif eq_oracle is not None:
            hyp = MultilinearPolynomial(tuple(sorted(known.items())), n)
            witness = eq_oracle.query(hyp)
            if witness is not None:
                wmask = 0
                for i in range(n):
                    if witness[i] >= 0.5:
                        wmask |= 1 << i
                if abs(residual(wmask)) > tol:
                    start = wmask
        if start is None:
            return MultilinearPolynomial(tuple(sorted(known.items())), n)
        term = descend(start)
        known[term] = residual(term)
        if len(known) > t_max:
            raise SampleBudgetError(
                f"target has more than t_max={t_max} terms")


@dataclass
class RegressionFit:
    coefficients: dict[Monomial, float]
    holdout_mse: float
    samples_used: int
    l1_norm: float

    def as_polynomial(self, n: int) -> MultilinearPolynomial:
        return MultilinearPolynomial.from_terms(self.coefficients, n)


def regression_sample_size(B: float, k_eff: int, eps_mse: float) -> int:
    return int(math.ceil(8.0 * B * B * k_eff * math.log(2.0) / (eps_mse * eps_mse)))


def l1_regress(features: list[Monomial], oracle: PolynomialValueOracle, B: float,
               k_eff: int, eps_mse: float) -> RegressionFit | None:
    """Fit a linear function of the feature monomials; succeed iff a fresh
    holdout has mean squared error at most eps_mse.

    The data is noiseless, so ordinary least squares on the drawn sample finds
    the exact expansion whenever one exists over the features; the holdout is
    the arbiter either way.  Returns None ("no good fit") on failure.
    """
    if k_eff > 12:
        raise ValueError("k_eff capped at 12 (feature set grows as 2^k)")
    if len(features) > (1 << k_eff):
        raise ValueError("more features than 2^k_eff allows")
    count = regression_sample_size(B, k_eff, eps_mse)
    X, y = oracle.draw(count)
    phi = np.column_stack([f.evaluate_batch(X).astype(np.float64) for f in features]) \
        if features else np.zeros((count, 0))
    if features:
        coef, *_ = np.linalg.lstsq(phi, y, rcond=None)
    else:
        coef = np.zeros(0)
    holdout = max(200, count // 4)
    Xh, yh = oracle.draw(holdout)
    if features:
        phih = np.column_stack([f.evaluate_batch(Xh).astype(np.float64) for f in features])
        pred = phih @ coef
    else:
        pred = np.zeros(holdout)
    mse = float(np.mean((pred - yh) ** 2))
    if mse > eps_mse:
        return None
    coef = np.where(np.abs(coef) <= SUPPORT_TOL, 0.0, coef)
    return RegressionFit(coefficients={f: float(c) for f, c in zip(features, coef) if c != 0.0},
                         holdout_mse=mse, samples_used=count + holdout,
                         l1_norm=float(np.sum(np.abs(coef))))


def conjunction_closure(metafeatures: Dictionary) -> list[Monomial]:
    """All products (variable-set unions) of subsets of the metafeatures,
    deduplicated; includes the empty product (constant term)."""
    if len(metafeatures) > 12:
        raise ValueError("conjunction closure capped at 12 metafeatures")
    mons = list(metafeatures)
    n = mons[0].n if mons else 0
    seen: dict[int, Monomial] = {}
    for size in range(len(mons) + 1):
        for combo in itertools.combinations(mons, size):
            mask = 0
            for m in combo:
                mask |= m.mask
            if mask not in seen:
                seen[mask] = Monomial(mask, n)
    return [seen[k] for k in sorted(seen)]


@dataclass
class PolyTask:
    """Oracle bundle for one hidden polynomial task."""

    mq: MqOracle
    values: PolynomialValueOracle
    eq: PolynomialEqOracle

    @property
    def n(self) -> int:
        return self.mq.n


def make_poly_tasks(targets, dist: Distribution, seed) -> list[PolyTask]:
    from .sampling import as_seed_sequence
    targets = list(targets)
    seeds = as_seed_sequence(seed).spawn(len(targets))
    return [PolyTask(mq=MqOracle(t), values=PolynomialValueOracle(dist, t, s), eq=PolynomialEqOracle(t))
            for t, s in zip(targets, seeds)]


@dataclass(frozen=True)
class PolyTaskOutcome:
    task_index: int
    path: str  # "reused" | "scratch"
    value_samples: int
    mq_queries: int
    final_mse: float
    dictionary_size: int


@dataclass
class PolyRepState:
    """Streaming state: monomial dictionary, accumulated distinct terms, and
    one explicit polynomial hypothesis per task."""

    n: int
    metafeatures: Dictionary
    term_set: TargetSet
    hypotheses: list[MultilinearPolynomial]
    scratch_count: int = 0
    total_value_samples: int = 0
    total_mq_queries: int = 0

    def predict(self, task_index: int, X: np.ndarray) -> np.ndarray:
        return self.hypotheses[task_index].evaluate_batch(X)

    def save(self, path):
        write_poly_rep(self, path)

    @classmethod
    def load(cls, path) -> "PolyRepState":
        return read_poly_rep(path)


def warmup_single_layer(tasks: list[PolyTask], k: int, B: float, eps_mse: float,
                        t_max: int = 64):
    """Single-layer driver: hypothesized monomials are used directly as
    regression features; every scratch adds at least one unseen monomial."""
    mons: list[Monomial] = []
    outcomes = []
    hyps: list[MultilinearPolynomial] = []
    scratch = 0
    for i, task in enumerate(tasks):
        v0, q0 = task.values.query_count, task.mq.query_count
        fit = l1_regress(list(mons), task.values, B, max(1, len(mons).bit_length()), eps_mse) \
            if mons else None
        if fit is not None:
            hyps.append(fit.as_polynomial(task.n))
            outcomes.append(PolyTaskOutcome(i, "reused", task.values.query_count - v0,
                                            task.mq.query_count - q0, fit.holdout_mse, len(mons)))
            continue
        scratch += 1
        poly = mq_interpolate(task.mq, task.n, t_max, eq_oracle=task.eq)
        new = [Monomial(m, task.n) for m, _ in poly.term_items
               if all(m != e.mask for e in mons)]
        if not new:
            raise RuntimeError("scratch-learned task contributed no new monomial")
        mons.extend(new)
        hyps.append(poly)
        outcomes.append(PolyTaskOutcome(i, "scratch", task.values.query_count - v0,
                                        task.mq.query_count - q0, 0.0, len(mons)))
    return mons, hyps, outcomes, scratch


def run_poly_lifelong(tasks: list[PolyTask], k: int, B: float, eps_mse: float,
                      t_max: int = 64):
    """Two-layer driver: regression features are all conjunctions of the
    current metafeatures; on failure, interpolate exactly, grow the term set,
    and re-solve consistency to re-compactify the dictionary."""
    n = tasks[0].n if tasks else 0
    terms: list[Monomial] = []
    mtilde = Dictionary(())
    hyps: list[MultilinearPolynomial] = []
    outcomes: list[PolyTaskOutcome] = []
    scratch = 0
    for i, task in enumerate(tasks):
        v0, q0 = task.values.query_count, task.mq.query_count
        fit = None
        if len(mtilde):
            features = conjunction_closure(mtilde)
            k_eff = min(12, max(1, len(mtilde)))
            fit = l1_regress(features, task.values, B, k_eff, eps_mse)
        if fit is not None:
            hyps.append(fit.as_polynomial(n))
            outcomes.append(PolyTaskOutcome(i, "reused", task.values.query_count - v0,
                                            task.mq.query_count - q0, fit.holdout_mse,
                                            len(mtilde)))
            continue
        scratch += 1
        poly = mq_interpolate(task.mq, n, t_max, eq_oracle=task.eq)
        for mask, _ in poly.term_items:
            if all(mask != t.mask for t in terms):
                terms.append(Monomial(mask, n))
        mtilde = solve_consistency(TargetSet(tuple(terms)))
        hyps.append(poly)
        outcomes.append(PolyTaskOutcome(i, "scratch", task.values.query_count - v0,
                                        task.mq.query_count - q0, 0.0, len(mtilde)))
    state = PolyRepState(n=n, metafeatures=mtilde, term_set=TargetSet(tuple(terms)),
                         hypotheses=hyps, scratch_count=scratch,
                         total_value_samples=sum(o.value_samples for o in outcomes),
                         total_mq_queries=sum(o.mq_queries for o in outcomes))
    return state, outcomes


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_polynomial(poly: MultilinearPolynomial, path):
    """POLY v1: one `<coefficient> ; <comma-separated indices>` line per term."""
    with open(path, "w") as fh:
        fh.write(poly_to_text(poly))


def poly_to_text(poly: MultilinearPolynomial) -> str:
    lines = [f"POLY v1 n={poly.n}"]
    for mask, coef in poly.term_items:
        idx = ",".join(str(b + 1) for b in range(poly.n) if (mask >> b) & 1)
        lines.append(f"{_fmt(coef)} ; {idx}")
    return "\n".join(lines) + "\n"


def read_polynomial(path) -> MultilinearPolynomial:
    with open(path) as fh:
        return poly_from_text(fh.read())


def poly_from_text(text: str) -> MultilinearPolynomial:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    head = lines[0].split()
    if head[:2] != ["POLY", "v1"]:
        raise ValueError("not a POLY v1 file")
    n = int(dict(kv.split("=") for kv in head[2:])["n"])
    items = []
    for ln in lines[1:]:
        coef_part, _, idx_part = ln.partition(";")
        coef = float(coef_part.strip())
        idx = [int(v) for v in idx_part.strip().split(",") if v.strip()]
        items.append((Monomial.from_vars(idx, n), coef))
    return MultilinearPolynomial.from_terms(items, n)


def write_poly_rep(state: PolyRepState, path):
    """POLYREP v1 container: dictionary monomials, the accumulated term set,
    then one POLY block per task hypothesis."""
    lines = [f"POLYREP v1 n={state.n} k={len(state.metafeatures)} "
             f"t={len(state.term_set)} m={len(state.hypotheses)} "
             f"scratch={state.scratch_count}"]
    lines.append("[metafeatures]")
    for mon in state.metafeatures:
        lines.append(",".join(str(v) for v in mon.vars))
    lines.append("[terms]")
    for mon in state.term_set:
        lines.append(",".join(str(v) for v in mon.vars))
    for idx, hyp in enumerate(state.hypotheses):
        lines.append(f"[hypothesis {idx}]")
        for mask, coef in hyp.term_items:
            cols = ",".join(str(b + 1) for b in range(state.n) if (mask >> b) & 1)
            lines.append(f"{_fmt(coef)} ; {cols}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_poly_rep(path) -> PolyRepState:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    head = lines[0].split()
    if head[:2] != ["POLYREP", "v1"]:
        raise ValueError("not a POLYREP v1 file")
    fields = dict(kv.split("=") for kv in head[2:])
    n = int(fields["n"])
    section = None
    mons: list[Monomial] = []
    terms: list[Monomial] = []
    hyp_items: list[list[tuple[Monomial, float]]] = []
    for ln in lines[1:]:
        s = ln.strip()
        if not s:
            continue
        if s.startswith("["):
            section = s.strip("[]").split()[0]
            if section == "hypothesis":
                hyp_items.append([])
            continue
        if section == "metafeatures":
            mons.append(Monomial.from_vars([int(v) for v in s.split(",") if v], n))
        elif section == "terms":
            terms.append(Monomial.from_vars([int(v) for v in s.split(",") if v], n))
        elif section == "hypothesis":
            coef_part, _, idx_part = s.partition(";")
            idx = [int(v) for v in idx_part.strip().split(",") if v.strip()]
            hyp_items[-1].append((Monomial.from_vars(idx, n), float(coef_part.strip())))
    hyps = [MultilinearPolynomial.from_terms(items, n) for items in hyp_items]
    return PolyRepState(n=n, metafeatures=Dictionary(tuple(mons)),
                        term_set=TargetSet(tuple(terms)), hypotheses=hyps,
                        scratch_count=int(fields.get("scratch", 0)))
