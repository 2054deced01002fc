"""Monomials over {0,1}^n, dictionary consistency solving, and the online session.

Variable sets are fixed-width bit masks held in Python ints (word-parallel
subset tests and intersections), with 1-based variable indices at the API
boundary: bit ``i`` of a mask is variable ``i+1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CombinatorialBudgetError, DimensionMismatchError

MAX_VARS_DEFAULT = 4096


def _iter_bits(mask: int):
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


@dataclass(frozen=True)
class Monomial:
    """A conjunction of variables, stored as a bit mask over {1..n}."""

    mask: int
    n: int

    def __post_init__(self):
        # arbitrary numpy integers sneak in easily and would overflow at 64 bits
        object.__setattr__(self, "mask", int(self.mask))
        object.__setattr__(self, "n", int(self.n))
        if self.n < 0 or self.n > MAX_VARS_DEFAULT:
            raise ValueError(f"ambient dimension {self.n} out of range")
        if self.mask < 0 or self.mask >> self.n:
            raise ValueError("mask has bits outside {1..n}")

    @classmethod
    def from_vars(cls, variables, n: int) -> "Monomial":
        mask = 0
        for v in variables:
            v = int(v)
            if not 1 <= v <= n:
                raise ValueError(f"variable {v} outside 1..{n}")
            mask |= 1 << (v - 1)
        return cls(mask, n)

    @property
    def vars(self) -> tuple[int, ...]:
        return tuple(b + 1 for b in _iter_bits(self.mask))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def is_empty(self) -> bool:
        return self.mask == 0

    def subset_of(self, other: "Monomial") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def intersection(self, other: "Monomial") -> "Monomial":
        self._check(other)
        return Monomial(self.mask & other.mask, self.n)

    def union(self, other: "Monomial") -> "Monomial":
        self._check(other)
        return Monomial(self.mask | other.mask, self.n)

    def evaluate(self, x) -> bool:
        """True iff every variable of the monomial is 1 in the bit vector x."""
        x = np.asarray(x)
        return all(x[b] >= 0.5 for b in _iter_bits(self.mask))

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        idx = [b for b in _iter_bits(self.mask)]
        if not idx:
            return np.ones(X.shape[0], dtype=bool)
        return (np.asarray(X)[:, idx] >= 0.5).all(axis=1)

    def _check(self, other: "Monomial"):
        if self.n != other.n:
            raise DimensionMismatchError(f"ambient dims differ: {self.n} != {other.n}")


@dataclass(frozen=True)
class TargetSet:
    """Ordered targets; order is arrival order and duplicates are kept."""

    targets: tuple[Monomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        dims = {t.n for t in self.targets}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed ambient dims in target set: {dims}")

    def __len__(self):
        return len(self.targets)

    def __iter__(self):
        return iter(self.targets)

    @property
    def n(self) -> int:
        return self.targets[0].n if self.targets else 0


@dataclass(frozen=True)
class Dictionary:
    """Ordered hypothesized metafeatures."""

    metafeatures: tuple[Monomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "metafeatures", tuple(self.metafeatures))

    def __len__(self):
        return len(self.metafeatures)

    def __iter__(self):
        return iter(self.metafeatures)


def _covered_mask(target_mask: int, masks) -> int:
    cov = 0
    for m in masks:
        if m & ~target_mask == 0:
            cov |= m
    return cov


def covered_vars(target: Monomial, dictionary: Dictionary) -> set[int]:
    """Union of the variables of all dictionary monomials fully contained in the target."""
    for m in dictionary:
        target._check(m)
    cov = _covered_mask(target.mask, (m.mask for m in dictionary))
    return {b + 1 for b in _iter_bits(cov)}


def represents(target: Monomial, dictionary: Dictionary) -> bool:
    """True iff the target is exactly the union of its contained dictionary elements."""
    return _covered_mask(target.mask, (m.mask for m in dictionary)) == target.mask


def reconstruction_ok(ts: TargetSet, dictionary: Dictionary) -> bool:
    return all(represents(t, dictionary) for t in ts)


def solve_consistency(ts: TargetSet) -> Dictionary:
    """Greedy minimal-variable consistency solver.

    While some target is not the union of its contained metafeatures: take the
    least-index such target, pick the minimal uncovered variable z (no other
    uncovered variable appears in a strictly smaller set of targets; least
    index breaks ties), and emit the intersection of all targets containing z.
    Under the anchor-variable assumption the output is a minimum-size basis;
    on arbitrary input the result may fail to reconstruct some targets, which
    callers can detect via ``reconstruction_ok``.
    """
    masks = [t.mask for t in ts.targets]
    n = ts.n
    out: list[int] = []
    while True:
        picked = -1
        for r, tm in enumerate(masks):
            if _covered_mask(tm, out) != tm:
                picked = r
                break
        if picked < 0:
            break
        tm = masks[picked]
        uncovered = tm & ~_covered_mask(tm, out)
        containing = {z: [r for r, other in enumerate(masks) if (other >> z) & 1]
                      for z in _iter_bits(uncovered)}
        occ = {z: sum(1 << r for r in rs) for z, rs in containing.items()}
        minimal = []
        for z, oz in occ.items():
            if not any(oz2 != oz and oz2 & ~oz == 0 for oz2 in occ.values()):
                minimal.append(z)
        z_star = min(minimal)
        new_mask = (1 << n) - 1
        for r in containing[z_star]:
            new_mask &= masks[r]
        out.append(new_mask)
    return Dictionary(tuple(Monomial(m, n) for m in out))


def _intersection_closure(masks: list[int], cap: int) -> list[int]:
    seen = {m for m in masks if m}
    frontier = list(seen)
    while frontier:
        new = []
        for a in frontier:
            for b in seen.copy():
                c = a & b
                if c and c not in seen:
                    seen.add(c)
                    new.append(c)
                    if len(seen) > cap:
                        raise CombinatorialBudgetError(
                            f"intersection closure exceeded {cap} candidates")
        frontier = new
    return sorted(seen)


def brute_force_set_basis(ts: TargetSet, k_max: int,
                          max_vars: int = 16, max_candidates: int = 4000) -> Dictionary | None:
    """Exhaustive minimum-cardinality basis search for small instances.

    Candidates are restricted to intersections of subfamilies of the targets.
    This loses no generality: if basis element b is used inside targets
    T_{r1},...,T_{rj}, replacing b by the intersection of all targets that
    contain b keeps every reconstruction valid (the replacement still lies
    inside each T_{ri} and contains b, so unions only gain variables already
    present), hence some minimum basis consists of such intersections only.

    Returns None when no basis of size <= k_max exists.
    """
    if k_max > 5:
        raise CombinatorialBudgetError("k_max above the budget guard of 5")
    union_mask = 0
    for t in ts:
        union_mask |= t.mask
    if union_mask.bit_count() > max_vars:
        raise CombinatorialBudgetError(
            f"instance has {union_mask.bit_count()} variables; guard is {max_vars}")
    n = ts.n
    target_masks = [t.mask for t in ts]
    nontrivial = [m for m in target_masks if m]
    if not nontrivial:
        return Dictionary(())
    cands = _intersection_closure(nontrivial, max_candidates)
    # contained[c, r] holds candidate c's mask if it fits inside target r, else 0
    contained = np.zeros((len(cands), len(target_masks)), dtype=np.uint32)
    for ci, c in enumerate(cands):
        for r, tm in enumerate(target_masks):
            if c & ~tm == 0:
                contained[ci, r] = c
    tgt = np.array(target_masks, dtype=np.uint32)
    for size in range(1, min(k_max, len(cands)) + 1):
        combos = np.array(list(itertools.combinations(range(len(cands)), size)),
                          dtype=np.int64)
        for lo in range(0, len(combos), 100_000):
            chunk = combos[lo:lo + 100_000]
            unions = contained[chunk[:, 0]]
            for col in range(1, size):
                unions = unions | contained[chunk[:, col]]
            ok = (unions == tgt[None, :]).all(axis=1)
            hits = np.flatnonzero(ok)
            if hits.size:
                best = chunk[hits[0]]
                return Dictionary(tuple(Monomial(cands[i], n) for i in best))
    return None


def count_implication_edges(ts: TargetSet, n: int) -> int:
    """Edges (x_i, x_j), i != j, where every target containing x_i also contains x_j."""
    full = (1 << n) - 1
    masks = [t.mask for t in ts]
    edges = 0
    for i in range(n):
        implied = full
        hit = False
        for m in masks:
            if (m >> i) & 1:
                implied &= m
                hit = True
        if not hit:
            implied = full
        edges += implied.bit_count() - ((implied >> i) & 1)
    return edges


@dataclass(frozen=True)
class OnlineStep:
    index: int
    covered: bool
    dictionary: Dictionary
    dictionary_size: int
    edges: int
    potential: int


@dataclass(frozen=True)
class OnlineTranscript:
    steps: tuple[OnlineStep, ...]
    dictionary: Dictionary
    scratch_count: int

    @property
    def scratch_bound_witnesses(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.steps if not s.covered)


def online_session(targets, n: int | None = None, k_hint: int | None = None) -> OnlineTranscript:
    """Abstract online run: pay a scratch whenever the current dictionary
    cannot represent the arriving target, then re-solve consistency.

    The recorded potential is |D| - |E(G_TS)| over the implication graph of
    the scratch-learned targets; it strictly increases at every scratch event
    (each event removes an implication edge or grows the dictionary).
    """
    targets = list(targets)
    if n is None:
        if not targets:
            raise ValueError("need targets or an explicit n")
        n = targets[0].n
    ts: list[Monomial] = []
    d = Dictionary(())
    steps = []
    scratch = 0
    for idx, t in enumerate(targets):
        covered = represents(t, d)
        if not covered:
            scratch += 1
            ts.append(t)
            d = solve_consistency(TargetSet(tuple(ts)))
        edges = count_implication_edges(TargetSet(tuple(ts)), n)
        steps.append(OnlineStep(index=idx, covered=covered, dictionary=d,
                                dictionary_size=len(d), edges=edges,
                                potential=len(d) - edges))
    return OnlineTranscript(steps=tuple(steps), dictionary=d, scratch_count=scratch)


@dataclass(frozen=True)
class PlantedBooleanInstance:
    """Ground-truth metafeatures with designated private anchor variables."""

    true_metafeatures: tuple[Monomial, ...]
    anchors: tuple[int, ...]  # anchors[j] is the private variable of metafeature j
    targets: TargetSet
    compositions: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def n(self) -> int:
        return self.true_metafeatures[0].n

    @property
    def k(self) -> int:
        return len(self.true_metafeatures)

    def anchor_property_holds(self) -> bool:
        for j, y in enumerate(self.anchors):
            bit = 1 << (y - 1)
            if not self.true_metafeatures[j].mask & bit:
                return False
            for j2, m in enumerate(self.true_metafeatures):
                if j2 != j and m.mask & bit:
                    return False
        return True


def refinement_report(instance: PlantedBooleanInstance, produced: Dictionary) -> dict:
    """Check the produced dictionary against the planted truth.

    contains_true_ok: every produced metafeature contains some true one whose
    presence in a target forces the produced one inside that target
    (not_too_specific_ok checks that forcing).  anchor_closure_ok: whenever a
    produced metafeature holds anchor y_j it holds all of metafeature j.
    """
    truth = instance.true_metafeatures
    ts = instance.targets
    contains_true = True
    not_too_specific = True
    for mt in produced:
        witness = False
        for mj in truth:
            if mj.mask & ~mt.mask:
                continue
            if all(mt.mask & ~t.mask == 0 for t in ts if mj.mask & ~t.mask == 0):
                witness = True
                break
        if not witness:
            contains_true = False
            not_too_specific = False
            break
    anchor_closure = True
    for mt in produced:
        for j, y in enumerate(instance.anchors):
            if (mt.mask >> (y - 1)) & 1 and truth[j].mask & ~mt.mask:
                anchor_closure = False
    return {
        "contains_true_ok": contains_true,
        "not_too_specific_ok": not_too_specific,
        "anchor_closure_ok": anchor_closure,
        "reconstruction_ok": reconstruction_ok(ts, produced),
        "size_within_k": len(produced) <= instance.k,
    }
