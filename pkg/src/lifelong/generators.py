"""Planted-instance generators for every scenario, plus independent checkers
that verify each generated instance satisfies the assumption its driver needs
(the checkers run before the algorithm and gate the bound verdicts).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .booleans import Dictionary, Monomial, PlantedBooleanInstance, TargetSet
from .errors import GenerationBudgetError
from .geometry import OrthonormalBasis, UnitVector, angle_vector_to_subspace
from .linear_lifelong import gamma_effective_dimension_lower_bound
from .polynomials import MultilinearPolynomial


def _orthonormal_frame(rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    g = rng.standard_normal((n, rows))
    q, _ = np.linalg.qr(g)
    return q[:, :rows].T


def _angle_to_span(v: np.ndarray, rows: np.ndarray) -> float:
    if rows.size == 0:
        return math.pi / 2.0
    q, _ = np.linalg.qr(rows.T)
    q = q[:, : rows.shape[0]]
    proj = q.T @ v
    resid = v - q @ proj
    return math.atan2(float(np.linalg.norm(resid)), float(np.linalg.norm(proj)))


@dataclass(frozen=True)
class PlantedLinearStream:
    """Targets sharing a planted low-dimensional span.

    The first k targets are the frame itself (strongly separated scratch
    triggers); the rest are random unit combinations, optionally pushed
    off-span by an angle small enough to keep the separated-subsequence count
    at k.
    """

    targets: np.ndarray          # (m, n) unit rows
    frame: np.ndarray            # (k, n) orthonormal rows
    gamma: float
    perturb_angle: float         # 0 for exact-subspace streams

    @property
    def n(self) -> int:
        return self.targets.shape[1]

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @property
    def m(self) -> int:
        return self.targets.shape[0]


def planted_shared_subspace(n: int, k: int, m: int, seed, gamma: float,
                            perturb: bool = False) -> PlantedLinearStream:
    if m < k:
        raise ValueError("stream shorter than the planted dimension")
    rng = np.random.default_rng(seed)
    frame = _orthonormal_frame(rng, k, n)
    # keep perturbations well inside the separation budget so the planted
    # stream's separated-subsequence count stays at k
    pert = min(gamma / 2.0, gamma ** 2 / (20.0 * k)) if perturb else 0.0
    rows = [frame[i] for i in range(k)]
    for _ in range(m - k):
        c = rng.standard_normal(k)
        c /= np.linalg.norm(c)
        t = c @ frame
        if pert > 0.0:
            z = rng.standard_normal(n)
            z -= frame.T @ (frame @ z)
            z /= np.linalg.norm(z)
            ang = rng.uniform(0.0, pert)
            t = math.cos(ang) * t + math.sin(ang) * z
        rows.append(t / np.linalg.norm(t))
    return PlantedLinearStream(targets=np.array(rows), frame=frame, gamma=gamma,
                               perturb_angle=pert)


def shared_subspace_assumption_ok(stream: PlantedLinearStream) -> bool:
    basis = OrthonormalBasis(stream.frame, stream.n)
    tol = stream.perturb_angle + 1e-7
    for t in stream.targets:
        if angle_vector_to_subspace(UnitVector.normalized(t), basis) > tol:
            return False
    greedy = gamma_effective_dimension_lower_bound(stream.targets, stream.gamma)
    return greedy <= stream.k


@dataclass(frozen=True)
class PlantedTwoLevelStream:
    """Targets in one of r planted tau-dimensional subspaces of a k-span.

    The stream opens with each type's tau orthonormal axes (rejection-sampled
    so every axis is well separated from previously presented axes and from
    every <=tau-subset span of them), then continues with random in-type
    targets.
    """

    targets: np.ndarray            # (m, n)
    frame: np.ndarray              # (k, n)
    subframes: np.ndarray          # (r, tau, k), orthonormal rows within R^k
    task_types: tuple[int, ...]
    min_separation: float

    @property
    def n(self) -> int:
        return self.targets.shape[1]

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @property
    def r(self) -> int:
        return self.subframes.shape[0]

    @property
    def tau(self) -> int:
        return self.subframes.shape[1]


def planted_two_level(n: int, k: int, r: int, tau: int, m: int, seed,
                      min_separation: float = 0.25,
                      max_tries: int = 500) -> PlantedTwoLevelStream:
    if m < r * tau:
        raise ValueError("stream shorter than the axis prefix r*tau")
    rng = np.random.default_rng(seed)
    frame = _orthonormal_frame(rng, k, n)
    subframes = []
    accepted_axes: list[np.ndarray] = []  # lifted to R^n
    for s in range(r):
        for attempt in range(max_tries):
            sub = _orthonormal_frame(rng, tau, k)
            lifted = sub @ frame
            ok = True
            prev = np.array(accepted_axes) if accepted_axes else np.zeros((0, n))
            for ax in lifted:
                if prev.shape[0] < k and prev.shape[0] > 0:
                    if _angle_to_span(ax, prev) < min_separation:
                        ok = False
                        break
                for size in range(1, tau + 1):
                    for combo in itertools.combinations(range(prev.shape[0]), size):
                        if _angle_to_span(ax, prev[list(combo)]) < min_separation:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
                prev = np.vstack([prev, ax]) if prev.size else ax.reshape(1, -1)
            if ok:
                subframes.append(sub)
                accepted_axes.extend(list(lifted))
                break
        else:
            raise GenerationBudgetError(
                f"could not place subframe {s} with separation {min_separation} "
                f"after {max_tries} tries")
    subframes = np.array(subframes)
    targets = list(accepted_axes)
    types = [s for s in range(r) for _ in range(tau)]
    for _ in range(m - r * tau):
        s = int(rng.integers(0, r))
        c = rng.standard_normal(tau)
        c /= np.linalg.norm(c)
        targets.append((c @ subframes[s]) @ frame)
        types.append(s)
    return PlantedTwoLevelStream(targets=np.array(targets), frame=frame,
                                 subframes=subframes, task_types=tuple(types),
                                 min_separation=min_separation)


def two_level_assumption_ok(stream: PlantedTwoLevelStream) -> bool:
    for i, t in enumerate(stream.targets):
        s = stream.task_types[i]
        lifted = stream.subframes[s] @ stream.frame
        if _angle_to_span(t, lifted) > 1e-7:
            return False
    return True


def planted_anchored_conjunctions(n: int, k: int, m: int, seed,
                                  max_extra: int = 3,
                                  max_union: int | None = None,
                                  expose_singletons: bool = False) -> PlantedBooleanInstance:
    """k monomials, each owning one private anchor variable; targets are
    unions of random nonempty feature subsets.

    With ``expose_singletons`` every metafeature also appears somewhere as a
    one-feature target.  On such instances the minimum basis size over
    arbitrary monomials provably equals k (each anchor must be covered inside
    its own singleton target), so the consistency solver's output can be
    compared against the unrestricted brute-force optimum; without exposure a
    small target family can admit a smaller unanchored basis (e.g. the
    targets themselves) than any anchored one.
    """
    if k > n:
        raise ValueError("more metafeatures than variables")
    rng = np.random.default_rng(seed)
    anchors = rng.permutation(n)[:k] + 1
    pool = [v for v in range(1, n + 1) if v not in set(int(a) for a in anchors)]
    feats = []
    for j in range(k):
        extra = rng.integers(0, max_extra + 1)
        others = list(rng.permutation(pool)[:extra]) if pool else []
        feats.append(Monomial.from_vars([int(anchors[j])] + [int(v) for v in others], n))
    max_union = max_union or k
    comps: list[tuple[int, ...]] = []
    if expose_singletons:
        if m < k:
            raise ValueError("expose_singletons needs m >= k")
        comps.extend((j,) for j in range(k))
    while len(comps) < m:
        size = int(rng.integers(1, max_union + 1))
        comps.append(tuple(sorted(rng.permutation(k)[:size].tolist())))
    order = rng.permutation(len(comps))
    comps = [tuple(int(j) for j in comps[i]) for i in order]
    targets = []
    for chosen in comps:
        mask = 0
        for j in chosen:
            mask |= feats[j].mask
        targets.append(Monomial(mask, n))
    return PlantedBooleanInstance(true_metafeatures=tuple(feats),
                                  anchors=tuple(int(a) for a in anchors),
                                  targets=TargetSet(tuple(targets)),
                                  compositions=tuple(comps))


def planted_balanced_conjunctions(n: int, k: int, m: int, beta: float, seed,
                                  max_tries: int = 20000) -> PlantedBooleanInstance:
    """Anchored instance whose targets all have length at most log2(1/beta),
    so every target is satisfied with probability >= beta under the fair-coin
    product distribution (the balance the transfer driver assumes)."""
    max_len = int(math.floor(math.log2(1.0 / beta)))
    if max_len < 2:
        raise ValueError("beta too large to fit any two-variable target")
    rng = np.random.default_rng(seed)
    anchors = rng.permutation(n)[:k] + 1
    pool = [v for v in range(1, n + 1) if v not in set(int(a) for a in anchors)]
    feats = []
    for j in range(k):
        size = int(rng.integers(1, 3))
        others = [int(v) for v in rng.permutation(pool)[: size - 1]]
        feats.append(Monomial.from_vars([int(anchors[j])] + others, n))
    targets = []
    comps = []
    tries = 0
    while len(targets) < m:
        tries += 1
        if tries > max_tries:
            raise GenerationBudgetError(
                f"balanced-target rejection exceeded {max_tries} tries "
                f"(beta={beta}, max_len={max_len})")
        size = int(rng.integers(1, k + 1))
        chosen = sorted(rng.permutation(k)[:size].tolist())
        mask = 0
        for j in chosen:
            mask |= feats[j].mask
        if mask.bit_count() > max_len:
            continue
        targets.append(Monomial(mask, n))
        comps.append(tuple(int(j) for j in chosen))
    return PlantedBooleanInstance(true_metafeatures=tuple(feats),
                                  anchors=tuple(int(a) for a in anchors),
                                  targets=TargetSet(tuple(targets)),
                                  compositions=tuple(comps))


@dataclass(frozen=True)
class AnchorSetInstance:
    """Ground truth for the sparse-autoencoding setting: metafeatures with
    weight-<=c anchor patterns whose presence in a target forces membership."""

    features: tuple[Monomial, ...]
    anchor_masks: tuple[int, ...]
    targets: TargetSet
    relevant: tuple[tuple[int, ...], ...]
    k: int
    c: int

    @property
    def n(self) -> int:
        return self.features[0].n


def anchor_set_assumption_ok(features, anchor_masks, targets, k: int, c: int) -> bool:
    """Independent checker for the planted sparse-autoencoding assumption."""
    feats = list(features)
    for mj, ym in zip(feats, anchor_masks):
        if ym.bit_count() > c or ym & ~mj.mask:
            return False
    for t in targets:
        forced = [j for j, ym in enumerate(anchor_masks) if ym & ~t.mask == 0]
        if len(forced) > k:
            return False
        union = 0
        for j in forced:
            if feats[j].mask & ~t.mask:
                return False
            union |= feats[j].mask
        if union != t.mask:
            return False
    return True


def planted_anchor_set(n: int, num_features: int, k: int, c: int, m: int, seed,
                       max_tries: int = 4000) -> AnchorSetInstance:
    """Plant metafeatures and targets satisfying the anchor-set assumption.

    Half the metafeatures carry a private variable inside their anchor pattern
    (forcing holds by construction); the rest use fully shared anchor pairs
    and rely on rejection of violating targets.
    """
    rng = np.random.default_rng(seed)
    for _ in range(8):
        n_private = (num_features + 1) // 2
        private = list(rng.permutation(n)[:n_private] + 1)
        shared_pool = [v for v in range(1, n + 1) if v not in set(private)]
        feats: list[Monomial] = []
        anchor_masks: list[int] = []
        ok = True
        for j in range(num_features):
            size = int(rng.integers(2, 6))
            if j < n_private:
                vars_j = [private[j]] + [int(v) for v in rng.permutation(shared_pool)[: size - 1]]
                anchor = [private[j]]
                if c >= 2 and len(vars_j) > 1:
                    anchor.append(vars_j[1])
            else:
                vars_j = [int(v) for v in rng.permutation(shared_pool)[:size]]
                pairs = list(itertools.combinations(sorted(vars_j), min(c, 2)))
                rng.shuffle(pairs)
                anchor = None
                for cand in pairs:
                    cmask = sum(1 << (v - 1) for v in cand)
                    if all(cmask & ~f.mask for f in feats):
                        anchor = list(cand)
                        break
                if anchor is None:
                    ok = False
                    break
            feats.append(Monomial.from_vars(sorted(set(vars_j)), n))
            anchor_masks.append(sum(1 << (v - 1) for v in anchor))
        if not ok:
            continue
        targets: list[Monomial] = []
        relevant: list[tuple[int, ...]] = []
        tries = 0
        while len(targets) < m and tries < max_tries:
            tries += 1
            size = int(rng.integers(1, k + 1))
            chosen = sorted(rng.permutation(num_features)[:size].tolist())
            mask = 0
            for j in chosen:
                mask |= feats[j].mask
            forced = [j for j, ym in enumerate(anchor_masks) if ym & ~mask == 0]
            if len(forced) > k:
                continue
            if any(feats[j].mask & ~mask for j in forced):
                continue
            targets.append(Monomial(mask, n))
            relevant.append(tuple(forced))
        if len(targets) == m:
            inst = AnchorSetInstance(features=tuple(feats),
                                     anchor_masks=tuple(anchor_masks),
                                     targets=TargetSet(tuple(targets)),
                                     relevant=tuple(relevant), k=k, c=c)
            if anchor_set_assumption_ok(inst.features, inst.anchor_masks,
                                        inst.targets, k, c):
                return inst
    raise GenerationBudgetError(
        f"anchor-set generator failed: n={n} features={num_features} k={k} c={c} "
        f"(rejection budget {max_tries} per attempt)")


@dataclass(frozen=True)
class PlantedPolynomialStream:
    layer: PlantedBooleanInstance
    tasks: tuple[MultilinearPolynomial, ...]
    B: float
    t_max: int

    @property
    def n(self) -> int:
        return self.layer.n


def planted_polynomial_stream(n: int, k: int, m: int, B: float, seed,
                              t_max: int = 6, max_term_factors: int = 3,
                              feature_extra: int = 2) -> PlantedPolynomialStream:
    """Anchored monomial layer; each task's terms are products of feature
    subsets, with coefficients scaled to L1 at most B."""
    rng = np.random.default_rng(seed)
    layer = planted_anchored_conjunctions(n, k, max(1, k), rng.integers(0, 2 ** 63),
                                          max_extra=feature_extra)
    feats = layer.true_metafeatures
    tasks = []
    for _ in range(m):
        t_count = int(rng.integers(1, t_max + 1))
        masks = set()
        for _ in range(t_count):
            size = int(rng.integers(1, min(max_term_factors, k) + 1))
            chosen = rng.permutation(k)[:size]
            mask = 0
            for j in chosen:
                mask |= feats[j].mask
            masks.add(mask)
        coefs = rng.uniform(0.2, 1.0, size=len(masks)) * rng.choice([-1.0, 1.0], size=len(masks))
        scale = B * rng.uniform(0.3, 0.9) / np.sum(np.abs(coefs))
        items = [(Monomial(mk, n), float(cf * scale)) for mk, cf in zip(sorted(masks), coefs)]
        tasks.append(MultilinearPolynomial.from_terms(items, n))
    return PlantedPolynomialStream(layer=layer, tasks=tuple(tasks), B=B, t_max=t_max)


def planted_single_layer_polynomials(n: int, k: int, m: int, B: float, seed,
                                     t_max: int = 4) -> PlantedPolynomialStream:
    """Warm-up variant: every task draws its terms from one fixed pool of k monomials."""
    rng = np.random.default_rng(seed)
    layer = planted_anchored_conjunctions(n, k, max(1, k), rng.integers(0, 2 ** 63))
    pool = [f.mask for f in layer.true_metafeatures]
    tasks = []
    for _ in range(m):
        t_count = int(rng.integers(1, min(t_max, k) + 1))
        chosen = sorted(set(int(j) for j in rng.permutation(k)[:t_count]))
        coefs = rng.uniform(0.2, 1.0, size=len(chosen)) * rng.choice([-1.0, 1.0], size=len(chosen))
        scale = B * rng.uniform(0.3, 0.9) / np.sum(np.abs(coefs))
        items = [(Monomial(pool[j], n), float(cf * scale)) for j, cf in zip(chosen, coefs)]
        tasks.append(MultilinearPolynomial.from_terms(items, n))
    return PlantedPolynomialStream(layer=layer, tasks=tuple(tasks), B=B, t_max=t_max)


def random_polynomial(n: int, t: int, seed, max_term_size: int = 8,
                      coef_range: tuple[float, float] = (0.1, 5.0)) -> MultilinearPolynomial:
    """Random sparse multilinear polynomial with well-separated coefficients."""
    rng = np.random.default_rng(seed)
    distinct = sum(math.comb(n, s) for s in range(0, min(n, max_term_size) + 1))
    if t > distinct:
        raise ValueError(f"cannot place {t} distinct terms of size <= {max_term_size} over {n} variables")
    masks = set()
    while len(masks) < t:
        size = int(rng.integers(0, min(n, max_term_size) + 1))
        mask = 0
        for v in rng.permutation(n)[:size]:
            mask |= 1 << int(v)
        masks.add(mask)
    lo, hi = coef_range
    items = []
    for mask in sorted(masks):
        coef = float(rng.uniform(lo, hi)) * float(rng.choice([-1.0, 1.0]))
        items.append((Monomial(mask, n), coef))
    return MultilinearPolynomial.from_terms(items, n)
