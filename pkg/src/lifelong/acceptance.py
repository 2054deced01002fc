"""The acceptance suite: one callable per criterion, each returning a result
with a pass/fail verdict and its measured quantities.

Criteria that involve Monte-Carlo estimates run with pinned seeds so the
suite is deterministic; tolerances are the instantiated constants, never
recalibrated at run time.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import booleans, conjunctions, generators, polynomials
from .autoencoder import build_lp, check_feasible, generate_candidates, ground_truth_vector, round_solution
from .booleans import Dictionary, Monomial, TargetSet
from .geometry import (OrthonormalBasis, UnitVector, angle_between_vectors,
                       angle_subspace_to_subspace, angle_vector_to_subspace,
                       check_span_perturbation, extend_basis)
from .harness import ScenarioConfig, run_experiment
from .linear_lifelong import LinearRepState
from .lp import solve_lp, STATUS_OPTIMAL
from .sampling import (ConjunctionOracle, Distribution, HalfspaceOracle,
                       estimate_error, halfspace_predictor, conjunction_predictor, sample)


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    runtime: float
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.cid:2d} {self.name} ({self.runtime:.1f}s)"


def _random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def criterion_01_disagreement_matches_angle() -> CriterionResult:
    """Monte-Carlo disagreement of halfspace pairs equals angle/pi within
    3 binomial standard errors (Gaussian marginals, 1e5 samples)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    violations = 0
    worst = 0.0
    checked = 0
    for n in (2, 10):
        dist = Distribution.gaussian(n)
        for i in range(100):
            u = _random_unit(rng, n)
            v = _random_unit(rng, n)
            theta = angle_between_vectors(UnitVector.normalized(u), UnitVector.normalized(v))
            expected = theta / math.pi
            est, _ = estimate_error(halfspace_predictor(u), halfspace_predictor(v),
                                    dist, 100_000, rng.integers(0, 2 ** 63))
            se = math.sqrt(max(expected * (1 - expected), 1e-6) / 100_000)
            dev = abs(est - expected) / se
            worst = max(worst, dev)
            violations += int(dev > 3.0)
            checked += 1
    dt = time.perf_counter() - t0
    passed = violations == 0 and dt < 30.0
    return CriterionResult(1, "disagreement equals angle/pi", passed, dt,
                           [f"pairs={checked} violations={violations} worst_dev={worst:.2f}sigma",
                            f"runtime_limit=30s"])


def criterion_02_one_vector_bound() -> CriterionResult:
    """Extending a span by an approximate vector moves it by at most
    (pi/2) * angle(b~, b) / angle(b~, U) on 1000 random instances."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(2, min(5, n - 1) + 1))
        u_rows = [_random_unit(rng, n) for _ in range(k - 1)]
        U = OrthonormalBasis.from_vectors([UnitVector.normalized(r) for r in u_rows])
        b = _random_unit(rng, n)
        bt = _random_unit(rng, n)
        if angle_vector_to_subspace(UnitVector.normalized(bt), U) < 1e-6:
            continue
        V = OrthonormalBasis.from_vectors(list(U.vectors) + [UnitVector.normalized(b)])
        Vt = OrthonormalBasis.from_vectors(list(U.vectors) + [UnitVector.normalized(bt)])
        lhs = angle_subspace_to_subspace(V, Vt)
        ratio = (math.pi / 2.0) * angle_between_vectors(
            UnitVector.normalized(bt), UnitVector.normalized(b)) / \
            angle_vector_to_subspace(UnitVector.normalized(bt), U)
        violations += int(lhs > ratio + 1e-9)
    dt = time.perf_counter() - t0
    return CriterionResult(2, "one-vector span bound", violations == 0, dt,
                           [f"instances=1000 violations={violations}"])


def _orthogonal_plane_counterexample() -> tuple[float, float]:
    """Per-vector angles <= 0.11 yet the two spans are orthogonal."""
    w1 = np.array([math.cos(0.11), math.sin(0.11), 0.0])
    w2 = np.array([1.0, 0.0, 0.0])
    w1t = np.array([1.0, 0.0, 0.0])
    w2t = np.array([math.cos(0.11), 0.0, math.sin(0.11)])
    per_vector = max(
        angle_between_vectors(UnitVector.normalized(w1), UnitVector.normalized(w1t)),
        angle_between_vectors(UnitVector.normalized(w2), UnitVector.normalized(w2t)))
    span = angle_subspace_to_subspace(
        OrthonormalBasis.from_vectors([UnitVector.normalized(w1), UnitVector.normalized(w2)]),
        OrthonormalBasis.from_vectors([UnitVector.normalized(w1t), UnitVector.normalized(w2t)]))
    return per_vector, span


def criterion_03_span_perturbation_bound() -> CriterionResult:
    """Drift bound 2k*eps_acc/gamma on 1000 precondition-satisfying random
    instances, plus the orthogonal-plane cautionary construction."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1234)
    violations = 0
    made = 0
    while made < 1000:
        n = int(rng.integers(4, 13))
        k = int(rng.integers(2, min(6, n) + 1))
        gamma = float(rng.uniform(0.05, 0.5))
        eps_acc = float(rng.uniform(0.1, 1.0)) * gamma ** 2 / (10.0 * k)
        learned = []
        basis = None
        ok = True
        for i in range(k):
            for _ in range(50):
                v = _random_unit(rng, n)
                if basis is None or angle_vector_to_subspace(UnitVector.normalized(v), basis) >= gamma * 1.02:
                    break
            else:
                ok = False
                break
            learned.append(v)
            uv = UnitVector.normalized(v)
            basis = OrthonormalBasis.from_vectors([uv]) if basis is None else extend_basis(basis, uv)[0]
        if not ok:
            continue
        true_vecs = []
        for v in learned:
            z = _random_unit(rng, n)
            z -= (z @ v) * v
            z /= np.linalg.norm(z)
            ang = rng.uniform(0.0, eps_acc)
            true_vecs.append(math.cos(ang) * v + math.sin(ang) * z)
        rep = check_span_perturbation(true_vecs, learned, gamma, eps_acc)
        if not rep.preconditions_ok:
            continue
        made += 1
        violations += int(not rep.holds)
    per_vec, span = _orthogonal_plane_counterexample()
    ortho_ok = per_vec <= 0.11 + 1e-12 and abs(span - math.pi / 2.0) <= 1e-6
    dt = time.perf_counter() - t0
    return CriterionResult(3, "span perturbation bound", violations == 0 and ortho_ok, dt,
                           [f"instances=1000 violations={violations}",
                            f"counterexample per_vector={per_vec:.4f} span={span:.8f} ok={ortho_ok}"])


def criterion_04_shared_subspace() -> CriterionResult:
    """Single-level streaming at n=50, k=5, m=200, eps=0.1 over 20 seeds."""
    t0 = time.perf_counter()
    config = ScenarioConfig(scenario="shared_subspace", n=50, k=5, m=200,
                            eps=0.1, delta=0.02, seed=411, trials=20)
    report = run_experiment(config)
    dt = time.perf_counter() - t0
    passed = report.ok and dt < 300.0
    details = [f"check.{c.name}: measured {c.measured:g} bound {c.bound:g} {c.verdict()}"
               for c in report.checks]
    details.append(f"runtime_limit=300s actual={dt:.0f}s")
    return CriterionResult(4, "shared-subspace stream bounds", passed, dt, details)


def criterion_05_two_level() -> CriterionResult:
    """Two-level streaming at n=60, k=6, r=4, tau=2, m=200 over 10 seeds."""
    t0 = time.perf_counter()
    config = ScenarioConfig(scenario="two_level", n=60, k=6, r=4, tau=2, m=200,
                            eps=0.1, delta=0.02, seed=502, trials=10)
    report = run_experiment(config)
    dt = time.perf_counter() - t0
    details = [f"check.{c.name}: measured {c.measured:g} bound {c.bound:g} {c.verdict()}"
               for c in report.checks]
    return CriterionResult(5, "two-level stream bounds", report.ok, dt, details)


def criterion_06_consistency_optimality() -> CriterionResult:
    """Consistency solver vs the brute-force set-basis oracle on 200 random
    anchored instances: equal size, exact reconstruction, refinement
    conditions against ground truth."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(66)
    size_mismatch = recon_bad = cond_bad = 0
    for i in range(200):
        n = int(rng.integers(6, 13))
        k = int(rng.integers(2, 5))
        m = int(rng.integers(k + 2, 12))
        # singleton exposure makes the unrestricted optimum equal the anchored
        # one, so the brute-force comparison is an equality test
        inst = generators.planted_anchored_conjunctions(n, k, m, rng.integers(0, 2 ** 63),
                                                        expose_singletons=True)
        sol = booleans.solve_consistency(inst.targets)
        if not booleans.reconstruction_ok(inst.targets, sol):
            recon_bad += 1
            continue
        brute = booleans.brute_force_set_basis(inst.targets, min(5, max(1, len(sol))))
        if brute is None or len(brute) != len(sol):
            size_mismatch += 1
        rep = booleans.refinement_report(inst, sol)
        if not (rep["contains_true_ok"] and rep["not_too_specific_ok"]
                and rep["anchor_closure_ok"] and rep["size_within_k"]):
            cond_bad += 1
    dt = time.perf_counter() - t0
    passed = size_mismatch == 0 and recon_bad == 0 and cond_bad == 0 and dt < 60.0
    return CriterionResult(6, "consistency solver optimality", passed, dt,
                           [f"instances=200 size_mismatch={size_mismatch} "
                            f"reconstruction_failures={recon_bad} condition_failures={cond_bad}",
                            "runtime_limit=60s"])


def criterion_07_online_sessions() -> CriterionResult:
    """Online conjunction sessions (n=10, k=3, m=100, 50 seeds): scratch count
    within n^2+k and strictly increasing potential at scratch events."""
    t0 = time.perf_counter()
    config = ScenarioConfig(scenario="anchored_conjunctions", n=10, k=3, m=100,
                            seed=707, trials=50)
    report = run_experiment(config)
    dt = time.perf_counter() - t0
    details = [f"check.{c.name}: measured {c.measured:g} bound {c.bound:g} {c.verdict()}"
               for c in report.checks]
    details.append(f"scratch_max={report.aggregates['scratch_max']}")
    return CriterionResult(7, "online session potential bounds", report.ok, dt, details)


def criterion_08_product_transfer() -> CriterionResult:
    """Conjunction transfer over the fair-coin product distribution
    (n=16, k=4, m=50, eps=0.1, delta=0.05, 10 seeds): every final hypothesis
    within eps on fresh samples."""
    t0 = time.perf_counter()
    n, k, m, eps, delta = 16, 4, 50, 0.1, 0.05
    dist = Distribution.product_bernoulli(np.full(n, 0.5))
    worst = 0.0
    bad = 0
    for trial, seq in enumerate(np.random.SeedSequence(808).spawn(10)):
        gseed, rseed, hseed = seq.spawn(3)
        inst = generators.planted_balanced_conjunctions(n, k, m, 0.1, gseed)
        result = conjunctions.run_product_transfer(list(inst.targets), dist, eps,
                                                   delta, k, rseed)
        hseeds = hseed.spawn(m)
        for i, (hyp, target) in enumerate(zip(result.hypotheses, inst.targets)):
            err, _ = estimate_error(conjunction_predictor(hyp),
                                    conjunction_predictor(target),
                                    dist, 10_000, hseeds[i])
            worst = max(worst, err)
            bad += int(err > eps)
    dt = time.perf_counter() - t0
    return CriterionResult(8, "product-distribution transfer", bad == 0, dt,
                           [f"hypotheses=500 over_eps={bad} worst_error={worst:.4f} eps={eps}"])


def criterion_09_sparse_autoencoder() -> CriterionResult:
    """LP + rounding pipeline on planted instances (n=20, |TS|=30, |M|=5,
    k=3, c=2, 100 seeds): ground-truth feasibility, optimum <= |M|, rounding
    within 16 retries, dictionary and per-target sparsity within bounds."""
    t0 = time.perf_counter()
    n, num_m, k, c, m = 20, 5, 3, 2, 30
    boost = math.log(n ** 2 * m)
    size_bound = 4.0 * num_m * boost
    sparsity_bound = 2.0 * max(k, 3) * boost
    fails = []
    for trial, seq in enumerate(np.random.SeedSequence(909).spawn(100)):
        gseed, rseed = seq.spawn(2)
        inst = generators.planted_anchor_set(n, num_m, k, c, m, gseed)
        cands = generate_candidates(inst.targets, c)
        lp = build_lp(cands, inst.targets, k)
        z = ground_truth_vector(lp, inst.anchor_masks)
        if z is None or not check_feasible(lp, z) or float(np.sum(z)) > num_m + 1e-9:
            fails.append((trial, "ground truth infeasible"))
            continue
        sol = solve_lp(lp.problem)
        if sol.status != STATUS_OPTIMAL or sol.objective > num_m + 1e-7:
            fails.append((trial, f"lp {sol.status} obj={sol.objective}"))
            continue
        rounded = round_solution(lp, sol, rseed, max_retries=16)
        if len(rounded.dictionary) > size_bound:
            fails.append((trial, f"dictionary {len(rounded.dictionary)} > {size_bound:.1f}"))
        if max(rounded.per_target_counts) > sparsity_bound:
            fails.append((trial, f"sparsity {max(rounded.per_target_counts)} > {sparsity_bound:.1f}"))
    dt = time.perf_counter() - t0
    return CriterionResult(9, "sparse autoencoder pipeline", not fails, dt,
                           [f"seeds=100 failures={len(fails)}"] +
                           [f"  trial {t}: {msg}" for t, msg in fails[:5]])


def criterion_10_eq_sessions() -> CriterionResult:
    """Equivalence-query session totals within the instantiated envelopes."""
    t0 = time.perf_counter()
    n, k, m = 10, 3, 40
    envelope = m * (k + 1) + (n ** 2 + k) * (n + 1)
    worst_total = 0
    anchor_bad = 0
    for seq in np.random.SeedSequence(1010).spawn(50):
        inst = generators.planted_anchored_conjunctions(n, k, m, seq)
        tr = conjunctions.lifelong_eq_session(list(inst.targets), n, k)
        worst_total = max(worst_total, tr.total_queries)
        anchor_bad += int(tr.total_queries > envelope)
    n6, num_m6, k6, c6, m6 = 12, 4, 3, 2, 60
    scratch_bound = n6 * num_m6
    num_candidates = sum(math.comb(n6, w) for w in range(1, c6 + 1))
    mistake_env = conjunctions.winnow_mistake_budget(k6, num_candidates)
    scratch_worst = 0
    mistakes_worst = 0
    shrink_bad = 0
    for seq in np.random.SeedSequence(1011).spawn(50):
        inst = generators.planted_anchor_set(n6, num_m6, k6, c6, m6, seq)
        res = conjunctions.anchor_set_eq_session(list(inst.targets), n6, c6, k6)
        scratch_worst = max(scratch_worst, res.transcript.scratch_count)
        mistakes_worst = max(mistakes_worst, res.max_mistakes)
        shrink_bad += int(not res.scratch_shrank_every_time)
    dt = time.perf_counter() - t0
    passed = (anchor_bad == 0 and scratch_worst <= scratch_bound
              and mistakes_worst <= mistake_env and shrink_bad == 0)
    return CriterionResult(10, "equivalence-query session envelopes", passed, dt,
                           [f"dictionary sessions: worst_total={worst_total} envelope={envelope}",
                            f"anchor-set sessions: scratch_worst={scratch_worst} bound={scratch_bound} "
                            f"mistakes_worst={mistakes_worst} envelope={mistake_env:.1f} "
                            f"no_shrink_events={shrink_bad}"])


def criterion_11_polynomials() -> CriterionResult:
    """Exact interpolation of 500 random polynomials and the re-compactifying
    driver bounds (n=12, k=4, m=30)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1111)
    interp_bad = 0
    agree_bad = 0
    for i in range(500):
        n = int(rng.integers(5, 31))  # n >= 5 fits 20 distinct terms
        t = int(rng.integers(1, 21))
        target = generators.random_polynomial(n, t, rng.integers(0, 2 ** 63))
        from .sampling import MqOracle, PolynomialEqOracle
        mq = MqOracle(target)
        rec = polynomials.mq_interpolate(mq, n, 25, eq_oracle=PolynomialEqOracle(target))
        if not rec.same_terms(target):
            interp_bad += 1
            continue
        pts = (np.random.default_rng(i).random((1000, n)) < 0.5).astype(np.float64)
        if np.max(np.abs(rec.evaluate_batch(pts) - target.evaluate_batch(pts))) > 1e-9:
            agree_bad += 1
    config = ScenarioConfig(scenario="polynomials", n=12, k=4, m=30, B=10.0,
                            t=6, eps=1.0, seed=1112, trials=5)
    report = run_experiment(config)
    dt = time.perf_counter() - t0
    passed = interp_bad == 0 and agree_bad == 0 and report.ok
    details = [f"interpolations=500 mismatches={interp_bad} agreement_failures={agree_bad}"]
    details += [f"check.{c.name}: measured {c.measured:g} bound {c.bound:g} {c.verdict()}"
                for c in report.checks]
    return CriterionResult(11, "polynomial interpolation and driver", passed, dt, details)


def criterion_12_determinism_roundtrip(tmpdir=None) -> CriterionResult:
    """Same-seed runs give byte-identical report bodies; serialized states
    reproduce identical predictions on 1000-point probes."""
    import tempfile
    from pathlib import Path
    t0 = time.perf_counter()
    problems = []
    for cfg in (ScenarioConfig(scenario="shared_subspace", n=20, k=3, m=30,
                               eps=0.1, seed=121, trials=2),
                ScenarioConfig(scenario="anchored_conjunctions", n=8, k=3, m=40,
                               seed=122, trials=3),
                ScenarioConfig(scenario="anchor_set", n=14, k=3, r=4, c=2, m=15,
                               seed=123, trials=3),
                ScenarioConfig(scenario="polynomials", n=10, k=3, m=8, B=8.0,
                               t=4, eps=1.0, seed=124, trials=2)):
        r1 = run_experiment(cfg)
        r2 = run_experiment(cfg)
        if r1.body_lines() != r2.body_lines() or r1.rows != r2.rows:
            problems.append(f"{cfg.scenario}: report body differs between same-seed runs")
    with tempfile.TemporaryDirectory(dir=tmpdir) as td:
        budget_cfg = ScenarioConfig(scenario="shared_subspace", n=20, k=3, m=20,
                                    eps=0.1, seed=125, trials=1)
        from .geometry import AngleBudget
        stream = generators.planted_shared_subspace(20, 3, 20, 5, 0.025)
        dist = Distribution.gaussian(20)
        oracles = [HalfspaceOracle(dist, stream.targets[i], (126, i)) for i in range(20)]
        from .linear_lifelong import run_single_level
        state, _ = run_single_level(oracles, AngleBudget.single_level(0.1, 3))
        path = Path(td) / "state.linrep"
        state.save(path)
        loaded = LinearRepState.load(path)
        probe = sample(dist, 127, 1000)
        for i in range(20):
            if not np.array_equal(state.predict(i, probe), loaded.predict(i, probe)):
                problems.append(f"linear rep: predictions differ after reload (task {i})")
                break
        pstream = generators.planted_polynomial_stream(10, 3, 8, 8.0, 128, t_max=4)
        pdist = Distribution.product_bernoulli(np.full(10, 0.5))
        tasks = polynomials.make_poly_tasks(pstream.tasks, pdist, 129)
        pstate, _ = polynomials.run_poly_lifelong(tasks, 3, 8.0, 1.0)
        ppath = Path(td) / "state.polyrep"
        pstate.save(ppath)
        ploaded = polynomials.PolyRepState.load(ppath)
        pprobe = sample(pdist, 130, 1000)
        for i in range(len(pstate.hypotheses)):
            if not np.array_equal(pstate.predict(i, pprobe), ploaded.predict(i, pprobe)):
                problems.append(f"poly rep: predictions differ after reload (task {i})")
                break
    dt = time.perf_counter() - t0
    return CriterionResult(12, "determinism and serialization round-trips",
                           not problems, dt, problems or ["all round-trips identical"])


ACCEPTANCE_CRITERIA = [
    (1, criterion_01_disagreement_matches_angle),
    (2, criterion_02_one_vector_bound),
    (3, criterion_03_span_perturbation_bound),
    (4, criterion_04_shared_subspace),
    (5, criterion_05_two_level),
    (6, criterion_06_consistency_optimality),
    (7, criterion_07_online_sessions),
    (8, criterion_08_product_transfer),
    (9, criterion_09_sparse_autoencoder),
    (10, criterion_10_eq_sessions),
    (11, criterion_11_polynomials),
    (12, criterion_12_determinism_roundtrip),
]


def run_all(only: set[int] | None = None, log=print) -> list[CriterionResult]:
    results = []
    for cid, fn in ACCEPTANCE_CRITERIA:
        if only and cid not in only:
            continue
        res = fn()
        results.append(res)
        if log:
            log(res.line())
            for d in res.details:
                log(f"    {d}")
    return results
