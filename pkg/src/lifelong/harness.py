"""Experiment harness: scenario configuration, seeded multi-trial runs,
and named bound checks for every guarantee the drivers are supposed to meet.

Every report field is a pure function of (config, seed); trials are seeded
from a root SeedSequence so re-running a config reproduces the report body
byte for byte (wall-clock excluded).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import booleans, generators, polynomials
from .autoencoder import build_lp, check_feasible, generate_candidates, ground_truth_vector, round_solution
from .booleans import TargetSet
from .errors import GenerationBudgetError
from .geometry import AngleBudget
from .linear_lifelong import run_single_level, run_two_level
from .lp import solve_lp, STATUS_OPTIMAL
from .sampling import Distribution, HalfspaceOracle, estimate_error, halfspace_predictor, conjunction_predictor

SCENARIOS = ("shared_subspace", "two_level", "anchored_conjunctions",
             "anchor_set", "polynomials")

_DEFAULTS = {
    "shared_subspace": dict(n=50, k=5, m=200, eps=0.1, delta=0.02, trials=20),
    "two_level": dict(n=60, k=6, m=200, r=4, tau=2, eps=0.1, delta=0.02, trials=10),
    "anchored_conjunctions": dict(n=10, k=3, m=100, trials=50),
    "anchor_set": dict(n=20, k=3, m=30, r=5, c=2, trials=100),
    "polynomials": dict(n=12, k=4, m=30, B=10.0, t=6, eps=1.0, trials=5),
}


@dataclass
class ScenarioConfig:
    """Flat experiment configuration; unset fields take scenario defaults.

    Field reuse across scenarios: for ``anchor_set``, ``r`` is the number of
    planted metafeatures and ``m`` the number of targets; for ``polynomials``,
    ``eps`` is the mean-squared-error acceptance threshold and ``t`` the
    maximum term count per task.
    """

    scenario: str
    n: int = 0
    m: int = 0
    k: int = 0
    r: int = 0
    tau: int = 0
    c: int = 0
    B: float = 0.0
    t: int = 0
    eps: float = 0.0
    delta: float = 0.05
    beta: float = 0.1
    seed: int = 0
    trials: int = 1
    perturb: bool = False
    holdout: int = 10_000

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        for key, val in _DEFAULTS[self.scenario].items():
            if getattr(self, key) in (0, 0.0):
                setattr(self, key, val)
        self.validate()

    def validate(self):
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ValueError("n, m and k must be positive")
        if self.scenario in ("shared_subspace", "two_level") and not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if self.scenario == "two_level" and (self.r < 1 or self.tau < 1):
            raise ValueError("two_level needs r and tau")
        if self.scenario == "anchor_set" and not 1 <= self.c <= 3:
            raise ValueError("anchor_set needs c in 1..3")

    @classmethod
    def from_file(cls, path, **overrides) -> "ScenarioConfig":
        vals = parse_config_file(path)
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(vals)

    @classmethod
    def from_mapping(cls, vals) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(vals) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**vals)


def parse_config_file(path) -> dict:
    """Flat key=value config; # comments and blank lines ignored."""
    out: dict = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = _coerce(key, val)
    return out


def _coerce(key: str, val: str):
    if key in ("scenario",):
        return val
    if key in ("perturb",):
        return val.lower() in ("1", "true", "yes")
    if key in ("eps", "delta", "beta", "B"):
        return float(val)
    return int(val)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    measured: float
    bound: float
    passed: bool
    applicable: bool = True

    def verdict(self) -> str:
        if not self.applicable:
            return "not-applicable (assumption violated)"
        return "pass" if self.passed else "FAIL"


@dataclass
class RunReport:
    config: dict
    rows: list[tuple]           # (trial, task, path, samples, error, dict_size, potential)
    aggregates: dict            # per-trial and overall counters
    checks: list[BoundCheck]
    seeds: list[int]
    wall_clock: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)

    def body_lines(self) -> list[str]:
        """Deterministic report body (everything except wall-clock)."""
        lines = [f"config.{k}={self.config[k]}" for k in sorted(self.config)]
        lines += [f"seed.{i}={s}" for i, s in enumerate(self.seeds)]
        for key in sorted(self.aggregates):
            lines.append(f"{key}={self.aggregates[key]}")
        for c in self.checks:
            lines.append(f"check.{c.name}=measured {c.measured:.6g} bound {c.bound:.6g} "
                         f"verdict {c.verdict()}")
        return lines


ROW_HEADER = ("trial", "task_index", "path", "queries_or_samples",
              "error_estimate", "dictionary_size", "potential_phi")


def _trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def run_experiment(config: ScenarioConfig) -> RunReport:
    start = time.perf_counter()
    runner = {
        "shared_subspace": _run_shared_subspace,
        "two_level": _run_two_level,
        "anchored_conjunctions": _run_anchored_conjunctions,
        "anchor_set": _run_anchor_set,
        "polynomials": _run_polynomials,
    }[config.scenario]
    rows, aggregates, checks = runner(config)
    # trial t draws from SeedSequence(seed).spawn(trials)[t]; echoing the root
    # seed pins the whole run
    report = RunReport(config=asdict(config), rows=rows, aggregates=aggregates,
                       checks=checks, seeds=[config.seed])
    report.wall_clock = time.perf_counter() - start
    return report


def _fmt_float(x: float) -> float:
    return float(f"{x:.6g}")


def _run_shared_subspace(config: ScenarioConfig):
    budget = AngleBudget.single_level(config.eps, config.k)
    rows = []
    agg: dict = {}
    k_max = 0
    scratch_max = 0
    reused_total = 0
    reused_bad = 0
    applicable = True
    for trial, seq in enumerate(_trial_seeds(config.seed, config.trials)):
        gseed, oseed, hseed = seq.spawn(3)
        stream = generators.planted_shared_subspace(config.n, config.k, config.m,
                                                    gseed, budget.gamma,
                                                    perturb=config.perturb)
        applicable &= generators.shared_subspace_assumption_ok(stream)
        dist = Distribution.gaussian(config.n)
        oracles = [HalfspaceOracle(dist, stream.targets[i], s)
                   for i, s in enumerate(oseed.spawn(config.m))]
        state, outcomes = run_single_level(oracles, budget, delta=config.delta)
        k_max = max(k_max, state.k)
        scratch_max = max(scratch_max, len(state.scratch_indices))
        A = state.predictor_matrix()
        hseeds = hseed.spawn(config.m)
        for i, out in enumerate(outcomes):
            err = out.final_error_estimate
            if out.path != "scratch":
                reused_total += 1
                err, _ = estimate_error(halfspace_predictor(A[i]),
                                        halfspace_predictor(stream.targets[i]),
                                        dist, config.holdout, hseeds[i])
                reused_bad += int(err > config.eps)
            rows.append((trial, i, out.path, out.samples, _fmt_float(err), state.k, ""))
        agg[f"trial.{trial}.k_tilde"] = state.k
        agg[f"trial.{trial}.scratch"] = len(state.scratch_indices)
        agg[f"trial.{trial}.total_samples"] = state.total_samples
    agg["k_tilde_max"] = k_max
    agg["scratch_max"] = scratch_max
    agg["reused_tasks"] = reused_total
    agg["reused_error_violations"] = reused_bad
    good_frac = 1.0 - (reused_bad / reused_total if reused_total else 0.0)
    checks = [
        BoundCheck("k_tilde_le_k", k_max, config.k, k_max <= config.k, applicable),
        BoundCheck("scratch_le_k", scratch_max, config.k,
                   scratch_max <= config.k, applicable and not config.perturb),
        BoundCheck("reused_error_le_eps_rate", good_frac, 0.95,
                   good_frac >= 0.95, applicable),
    ]
    return rows, agg, checks


def _run_two_level(config: ScenarioConfig):
    budget = AngleBudget.two_level(config.eps, config.k, config.tau)
    rows = []
    agg: dict = {}
    k_max = 0
    r_max = 0
    applicable = True
    for trial, seq in enumerate(_trial_seeds(config.seed, config.trials)):
        gseed, oseed = seq.spawn(2)
        stream = generators.planted_two_level(config.n, config.k, config.r,
                                              config.tau, config.m, gseed)
        applicable &= generators.two_level_assumption_ok(stream)
        dist = Distribution.gaussian(config.n)
        oracles = [HalfspaceOracle(dist, stream.targets[i], s)
                   for i, s in enumerate(oseed.spawn(config.m))]
        state, outcomes = run_two_level(oracles, budget, delta=config.delta)
        k_max = max(k_max, state.k)
        r_max = max(r_max, state.r)
        for i, out in enumerate(outcomes):
            rows.append((trial, i, out.path, out.samples,
                         _fmt_float(out.final_error_estimate), state.k, ""))
        agg[f"trial.{trial}.k_tilde"] = state.k
        agg[f"trial.{trial}.r_tilde"] = state.r
        agg[f"trial.{trial}.scratch"] = len(state.scratch_indices)
        agg[f"trial.{trial}.total_samples"] = state.total_samples
    agg["k_tilde_max"] = k_max
    agg["r_tilde_max"] = r_max
    checks = [
        BoundCheck("k_tilde_le_k", k_max, config.k, k_max <= config.k, applicable),
        BoundCheck("r_tilde_le_tau_r", r_max, config.tau * config.r,
                   r_max <= config.tau * config.r, applicable),
    ]
    return rows, agg, checks


def _run_anchored_conjunctions(config: ScenarioConfig):
    rows = []
    agg: dict = {}
    scratch_max = 0
    monotone_ok = True
    applicable = True
    bound = config.n ** 2 + config.k
    for trial, seq in enumerate(_trial_seeds(config.seed, config.trials)):
        inst = generators.planted_anchored_conjunctions(config.n, config.k, config.m, seq)
        applicable &= inst.anchor_property_holds()
        transcript = booleans.online_session(list(inst.targets), n=config.n,
                                             k_hint=config.k)
        scratch_max = max(scratch_max, transcript.scratch_count)
        prev_potential = None
        for s in transcript.steps:
            if not s.covered:
                if prev_potential is not None and s.potential <= prev_potential:
                    monotone_ok = False
                prev_potential = s.potential
            rows.append((trial, s.index, "reused" if s.covered else "scratch",
                         0, "", s.dictionary_size, s.potential))
        agg[f"trial.{trial}.scratch"] = transcript.scratch_count
        agg[f"trial.{trial}.dictionary"] = len(transcript.dictionary)
    agg["scratch_max"] = scratch_max
    checks = [
        BoundCheck("scratch_le_n2_plus_k", scratch_max, bound,
                   scratch_max <= bound, applicable),
        BoundCheck("potential_strictly_increases", float(monotone_ok), 1.0,
                   monotone_ok, applicable),
    ]
    return rows, agg, checks


def _run_anchor_set(config: ScenarioConfig):
    rows = []
    agg: dict = {}
    applicable = True
    feas_ok = True
    opt_ok = True
    retries_max = 0
    size_max = 0
    sparsity_max = 0
    num_m = config.r
    boost = math.log(config.n ** 2 * config.m)
    size_bound = 4.0 * num_m * boost
    sparsity_bound = 2.0 * max(config.k, 3) * boost
    for trial, seq in enumerate(_trial_seeds(config.seed, config.trials)):
        gseed, rseed = seq.spawn(2)
        inst = generators.planted_anchor_set(config.n, num_m, config.k, config.c,
                                             config.m, gseed)
        applicable &= generators.anchor_set_assumption_ok(
            inst.features, inst.anchor_masks, inst.targets, config.k, config.c)
        cands = generate_candidates(inst.targets, config.c)
        lp = build_lp(cands, inst.targets, config.k)
        z = ground_truth_vector(lp, inst.anchor_masks)
        feas_ok &= z is not None and check_feasible(lp, z)
        sol = solve_lp(lp.problem)
        opt_ok &= sol.status == STATUS_OPTIMAL and sol.objective <= num_m + 1e-7
        rounded = round_solution(lp, sol, rseed, max_retries=16)
        retries_max = max(retries_max, rounded.retries)
        size_max = max(size_max, len(rounded.dictionary))
        sparsity_max = max(sparsity_max, max(rounded.per_target_counts))
        rows.append((trial, 0, "pipeline", sol.iterations,
                     _fmt_float(sol.objective), len(rounded.dictionary),
                     rounded.retries))
        agg[f"trial.{trial}.lp_objective"] = _fmt_float(sol.objective)
        agg[f"trial.{trial}.dictionary"] = len(rounded.dictionary)
        agg[f"trial.{trial}.retries"] = rounded.retries
    agg["dictionary_max"] = size_max
    agg["sparsity_max"] = sparsity_max
    agg["retries_max"] = retries_max
    checks = [
        BoundCheck("ground_truth_feasible", float(feas_ok), 1.0, feas_ok, applicable),
        BoundCheck("lp_opt_le_num_metafeatures", float(opt_ok), 1.0, opt_ok, applicable),
        BoundCheck("rounding_retries_le_16", retries_max, 16,
                   retries_max <= 16, applicable),
        BoundCheck("dictionary_le_4_m_log", size_max, size_bound,
                   size_max <= size_bound, applicable),
        BoundCheck("per_target_sparsity", sparsity_max, sparsity_bound,
                   sparsity_max <= sparsity_bound, applicable),
    ]
    return rows, agg, checks


def _run_polynomials(config: ScenarioConfig):
    rows = []
    agg: dict = {}
    applicable = True
    m_tilde_max = 0
    scratch_max = 0
    reused_mse_max = 0.0
    bound = config.n ** 2 + config.k
    eps_mse = config.eps if config.eps > 0 else 0.01 * config.B ** 2
    for trial, seq in enumerate(_trial_seeds(config.seed, config.trials)):
        gseed, oseed = seq.spawn(2)
        stream = generators.planted_polynomial_stream(config.n, config.k, config.m,
                                                      config.B, gseed,
                                                      t_max=config.t)
        applicable &= stream.layer.anchor_property_holds()
        dist = Distribution.product_bernoulli(np.full(config.n, 0.5))
        tasks = polynomials.make_poly_tasks(stream.tasks, dist, oseed)
        state, outcomes = polynomials.run_poly_lifelong(tasks, config.k, config.B,
                                                        eps_mse, t_max=64)
        m_tilde_max = max(m_tilde_max, max(o.dictionary_size for o in outcomes))
        scratch_max = max(scratch_max, state.scratch_count)
        for o in outcomes:
            if o.path == "reused":
                reused_mse_max = max(reused_mse_max, o.final_mse)
            rows.append((trial, o.task_index, o.path,
                         o.value_samples + o.mq_queries,
                         _fmt_float(o.final_mse), o.dictionary_size, ""))
        agg[f"trial.{trial}.m_tilde"] = len(state.metafeatures)
        agg[f"trial.{trial}.scratch"] = state.scratch_count
    agg["m_tilde_max"] = m_tilde_max
    agg["scratch_max"] = scratch_max
    agg["reused_mse_max"] = _fmt_float(reused_mse_max)
    checks = [
        BoundCheck("m_tilde_le_k", m_tilde_max, config.k,
                   m_tilde_max <= config.k, applicable),
        BoundCheck("scratch_le_n2_plus_k", scratch_max, bound,
                   scratch_max <= bound, applicable),
        BoundCheck("reused_mse_le_eps", reused_mse_max, eps_mse,
                   reused_mse_max <= eps_mse, applicable),
    ]
    return rows, agg, checks


def verify_bounds(report: RunReport) -> list[BoundCheck]:
    """The named checks for a finished run (already computed by the runner)."""
    return list(report.checks)
