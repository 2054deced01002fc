"""Command-line interface.

Subcommands: gen (emit a planted instance), run (scenario experiment with
reports and figures), autoencode (minimal dictionary for a monomial/image
corpus), sparse-autoencode (LP + rounding pipeline), interpolate (membership
-query recovery of a polynomial file), verify (acceptance suite), lp-solve
(standalone LP file).

Exit codes: 0 all checks pass, 1 usage error, 2 check failure, 3 budget or
assumption failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import acceptance, formats, generators, polynomials, reporting
from .autoencoder import autoencode_min, sparse_autoencode
from .booleans import TargetSet
from .errors import (CombinatorialBudgetError, GenerationBudgetError,
                     SampleBudgetError)
from .harness import ScenarioConfig, run_experiment, SCENARIOS
from .lp import read_lp, solve_lp
from .sampling import MqOracle, PolynomialEqOracle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILURE = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_overrides(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, help="key=value config file")
    for flag, typ in (("n", int), ("m", int), ("k", int), ("r", int), ("tau", int),
                      ("c", int), ("eps", float), ("delta", float), ("B", float),
                      ("t", int)):
        p.add_argument(f"--{flag}", type=typ, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)


def _build_config(args) -> ScenarioConfig:
    overrides = {key: getattr(args, key) for key in
                 ("n", "m", "k", "r", "tau", "c", "eps", "delta", "B", "t",
                  "seed", "trials") if getattr(args, key, None) is not None}
    if args.config:
        return ScenarioConfig.from_file(args.config, scenario=args.scenario, **overrides)
    return ScenarioConfig.from_mapping({"scenario": args.scenario, **overrides})


def _cmd_gen(args) -> int:
    config = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seq = np.random.SeedSequence(config.seed)
    if config.scenario in ("shared_subspace", "two_level"):
        if config.scenario == "shared_subspace":
            from .geometry import AngleBudget
            budget = AngleBudget.single_level(config.eps, config.k)
            stream = generators.planted_shared_subspace(config.n, config.k, config.m,
                                                        seq, budget.gamma,
                                                        perturb=config.perturb)
            frame = stream.frame
        else:
            stream = generators.planted_two_level(config.n, config.k, config.r,
                                                  config.tau, config.m, seq)
            frame = stream.frame
        np.savetxt(out / "targets.txt", stream.targets, fmt="%.17g")
        np.savetxt(out / "frame.txt", frame, fmt="%.17g")
    elif config.scenario == "anchored_conjunctions":
        inst = generators.planted_anchored_conjunctions(config.n, config.k, config.m, seq)
        formats.write_monomials(list(inst.targets), config.n, out / "targets.bool")
        formats.write_monomials(list(inst.true_metafeatures), config.n, out / "truth.bool")
        (out / "meta.txt").write_text(
            "anchors=" + ",".join(str(a) for a in inst.anchors) + "\n")
    elif config.scenario == "anchor_set":
        inst = generators.planted_anchor_set(config.n, config.r, config.k, config.c,
                                             config.m, seq)
        formats.write_monomials(list(inst.targets), config.n, out / "targets.bool")
        formats.write_monomials(list(inst.features), config.n, out / "features.bool")
        lines = []
        for j, ym in enumerate(inst.anchor_masks):
            vs = ",".join(str(b + 1) for b in range(config.n) if (ym >> b) & 1)
            lines.append(f"anchor.{j}={vs}")
        (out / "meta.txt").write_text("\n".join(lines) + "\n")
    else:
        stream = generators.planted_polynomial_stream(config.n, config.k, config.m,
                                                      config.B, seq, t_max=config.t)
        formats.write_monomials(list(stream.layer.true_metafeatures), config.n,
                                out / "layer.bool")
        for i, task in enumerate(stream.tasks):
            polynomials.write_polynomial(task, out / f"task_{i:03d}.poly")
    print(f"wrote planted {config.scenario} instance to {out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _build_config(args)
    report = run_experiment(config)
    files = reporting.write_all(report, args.out, json_summary=args.json,
                                figures=not args.no_figures)
    for c in report.checks:
        print(f"{c.name}: measured {c.measured:g} bound {c.bound:g} -> {c.verdict()}")
    print(f"report files: {files}")
    if any(not c.applicable for c in report.checks):
        return EXIT_BUDGET
    return EXIT_OK if report.ok else EXIT_CHECK_FAILURE


def _read_corpus(path: str):
    text = Path(path).read_text()
    head = text.lstrip().split(None, 1)[0]
    if head == "IMG":
        mons, w, h = formats.images_from_text(text)
        return mons, w * h, (w, h)
    mons, n = formats.monomials_from_text(text)
    return mons, n, None


def _cmd_autoencode(args) -> int:
    mons, n, img_shape = _read_corpus(args.input)
    result = autoencode_min(TargetSet(tuple(mons)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if img_shape:
        formats.write_images(list(result.dictionary), img_shape[0], img_shape[1],
                             out / "dictionary.img")
    formats.write_monomials(list(result.dictionary), n, out / "dictionary.bool")
    with open(out / "decomposition.txt", "w") as fh:
        for i, dec in enumerate(result.decompositions):
            fh.write(f"{i}: " + ",".join(str(j) for j in dec) + "\n")
    print(f"dictionary size {len(result.dictionary)}; exact={result.exact}")
    return EXIT_OK if result.exact else EXIT_CHECK_FAILURE


def _cmd_sparse_autoencode(args) -> int:
    mons, n, img_shape = _read_corpus(args.input)
    result = sparse_autoencode(TargetSet(tuple(mons)), args.c, args.k, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_monomials(list(result.rounded.dictionary), n, out / "dictionary.bool")
    if img_shape:
        formats.write_images(list(result.rounded.dictionary), img_shape[0], img_shape[1],
                             out / "dictionary.img")
    with open(out / "decomposition.txt", "w") as fh:
        for i, rel in enumerate(result.rounded.relevant_sets):
            fh.write(f"{i}: " + ",".join(str(j) for j in rel) + "\n")
    print(f"lp objective {result.solution.objective:.4f} in {result.solution.iterations} pivots; "
          f"dictionary {len(result.rounded.dictionary)}; retries {result.rounded.retries}")
    return EXIT_OK


def _cmd_interpolate(args) -> int:
    target = polynomials.read_polynomial(args.input)
    oracle = MqOracle(target)
    recovered = polynomials.mq_interpolate(oracle, target.n, args.t_max,
                                           eq_oracle=PolynomialEqOracle(target))
    exact = recovered.same_terms(target)
    print(f"terms={recovered.term_count} mq_queries={oracle.query_count} exact={exact}")
    if args.out:
        polynomials.write_polynomial(recovered, args.out)
    return EXIT_OK if exact else EXIT_CHECK_FAILURE


def _cmd_verify(args) -> int:
    only = set(args.only) if args.only else None
    results = acceptance.run_all(only=only)
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILURE


def _cmd_lp_solve(args) -> int:
    problem = read_lp(args.input)
    sol = solve_lp(problem, max_pivots=args.max_pivots)
    print(f"status={sol.status} iterations={sol.iterations}")
    if sol.status == "optimal":
        print(f"objective={sol.objective:.12g}")
        print("x=" + " ".join(f"{v:.12g}" for v in sol.x))
        return EXIT_OK
    return EXIT_BUDGET if sol.status == "budget_exceeded" else EXIT_CHECK_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lifelong",
                description="streaming multi-task learning experiments")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="emit a planted instance to files")
    g.add_argument("--scenario", required=True, choices=SCENARIOS)
    _add_overrides(g)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen)

    r = sub.add_parser("run", help="run a scenario experiment")
    r.add_argument("--scenario", required=True, choices=SCENARIOS)
    _add_overrides(r)
    r.add_argument("--out", required=True)
    r.add_argument("--json", action="store_true", help="also write summary.json")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(fn=_cmd_run)

    a = sub.add_parser("autoencode", help="minimal dictionary for a corpus")
    a.add_argument("--input", required=True, help="BOOL v1 or IMG v1 file")
    a.add_argument("--out", required=True)
    a.set_defaults(fn=_cmd_autoencode)

    s = sub.add_parser("sparse-autoencode", help="LP + rounding dictionary")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--c", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=_cmd_sparse_autoencode)

    i = sub.add_parser("interpolate", help="membership-query polynomial recovery")
    i.add_argument("--input", required=True, help="POLY v1 file")
    i.add_argument("--t-max", type=int, default=64)
    i.add_argument("--out", default=None)
    i.set_defaults(fn=_cmd_interpolate)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--only", type=int, nargs="*", help="criterion ids to run")
    v.set_defaults(fn=_cmd_verify)

    l = sub.add_parser("lp-solve", help="solve an LP v1 file")
    l.add_argument("--input", required=True)
    l.add_argument("--max-pivots", type=int, default=1_000_000)
    l.set_defaults(fn=_cmd_lp_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (SampleBudgetError, CombinatorialBudgetError, GenerationBudgetError) as exc:
        print(f"budget/assumption failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
