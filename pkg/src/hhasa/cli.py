"""Command-line entry point: ``hhasa {solve,bench,validate,rank,plot}``.

Exit codes: 0 success, 1 usage or parse error, 2 solver failure,
3 infeasible solution or fitness mismatch.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Optional

from . import harness
from .bandit import SELECTORS
from .instance import InstanceFormatError, load_instance
from .solution import SolutionFormatError, Unrepairable, evaluate, parse_solution, validate
from .solver import RunRecord, SolverConfig, run

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_INVALID = 0, 1, 2, 3
FITNESS_TOL = 1e-2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def read_config_file(path: Optional[str]) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    if not path:
        return {}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_config(args, selector: Optional[str] = None) -> SolverConfig:
    cfg = SolverConfig.from_mapping(read_config_file(args.config))
    overrides = {}
    if selector or getattr(args, "selector", None):
        overrides["selector"] = selector or args.selector
    if getattr(args, "budget_scale", None) is not None:
        overrides["budget_scale"] = args.budget_scale
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return SolverConfig.from_mapping(overrides, base=cfg)


def _seed_default() -> Optional[int]:
    env = os.environ.get("CEVRP_SEED")
    return int(env) if env not in (None, "") else None


def _add_common(p: argparse.ArgumentParser, selector_many: bool = False) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value file overriding the defaults")
    p.add_argument("--seed", type=int, default=_seed_default(),
                   help="random seed (default: $CEVRP_SEED, else 0)")
    p.add_argument("--out", metavar="DIR", default="results", help="output directory")
    p.add_argument("--budget-scale", type=_positive_float, default=None,
                   help="multiply the evaluation budget, e.g. 0.02 for a quick run")
    if selector_many:
        p.add_argument("--selector", action="append", choices=SELECTORS,
                       help="heuristic selector; repeat for several (default: ts)")
    else:
        p.add_argument("--selector", choices=SELECTORS, default=None,
                       help="heuristic selector (default: ts)")


def _load(path: str):
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise UsageError(f"instance file not found: {path}") from None
    except (InstanceFormatError, OSError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from None


# ---------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    inst = _load(args.instance)
    cfg = build_config(args)
    try:
        rec = run(inst, cfg)
    except Unrepairable as exc:
        _err(f"solver failed on {inst.name}: {exc}")
        return EXIT_SOLVER
    out = Path(args.out)
    harness.write_text(out / "solution.txt", rec.best_tour)
    harness.write_text(out / "run.json", rec.to_json() + "\n")
    print(f"FITNESS: {rec.best_fitness:.2f}")
    print(f"EVALUATIONS: {rec.evaluations}")
    return EXIT_OK


def _instance_paths(items) -> list[Path]:
    paths: list[Path] = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.evrp")))
        else:
            paths.append(p)
    if not paths:
        raise UsageError("no instance files given")
    return paths


def cmd_bench(args) -> int:
    selectors = args.selector or ["ts"]
    out = Path(args.out)
    rows, n_ok, n_total = [], 0, 0
    lines = []
    for path in _instance_paths(args.instance):
        try:
            inst = _load(str(path))
        except UsageError as exc:
            _err(str(exc))
            n_total += 1
            continue
        for sel in selectors:
            n_total += 1
            cfg = build_config(args, selector=sel)
            records = harness.run_batch(inst, cfg, args.runs, cfg.seed, jobs=args.jobs)
            for rec in records:
                lines.append(rec.to_json())
                if not rec.ok:
                    _err(f"{inst.name}/{sel} seed {rec.seed}: {rec.error}")
            try:
                row = harness.summarize(records)
            except ValueError:
                continue
            rows.append(row)
            n_ok += 1
            print(f"{inst.name} {sel}: min {row.min:.2f} mean {row.mean:.2f} "
                  f"std {row.std:.2f} ({row.runs} runs)")
    harness.write_text(out / "stats.csv", harness.stats_csv(rows))
    harness.write_text(out / "runs.jsonl", "".join(line + "\n" for line in lines))
    return EXIT_OK if n_ok else EXIT_SOLVER


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    try:
        text = Path(args.solution).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read solution {args.solution}: {exc}") from None
    try:
        tour, stated = parse_solution(text, inst)
    except SolutionFormatError as exc:
        raise UsageError(f"cannot parse solution {args.solution}: {exc}") from None
    violations = validate(tour, inst)
    status = EXIT_OK
    try:
        fitness = evaluate(tour, inst)
        print(f"FITNESS: {fitness:.2f}")
    except ValueError:
        fitness = math.nan
        print("FITNESS: NA")
    for v in violations:
        print(f"VIOLATION: {v}")
        status = EXIT_INVALID
    if stated is not None and not abs(stated - fitness) <= FITNESS_TOL:
        print(f"MISMATCH: stated {stated:.6f}, recomputed {fitness:.6f}")
        status = EXIT_INVALID
    print("VALID" if status == EXIT_OK else "INVALID")
    return status


def cmd_rank(args) -> int:
    if args.stats:
        rows = []
        for path in args.stats:
            try:
                rows += harness.read_stats_csv(Path(path).read_text())
            except (OSError, ValueError, KeyError) as exc:
                raise UsageError(f"cannot read stats file {path}: {exc}") from None
        na_policy = args.na or "error"
    else:
        rows = harness.reference_stats()
        # the published tables leave one mean blank; rank it last
        na_policy = args.na or "worst"
    algorithms = None
    if args.algorithms:
        preset = {"hh": harness.HH_VARIANTS, "comparison": harness.COMPARISON,
                  "all": harness.ALGORITHMS}
        algorithms = preset.get(args.algorithms) or [a.strip() for a in args.algorithms.split(",")]
    elif not args.stats:
        algorithms = harness.HH_VARIANTS
    try:
        means, instances, algorithms = harness.means_matrix(rows, algorithms, args.subset)
        report = harness.friedman_ranks(means, algorithms, instances, na_policy=na_policy)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    holm = harness.holm_posthoc(report)
    out = Path(args.out)
    harness.write_text(out / "ranks.csv", harness.ranks_csv(report, holm))
    by_alg = {h.algorithm: h for h in holm}
    for alg in sorted(report.algorithms, key=report.rank_of):
        p = f"{by_alg[alg].p_holm:.6f}" if alg in by_alg else "control"
        print(f"{alg:<12} {report.rank_of(alg):.4f} {p}")
    print(f"Friedman chi2 {report.chi2:.4f} p {report.p_value:.6g} over {report.n_instances} instances")
    if args.energy:
        meta = harness.benchmark_meta()
        h = {k: v["h"] for k, v in meta.items()}
        known = harness.best_known()
        kept = [r for r in rows if r.selector in algorithms and r.instance in instances]
        try:
            table = harness.energy_diff_report(kept, known, h)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        harness.write_text(out / "energy.csv", harness.energy_csv(table))
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plotting

    out = Path(args.out)
    if args.kind == "trace":
        if not args.run:
            raise UsageError("--kind trace needs --run with a run record")
        rec = _read_record(args.run)
        try:
            svg = plotting.trace_svg(rec.bandit_trace, title=f"{rec.instance} {rec.selector}")
        except ValueError as exc:
            raise UsageError(f"{args.run}: {exc}") from None
        harness.write_text(out / "trace.svg", svg)
        return EXIT_OK
    if not args.instance:
        raise UsageError("--kind route needs --instance")
    inst = _load(args.instance)
    if args.run:
        text = _read_record(args.run).best_tour
    elif args.solution:
        try:
            text = Path(args.solution).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read solution {args.solution}: {exc}") from None
    else:
        raise UsageError("--kind route needs --solution or --run")
    try:
        tour, _ = parse_solution(text, inst)
    except SolutionFormatError as exc:
        raise UsageError(f"cannot parse solution: {exc}") from None
    if not tour.routes() or all(not r for r in tour.routes()):
        raise UsageError("solution has no routes to draw")
    harness.write_text(out / "route.svg", plotting.route_svg(inst, tour, title=inst.name))
    return EXIT_OK


def _read_record(path: str) -> RunRecord:
    try:
        text = Path(path).read_text()
        first = next(line for line in text.splitlines() if line.strip())
        return RunRecord.from_json(first)
    except (OSError, StopIteration, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read run record {path}: {exc}") from None


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hhasa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--instance", required=True, metavar="PATH")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="repeated seeded runs and summary statistics")
    p.add_argument("--instance", required=True, action="append", metavar="PATH",
                   help="instance file or directory of .evrp files; repeatable")
    _add_common(p, selector_many=True)
    p.add_argument("--runs", type=_positive_int, default=20)
    p.add_argument("--jobs", type=_positive_int, default=None,
                   help="parallel worker processes (default: available CPUs)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("--instance", required=True, metavar="PATH")
    p.add_argument("--solution", required=True, metavar="PATH")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("rank", help="Friedman ranks and Holm post-hoc test")
    p.add_argument("--stats", action="append", metavar="PATH",
                   help="stats.csv file(s); default is the bundled published means")
    p.add_argument("--algorithms", help="comma list, or one of hh, comparison, all")
    p.add_argument("--subset", help="instance filter such as '>=E101'")
    p.add_argument("--na", choices=("error", "worst"), default=None,
                   help="how to treat missing means")
    p.add_argument("--energy", action="store_true", help="also write energy.csv")
    p.add_argument("--out", metavar="DIR", default="results")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("plot", help="SVG route map or bandit trace")
    p.add_argument("--kind", choices=("route", "trace"), default="route")
    p.add_argument("--instance", metavar="PATH")
    p.add_argument("--solution", metavar="PATH")
    p.add_argument("--run", metavar="PATH", help="run.json written by solve")
    p.add_argument("--out", metavar="DIR", default="results")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_PARSE
    except ValueError as exc:
        # bad config values and the like
        _err(str(exc))
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
