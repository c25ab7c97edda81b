"""Command line interface.

Exit codes: 0 success, 2 no feasible solution found within budget,
3 input error, 4 instance too large for the oracle.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import benchmark
from .constructor import ConstructorConfig, Infeasible, PoolTooSmall, construct
from .domain import SolverError, evaluate, validate_puzzle
from .evolution import GaConfig, InitializationBudgetExceeded, run_ga
from .islands import IslandConfig, run_multi_island
from .oracle import DEFAULT_MAX_ENUMERATION, InstanceTooLarge, enumerate_all
from .persistence import (ORACLE_FORMAT, PoolSpec, dumps_infeasible, dumps_log, dumps_pool,
                          dumps_population, dumps_solution, generate_pool, resolve_pool,
                          resolve_puzzle)


EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_TOO_LARGE = 0, 2, 3, 4


class InputError(SolverError):
    pass


def _available_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


def _write(path: str | Path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _load(args):
    pool = resolve_pool(args.pool)
    puzzle = resolve_puzzle(args.puzzle, pool.schema)
    problems = validate_puzzle(puzzle)
    if problems:
        raise InputError("invalid puzzle: " + "; ".join(f"{v.field}: {v.reason}" for v in problems))
    return pool, puzzle


def _default(puzzle, key, fallback):
    return dict(puzzle.defaults).get(key, fallback)


# ---------------------------------------------------------------- commands

def cmd_gen_pool(args) -> int:
    spec = PoolSpec(size=args.size)
    spec.validate()
    _write(args.out, dumps_pool(generate_pool(spec, args.seed)))
    print(f"wrote {args.size} items to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    pool, puzzle = _load(args)
    iters = args.max_iters or int(_default(puzzle, "max_iterations", 10))
    out = construct(pool, puzzle, ConstructorConfig(max_iterations=iters, rng_seed=args.seed))
    if isinstance(out, Infeasible):
        _write(args.out, dumps_infeasible(out.attempts, out.best_synergy_seen, puzzle.name))
        best = "none" if out.best_synergy_seen is None else f"{out.best_synergy_seen:.4f}"
        print(f"no feasible solution after {out.attempts} attempts "
              f"(best synergy seen {best}, {out.empty_pool_restarts} emptied pools)",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    report = evaluate(out, puzzle, pool)
    _write(args.out, dumps_solution(out, report, puzzle.name))
    print(f"price {out.fitness:.2f}  synergy {out.synergy:.4f}  -> {args.out}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    pool, puzzle = _load(args)
    islands = 1 if args.vanilla else args.islands
    if args.population % islands or args.offspring % islands:
        raise InputError("--population and --offspring must be divisible by --islands")
    generations = args.generations or int(_default(puzzle, "generations", 100))
    ga = GaConfig(population_size=args.population, offspring_size=args.offspring,
                  generations=generations, rng_seed=args.seed,
                  max_iterations=int(_default(puzzle, "max_iterations", 10)))
    if args.vanilla:
        res = run_ga(pool, puzzle, ga, time_limit=args.time_limit,
                     max_evaluations=args.max_evaluations)
    else:
        ic = IslandConfig(islands, args.population // islands, args.offspring // islands,
                          args.migration_period, generations, args.seed)
        res = run_multi_island(pool, puzzle, ga, ic, workers=args.workers,
                               time_limit=args.time_limit, max_evaluations=args.max_evaluations)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "best.json", dumps_solution(res.best, evaluate(res.best, puzzle, pool),
                                             puzzle.name))
    _write(out / "population.json", dumps_population(res.final))
    _write(out / "convergence.csv", dumps_log(res.log))
    if res.truncated:
        print(f"warning: time limit reached after generation {res.log.rows[-1].generation}; "
              "results are partial", file=sys.stderr)
    near = [s for s in res.final if s.fitness <= res.best.fitness * (1 + args.near)]
    distinct = len({s.assignment for s in near})
    sets = len({frozenset(s.assignment) for s in near})
    arm = "vanilla GA" if args.vanilla else f"{islands} island(s)"
    print(f"{arm}, {res.log.rows[-1].generation} generations, "
          f"{res.log.rows[-1].evaluations} evaluations")
    print(f"best price      {res.best.fitness:.2f}")
    print(f"best synergy    {res.best.synergy:.4f}")
    print(f"near-optimal    {distinct} distinct assignments ({sets} distinct item sets) "
          f"within {args.near:.0%} of best")
    print(f"output          {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    pool, puzzle = _load(args)
    res = enumerate_all(pool, puzzle, args.max_enumeration)
    report = {
        "format": ORACLE_FORMAT,
        "puzzle": puzzle.name,
        "enumerated": res.enumerated,
        "feasible_count": res.feasible_count,
        "feasible_selections": res.feasible_selections,
        "optimal_fitness": res.optimal_fitness,
        "optimal_solutions": [list(s.assignment) for s in res.optimal_solutions],
    }
    _write(args.out, json.dumps(report, indent=2) + "\n")
    opt = "none" if res.optimal_fitness is None else f"{res.optimal_fitness:.2f}"
    print(f"{res.feasible_count} feasible of {res.enumerated} assignments; optimum {opt}")
    return EXIT_OK


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.experiment == "kernels":
        pool, puzzle = _load(args)
        timings = benchmark.run_kernel_benchmark(pool, puzzle, args.calls, args.seed)
        text = benchmark.kernel_report(timings)
        _write(out / "kernels.txt", text + "\n")
        print(text)
        return EXIT_OK
    pool, puzzle = _load(args)
    if args.experiment == "guidance":
        res = benchmark.run_guidance_experiment(pool, puzzle, args.attempts, args.seed)
        _write(out / "guidance_samples.csv", res.samples_csv())
        _write(out / "guidance_histogram.csv", res.histogram_csv())
        summary = res.summary()
    else:
        ga = GaConfig(max_iterations=int(_default(puzzle, "max_iterations", 10)))
        ic = IslandConfig(args.islands, args.per_island_population, args.per_island_offspring,
                          args.migration_period)
        res = benchmark.run_convergence_experiment(pool, puzzle, args.runs, args.generations,
                                                   args.seed, ga, ic, args.budget, args.workers)
        _write(out / "vanilla_runs.csv", res.runs_csv("vanilla"))
        _write(out / "islands_runs.csv", res.runs_csv("islands"))
        _write(out / "bands.csv", res.bands_csv())
        summary = res.summary()
    _write(out / f"{args.experiment}_summary.json",
           json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_problem(p, pool_default=None, puzzle_default=None):
    p.add_argument("--pool", default=pool_default, required=pool_default is None,
                   help="pool file, or 'default' / 'tiny' for a shipped pool")
    p.add_argument("--puzzle", default=puzzle_default, required=puzzle_default is None,
                   help="puzzle file, or a shipped template: type1 type2 type3 tiny")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partysolve",
                                     description="Formation puzzle validation and optimisation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-pool", help="generate a synthetic item pool")
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pool)

    p = sub.add_parser("solve", help="construct one feasible solution")
    _add_problem(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=None,
                   help="construction restarts (default: puzzle's solver default, else 10)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("optimize", help="minimise total price with the GA")
    _add_problem(p)
    p.add_argument("--seed", type=int, required=True)
    arm = p.add_mutually_exclusive_group()
    arm.add_argument("--islands", type=int, default=5)
    arm.add_argument("--vanilla", action="store_true", help="single population")
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--population", type=int, default=50, help="total over all islands")
    p.add_argument("--offspring", type=int, default=100, help="total over all islands")
    p.add_argument("--migration-period", type=int, default=10)
    p.add_argument("--max-evaluations", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None, help="soft cap in seconds")
    p.add_argument("--near", type=float, default=0.05,
                   help="price tolerance for counting near-optimal solutions")
    p.add_argument("--workers", type=int, default=_available_workers())
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("oracle", help="enumerate a tiny instance exhaustively")
    _add_problem(p)
    p.add_argument("--max-enumeration", type=int, default=DEFAULT_MAX_ENUMERATION)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a benchmark experiment")
    p.add_argument("experiment", choices=("guidance", "convergence", "kernels"))
    _add_problem(p, "default", "type1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=5000)
    p.add_argument("--runs", type=int, default=25)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--budget", type=int, default=None, help="evaluation budget per run")
    p.add_argument("--islands", type=int, default=5)
    p.add_argument("--per-island-population", type=int, default=10)
    p.add_argument("--per-island-offspring", type=int, default=20)
    p.add_argument("--migration-period", type=int, default=10)
    p.add_argument("--calls", type=int, default=200)
    p.add_argument("--workers", type=int, default=_available_workers())
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InitializationBudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InstanceTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (SolverError, PoolTooSmall, OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
