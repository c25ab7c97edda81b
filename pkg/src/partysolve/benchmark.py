"""Desk-scale experiments: guided vs unguided construction, vanilla vs island GA, kernel backends.

Every experiment is fully determined by its seed and configuration.  Runs
are paired: run ``r`` of each arm uses the seed ``derive_seed(seed, r)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels_py
from .constructor import attempt, compile_problem
from .domain import Pool, Puzzle
from .evolution import GaConfig, run_ga
from .islands import IslandConfig, run_multi_island
from .persistence import LOG_FIELDS, ConvergenceLog, dumps_log
from .rng import derive_seed, make_rng


# --------------------------------------------------------------------------- guidance

@dataclass
class GuidanceResult:
    seeds: list[int]
    # NaN where the attempt's filtered pool emptied before the formation was full
    guided: np.ndarray
    unguided: np.ndarray
    threshold: float | None

    def summary(self) -> dict:
        out: dict = {"attempts": len(self.seeds), "threshold": self.threshold}
        for arm, v in (("guided", self.guided), ("unguided", self.unguided)):
            done = v[~np.isnan(v)]
            out[arm] = {
                "completed": int(done.size),
                "max": float(done.max()) if done.size else None,
                "median": float(np.median(done)) if done.size else None,
                "reaching_threshold": int((done >= self.threshold).sum())
                if self.threshold is not None else int(done.size),
            }
        return out

    def samples_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["attempt", "arm", "seed", "synergy"])
        for arm, v in (("guided", self.guided), ("unguided", self.unguided)):
            for i, (s, x) in enumerate(zip(self.seeds, v)):
                w.writerow([i, arm, s, "" if math.isnan(x) else repr(float(x))])
        return buf.getvalue()

    def histogram_csv(self, bins: int = 20) -> str:
        edges = np.linspace(0.0, 1.0, bins + 1)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "guided", "unguided"])
        hg, _ = np.histogram(self.guided[~np.isnan(self.guided)], edges)
        hu, _ = np.histogram(self.unguided[~np.isnan(self.unguided)], edges)
        for lo, hi, g, u in zip(edges[:-1], edges[1:], hg, hu):
            w.writerow([f"{lo:.2f}", f"{hi:.2f}", int(g), int(u)])
        return buf.getvalue()


def run_guidance_experiment(pool: Pool, puzzle: Puzzle, attempts: int = 5000,
                            seed: int = 0) -> GuidanceResult:
    """Single construction paths with and without neighbour scoring, on paired seeds.

    Both arms filter the pool identically and follow the same traversal for
    a given seed; only the item choice differs.
    """
    seeds = [derive_seed(seed, i) for i in range(attempts)]
    g = np.full(attempts, np.nan)
    u = np.full(attempts, np.nan)
    for i, s in enumerate(seeds):
        a = attempt(pool, puzzle, s, guided=True)
        b = attempt(pool, puzzle, s, guided=False)
        if a.synergy is not None:
            g[i] = a.synergy
        if b.synergy is not None:
            u[i] = b.synergy
    return GuidanceResult(seeds, g, u, puzzle.synergy_threshold)


# --------------------------------------------------------------------------- convergence

@dataclass
class ConvergenceResult:
    seeds: list[int]
    vanilla: list[ConvergenceLog]
    islands: list[ConvergenceLog]
    vanilla_best: list[float]
    islands_best: list[float]
    wall_time: dict[str, float] = field(default_factory=dict)

    def arms(self):
        return (("vanilla", self.vanilla), ("islands", self.islands))

    def median_diversity(self) -> dict[str, float]:
        """Per arm: median over runs of each run's median diversity across generations."""
        return {arm: float(np.median([np.median(l.column("diversity_cv")) for l in logs]))
                for arm, logs in self.arms()}

    def bands(self) -> list[dict]:
        """Per arm and generation: min/median/max of best fitness and of diversity over runs."""
        rows = []
        for arm, logs in self.arms():
            depth = max(len(l.rows) for l in logs)
            for g in range(depth):
                at = [l.rows[g] for l in logs if g < len(l.rows)]
                best = np.array([r.best_fitness for r in at])
                med = np.array([r.median_fitness for r in at])
                div = np.array([r.diversity_cv for r in at])
                rows.append({
                    "arm": arm, "generation": g, "runs": len(at),
                    "best_min": float(best.min()), "best_median": float(np.median(best)),
                    "best_max": float(best.max()), "median_fitness_median": float(np.median(med)),
                    "diversity_min": float(div.min()), "diversity_median": float(np.median(div)),
                    "diversity_max": float(div.max()),
                })
        return rows

    def bands_csv(self) -> str:
        rows = self.bands()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()

    def runs_csv(self, arm: str) -> str:
        logs = dict(self.arms())[arm]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run"] + list(LOG_FIELDS))
        for i, log in enumerate(logs):
            for line in dumps_log(log).splitlines()[1:]:
                buf.write(f"{i},{line}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        div = self.median_diversity()
        return {
            "runs": len(self.seeds),
            "median_diversity": div,
            "diversity_ratio": div["islands"] / div["vanilla"] if div["vanilla"] > 0 else None,
            "median_final_best": {"vanilla": float(np.median(self.vanilla_best)),
                                  "islands": float(np.median(self.islands_best))},
            "final_evaluations": {
                arm: [l.rows[-1].evaluations for l in logs] for arm, logs in self.arms()},
        }


def _pair_run(args):
    pool, puzzle, ga, ic, seed, budget = args
    t0 = time.perf_counter()
    v = run_ga(pool, puzzle, replace(ga, rng_seed=seed), max_evaluations=budget)
    t1 = time.perf_counter()
    m = run_multi_island(pool, puzzle, ga, replace(ic, rng_seed=seed), max_evaluations=budget)
    t2 = time.perf_counter()
    return v.log, m.log, v.best.fitness, m.best.fitness, t1 - t0, t2 - t1


def run_convergence_experiment(pool: Pool, puzzle: Puzzle, runs: int = 25,
                               generations: int = 100, seed: int = 0,
                               ga_config: GaConfig | None = None,
                               island_config: IslandConfig | None = None,
                               budget: int | None = None, workers: int = 1) -> ConvergenceResult:
    """Paired vanilla vs island GA runs at equal population sizes and evaluation budget.

    The vanilla arm uses ``island_count * per_island`` sizes so both arms
    breed the same number of offspring per generation; with identical seeds
    they also start from the same initial population.  ``budget`` caps
    evaluations for both arms (each stops after the generation that reaches
    it); ``generations`` caps generations.
    """
    ic = replace(island_config or IslandConfig(), total_generations=generations)
    ga = replace(ga_config or GaConfig(), population_size=ic.total_population,
                 offspring_size=ic.island_count * ic.per_island_offspring,
                 generations=generations)
    seeds = [derive_seed(seed, r) for r in range(runs)]
    jobs = [(pool, puzzle, ga, ic, s, budget) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_pair_run, jobs))
    else:
        results = [_pair_run(j) for j in jobs]
    return ConvergenceResult(
        seeds, [r[0] for r in results], [r[1] for r in results],
        [r[2] for r in results], [r[3] for r in results],
        {"vanilla": sum(r[4] for r in results), "islands": sum(r[5] for r in results)})


# --------------------------------------------------------------------------- kernels

@dataclass
class KernelTiming:
    name: str
    calls: int
    python_s: float
    compiled_s: float | None
    identical: bool | None

    @property
    def speedup(self) -> float | None:
        if self.compiled_s is None or self.compiled_s == 0:
            return None
        return self.python_s / self.compiled_s


def _compiled_module():
    try:
        from . import _kernels  # type: ignore[attr-defined]
        return _kernels
    except ImportError:
        return None


def _time(fn, calls):
    t0 = time.perf_counter()
    out = [fn(i) for i in range(calls)]
    return time.perf_counter() - t0, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.dtype == b.dtype and np.array_equal(a, b)
    return a == b


def run_kernel_benchmark(pool: Pool, puzzle: Puzzle, calls: int = 200,
                         seed: int = 0) -> list[KernelTiming]:
    """Time each kernel on both backends over identical random inputs and compare outputs."""
    problem = compile_problem(pool, puzzle)
    reqs = problem.reqs
    rng = make_rng(seed)
    M, N = len(pool), problem.N
    kargs = problem.kargs
    draws = []
    for _ in range(calls):
        # a random partial state: some nodes filled, the rest open
        chosen = rng.choice(M, size=N, replace=False)
        filled = int(rng.integers(0, N))
        slots = np.full(N, -1, dtype=np.int64)
        slots[:filled] = chosen[:filled]
        avail = np.ones(M, dtype=np.uint8)
        avail[chosen[:filled]] = 0
        tallies = reqs.tally_arrays()
        for s in chosen[:filled]:
            reqs.add_inplace(tallies, int(s))
        order = np.flatnonzero(slots < 0).astype(np.int64)
        draws.append((slots, avail, tallies, order, rng.random(len(order)),
                      chosen[:max(filled, 1)].astype(np.int64)))
    all_items = np.arange(M, dtype=np.int64)
    rargs = (reqs.kind_arr, reqs.cols, reqs.vcode, reqs.bounds, reqs.nvals)

    def cases(mod):
        def score(i):
            return mod.best_candidates(all_items, draws[i][5], *kargs)

        def filt(i):
            slots, avail, t, order, _, _ = draws[i]
            return mod.filter_candidates(np.flatnonzero(avail).astype(np.int64), len(order),
                                         *rargs, t.sums, t.cnts, t.vc, pool.codes, pool.nums)

        def build(i):
            slots, avail, t, order, u, _ = draws[i]
            work, av = slots.copy(), avail.copy()
            tt = (t.sums.copy(), t.cnts.copy(), t.vc.copy())
            status = mod.build_path(work, order, av, u, problem.indptr, problem.indices, True,
                                    False, 0.0, 0.0, 0, len(problem.edge_a), *rargs, *tt, *kargs)
            return status, work

        return {"best_candidates": score, "filter_candidates": filt, "build_path": build}

    compiled = _compiled_module()
    py_cases = cases(_kernels_py)
    c_cases = cases(compiled) if compiled is not None else None
    out = []
    for name, fn in py_cases.items():
        tp, rp = _time(fn, calls)
        if c_cases is None:
            out.append(KernelTiming(name, calls, tp, None, None))
            continue
        tc, rc = _time(c_cases[name], calls)
        out.append(KernelTiming(name, calls, tp, tc, all(_same(a, b) for a, b in zip(rp, rc))))
    return out


def kernel_report(timings: list[KernelTiming]) -> str:
    lines = [f"{'kernel':<18} {'calls':>6} {'python ms':>10} {'compiled ms':>12} "
             f"{'speedup':>8} identical"]
    for t in timings:
        c = "-" if t.compiled_s is None else f"{t.compiled_s * 1e3:12.2f}"
        sp = "-" if t.speedup is None else f"{t.speedup:8.1f}"
        lines.append(f"{t.name:<18} {t.calls:>6} {t.python_s * 1e3:10.2f} {c:>12} {sp:>8} "
                     f"{'-' if t.identical is None else t.identical}")
    return "\n".join(lines)


def write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
