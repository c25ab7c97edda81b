"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are printed as the
test runs and again in the terminal summary.  Run alone with

    pytest tests/test_acceptance.py -v
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

import partysolve.islands as islands_mod
from partysolve.benchmark import run_convergence_experiment, run_guidance_experiment
from partysolve.constraints import LinearReqs, OpCounter, PartialState, filter_pool, update
from partysolve.constructor import ConstructorConfig, compile_problem, complete, construct
from partysolve.domain import MinCount, Solution, evaluate
from partysolve.evolution import GaConfig, run_ga
from partysolve.islands import IslandConfig, run_multi_island
from partysolve.oracle import enumerate_all, linear_completions, linear_feasible
from partysolve.persistence import PoolSpec, generate_pool, load_template
from partysolve.rng import make_rng

from conftest import random_tiny_instance

pytestmark = pytest.mark.acceptance

VERDICTS: dict[int, str] = {}

TINY_OPTIMUM = 846.09


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    VERDICTS[number] = line
    print(line)


# --------------------------------------------------------------- shared experiments

class MigrationAudit:
    """Wraps ``migrate`` to check that every migration conserves the chromosome multiset."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.violations = 0

    def __call__(self, islands):
        out = self.inner(islands)
        self.calls += 1
        before = Counter(m for isl in islands for m in isl.members)
        after = Counter(m for isl in out for m in isl.members)
        if before != after or [len(i) for i in islands] != [len(i) for i in out]:
            self.violations += 1
        return out


@pytest.fixture(scope="module")
def audit():
    a = MigrationAudit(islands_mod.migrate)
    islands_mod.migrate = a
    yield a
    islands_mod.migrate = a.inner


@pytest.fixture(scope="module")
def oracle_runs(tiny, audit):
    pool, pz = tiny
    optimum = enumerate_all(pool, pz).optimal_fitness
    isl, van = [], []
    for seed in range(20):
        isl.append(run_multi_island(pool, pz, GaConfig(), IslandConfig(2, 6, 12, 10, 40, seed)))
        van.append(run_ga(pool, pz, GaConfig(population_size=12, offspring_size=24,
                                             generations=40, rng_seed=seed)))
    return optimum, isl, van


CONVERGENCE_RUNS = 25
CONVERGENCE_BUDGET = 6000  # evaluations per run, both arms


@pytest.fixture(scope="module")
def diversity_runs(pool500, templates, audit):
    t0 = time.perf_counter()
    res = run_convergence_experiment(pool500, templates["type2"], runs=CONVERGENCE_RUNS,
                                     generations=100, seed=0, ga_config=GaConfig(),
                                     island_config=IslandConfig(), budget=CONVERGENCE_BUDGET)
    return res, time.perf_counter() - t0


# --------------------------------------------------------------- 1. feasibility

def test_criterion_1_feasibility(pool500, templates):
    t0 = time.perf_counter()
    runs = returned = bad = 0
    for name in ("type1", "type2", "type3"):
        pz = templates[name]
        for seed in range(334):
            runs += 1
            out = construct(pool500, pz, ConstructorConfig(rng_seed=seed))
            if not isinstance(out, Solution):
                continue
            returned += 1
            rep = evaluate(out, pz, pool500)
            if (not rep.feasible or len(set(out.assignment)) != pz.N
                    or abs(rep.synergy - out.synergy) > 1e-12):
                bad += 1
    elapsed = time.perf_counter() - t0
    ok = runs >= 1000 and returned > 0 and bad == 0
    verdict(1, ok, f"{runs} runs, {returned} solutions, {bad} invalid, {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------- 2. forward checking

def _count_guarantee_holds(state, pool, pz, used):
    K = state.remaining
    schema = pool.schema
    for r in pz.linear:
        if not isinstance(r, MinCount):
            continue
        j = schema.index(r.trait)
        have = sum(pool.items[i].values[j] == r.value for i in used)
        k = max(0, r.bound - have)
        avail = sum(it.values[j] == r.value for i, it in enumerate(pool.items) if i not in used)
        if K < k or avail < k:
            return False
    return True


def test_criterion_2_forward_checking():
    t0 = time.perf_counter()
    lost = stranded = walks_done = oracle_mismatch = 0
    for inst in range(200):
        pool, pz = random_tiny_instance(10_000 + inst)
        reqs = LinearReqs(pz, pool)
        rng = make_rng(inst)
        feasible_sets = linear_completions(pool, pz, [])
        if len(feasible_sets) != enumerate_all(pool, pz).feasible_selections:
            oracle_mismatch += 1
        # random partial states: no item of any linear-feasible completion is filtered out
        for _ in range(5):
            L = int(rng.integers(0, pz.N))
            placed = [pool.items[int(i)].id for i in rng.choice(len(pool), L, replace=False)]
            state = PartialState.empty(reqs)
            for node, iid in enumerate(placed):
                state = update(state, node, iid)
            cands = np.array([i for i in range(len(pool)) if i not in state.used], dtype=np.int64)
            kept = {pool.items[i].id for i in filter_pool(cands, state)}
            for extra in linear_completions(pool, pz, placed):
                if not extra <= kept:
                    lost += 1
        if not feasible_sets:
            continue
        # walks that only ever pick filtered items
        for _ in range(5):
            state = PartialState.empty(reqs)
            for node in range(pz.N):
                if not _count_guarantee_holds(state, pool, pz, state.used):
                    stranded += 1
                    break
                cands = np.array([i for i in range(len(pool)) if i not in state.used],
                                 dtype=np.int64)
                out = filter_pool(cands, state)
                if len(out) == 0:
                    break
                state = update(state, node, int(out[int(rng.integers(len(out)))]))
            else:
                walks_done += 1
                if not linear_feasible(pz, [pool.items[i] for i in state.slots]):
                    lost += 1
    elapsed = time.perf_counter() - t0
    ok = lost == 0 and stranded == 0 and oracle_mismatch == 0
    verdict(2, ok, f"200 instances, {lost} soundness violations, {stranded} stranded count "
                   f"requirements, {walks_done} completed walks all feasible, {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------- 3. guidance

def test_criterion_3_guidance(pool500, templates):
    t0 = time.perf_counter()
    res = run_guidance_experiment(pool500, templates["type1"], attempts=500, seed=0)
    s = res.summary()
    g, u = s["guided"], s["unguided"]
    elapsed = time.perf_counter() - t0
    ok = (g["median"] is not None and u["median"] is not None and g["median"] > u["median"]
          and g["max"] >= 0.8 and u["max"] < 0.8)
    verdict(3, ok, f"median guided {g['median']:.4f} vs unguided {u['median']:.4f}; "
                   f"max {g['max']:.4f} vs {u['max']:.4f}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------- 4. oracle optimality

def test_criterion_4_oracle_optimality(oracle_runs):
    optimum, isl, van = oracle_runs
    hit_i = sum(abs(r.best.fitness - optimum) <= 1e-9 for r in isl)
    hit_v = sum(abs(r.best.fitness - optimum) <= 1e-9 for r in van)
    ok = (abs(optimum - TINY_OPTIMUM) <= 1e-9 and hit_i >= 18 and hit_v >= 14)
    verdict(4, ok, f"optimum {optimum:.2f}; islands {hit_i}/20, vanilla {hit_v}/20")
    assert ok


# --------------------------------------------------------------- 5. diversity

def test_criterion_5_diversity(diversity_runs):
    res, elapsed = diversity_runs
    s = res.summary()
    ratio = s["diversity_ratio"]
    best = s["median_final_best"]
    ok = ratio is not None and ratio >= 1.5 and best["islands"] <= best["vanilla"]
    verdict(5, ok, f"median CV islands {s['median_diversity']['islands']:.4f} / vanilla "
                   f"{s['median_diversity']['vanilla']:.4f} = {ratio:.3f} (need >= 1.5); median "
                   f"final best islands {best['islands']:.2f} vs vanilla {best['vanilla']:.2f}; "
                   f"{elapsed:.0f}s")
    assert ok


# --------------------------------------------------------------- 6. monotone logs

def test_criterion_6_monotone_logs(oracle_runs, diversity_runs, audit):
    _, isl, van = oracle_runs
    res, _ = diversity_runs
    logs = [r.log for r in isl + van] + res.vanilla + res.islands
    rising = sum(bool(np.any(np.diff(l.column("best_fitness")) > 0)) for l in logs)
    flagged = sum(int(l.column("migration").sum()) for l in logs)
    ok = rising == 0 and audit.violations == 0 and audit.calls > 0
    verdict(6, ok, f"{len(logs)} logs, {rising} with a rising best; {audit.calls} migrations "
                   f"audited ({flagged} flagged in logs), {audit.violations} not conserving")
    assert ok


# --------------------------------------------------------------- 7. determinism

def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "partysolve", *args], cwd=cwd,
                          capture_output=True, text=True)


def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file()}


def test_criterion_7_determinism(tmp_path):
    t0 = time.perf_counter()
    commands = {
        "solve": ["solve", "--pool", "default", "--puzzle", "type1", "--seed", "5",
                  "--out", "{out}/solution.json"],
        "optimize": ["optimize", "--pool", "default", "--puzzle", "type1", "--seed", "5",
                     "--generations", "4", "--population", "10", "--offspring", "20",
                     "--islands", "2", "--migration-period", "2", "--out", "{out}"],
        "bench": ["bench", "convergence", "--runs", "2", "--generations", "3",
                  "--islands", "2", "--per-island-population", "3",
                  "--per-island-offspring", "6", "--migration-period", "2", "--out", "{out}"],
    }
    same = []
    for name, cmd in commands.items():
        trees = []
        for k, workers in enumerate(("1", "2", "1")):
            out = tmp_path / f"{name}{k}"
            out.mkdir()
            args = [a.format(out=out) for a in cmd]
            if name != "solve":
                args += ["--workers", workers]
            proc = _cli(args, tmp_path)
            assert proc.returncode == 0, proc.stderr
            trees.append(_tree(out))
        same.append(trees[0] == trees[1] == trees[2] and trees[0])
    elapsed = time.perf_counter() - t0
    ok = all(bool(x) for x in same)
    verdict(7, ok, f"solve/optimize/bench outputs byte-identical across reruns and --workers "
                   f"1/2: {[bool(x) for x in same]}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------- 8. complexity

def test_criterion_8_complexity():
    t0 = time.perf_counter()
    counts = {}
    for m in (1_000, 10_000):
        pool = generate_pool(PoolSpec(size=m), 11)
        pz = load_template("type2", pool.schema)
        problem = compile_problem(pool, pz)
        total = 0
        for seed in range(20):
            c = OpCounter()
            complete(problem, [-1] * pz.N, rng_seed=seed, max_iterations=1, counter=c)
            total += c.total
        counts[m] = total / 20
    ratio = counts[10_000] / counts[1_000]
    elapsed = time.perf_counter() - t0
    ok = 10 / 4 <= ratio <= 10 * 4
    verdict(8, ok, f"checks per iteration {counts[1_000]:.0f} (M=1e3) -> "
                   f"{counts[10_000]:.0f} (M=1e4), ratio {ratio:.2f} vs M ratio 10; "
                   f"{elapsed:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
