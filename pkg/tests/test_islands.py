from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from partysolve.domain import Solution
from partysolve.evolution import GaConfig, Population, run_ga
from partysolve.islands import IslandConfig, migrate, partition, run_multi_island


def sols(prices):
    return [Solution((f"x{i}",), 1.0, float(p)) for i, p in enumerate(prices)]


def fitness_blocks(islands):
    return [sorted(m.fitness for m in isl.members) for isl in islands]


def test_partition_sorted_blocks():
    rng = np.random.default_rng(0)
    members = sols(rng.permutation(np.arange(1, 11)))
    isl = partition(members, 2)
    assert fitness_blocks(isl) == [[1, 2, 3, 4, 5], [6, 7, 8, 9, 10]]


def test_partition_equal_fitness_equal_sizes():
    isl = partition(sols([4] * 9), 3)
    assert [len(i) for i in isl] == [3, 3, 3]


def test_partition_ignores_input_order():
    members = sols([5, 3, 3, 9, 1, 7])
    shuffled = [members[i] for i in (3, 0, 5, 1, 4, 2)]
    assert [i.members for i in partition(members, 3)] == [i.members for i in partition(shuffled, 3)]


def test_partition_needs_divisible_size():
    with pytest.raises(ValueError):
        partition(sols([1, 2, 3]), 2)


def test_migrate_single_island_unchanged():
    isl = [Population(tuple(sols([3, 1, 2])), 4, 0.1, 0)]
    assert migrate(isl) == isl


def test_migrate_idempotent_on_sorted_islands():
    isl = partition(sols(range(1, 9)), 2)
    assert [i.members for i in migrate(isl)] == [i.members for i in isl]


def test_migrate_conserves_members():
    rng = np.random.default_rng(4)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        size = int(rng.integers(2, 6))
        prices = rng.integers(1, 30, k * size)
        members = sols(prices)
        order = rng.permutation(len(members))
        islands = [Population(tuple(members[j] for j in order[i * size:(i + 1) * size]), 0, 0.0, 0)
                   for i in range(k)]
        out = migrate(islands)
        before = Counter(m for i in islands for m in i.members)
        after = Counter(m for i in out for m in i.members)
        assert before == after
        assert [len(i) for i in out] == [size] * k
        flat = [m.fitness for i in out for m in i.members]
        assert flat == sorted(flat)


def test_config_validation():
    with pytest.raises(ValueError):
        IslandConfig(island_count=0)
    with pytest.raises(ValueError):
        IslandConfig(per_island_population=1)
    assert IslandConfig().total_population == 50


def test_one_island_is_vanilla(pool500, templates):
    pz = templates["type1"]
    ga = GaConfig(population_size=8, offspring_size=16, generations=5, rng_seed=3)
    vanilla = run_ga(pool500, pz, ga)
    single = run_multi_island(pool500, pz, GaConfig(), IslandConfig(1, 8, 16, 2, 5, 3))
    assert single.log == vanilla.log
    assert single.final == vanilla.final and single.best == vanilla.best


@pytest.fixture(scope="module")
def island_run(pool500, templates):
    ic = IslandConfig(3, 4, 8, 3, 7, 11)
    return run_multi_island(pool500, templates["type1"], GaConfig(), ic), ic


def test_log_marks_migrations(island_run):
    res, ic = island_run
    flags = [r.generation for r in res.log.rows if r.migration]
    assert flags == [3, 6]
    assert len(res.log) == ic.total_generations + 1


def test_global_best_monotone(island_run):
    res, _ = island_run
    assert np.all(np.diff(res.log.column("best_fitness")) <= 0)
    assert res.best == res.final[0]
    assert len(res.final) == 12 and len(res.islands) == 3


def test_workers_do_not_change_results(island_run, pool500, templates):
    res, ic = island_run
    par = run_multi_island(pool500, templates["type1"], GaConfig(), ic, workers=3)
    assert par.log == res.log and par.final == res.final


def test_evaluation_budget_matches_across_workers(pool500, templates):
    ic = IslandConfig(2, 4, 8, 2, 20, 5)
    a = run_multi_island(pool500, templates["type1"], GaConfig(), ic, max_evaluations=60)
    b = run_multi_island(pool500, templates["type1"], GaConfig(), ic, workers=2,
                         max_evaluations=60)
    assert a.log == b.log
    assert a.log.rows[-1].evaluations >= 60 > a.log.rows[-2].evaluations
