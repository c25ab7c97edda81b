from __future__ import annotations

import math

import pytest

from partysolve.constructor import ConstructorConfig, construct
from partysolve.domain import MinCount, Solution, SynergyAtLeast
from partysolve.evolution import GaConfig, run_ga
from partysolve.oracle import (InstanceTooLarge, assignment_count, enumerate_all,
                               feasible_assignments)

from conftest import make_pool, path_graph, puzzle

# frozen reference values for the shipped tiny instance
TINY_ENUMERATED = 11880
TINY_FEASIBLE = 232
TINY_FEASIBLE_SELECTIONS = 12
TINY_OPTIMUM = 846.09


def three_items():
    return make_pool([("a", "elf", 1), ("b", "elf", 2), ("c", "orc", 4)], with_level=False)


def test_hand_counted_three_node_instance():
    pool = three_items()
    res = enumerate_all(pool, puzzle(pool, path_graph(3), SynergyAtLeast(0.5)))
    # orc in the middle gives 0; orc at either end keeps one elf-elf edge (0.5)
    assert res.enumerated == 6 and res.feasible_count == 4
    assert res.optimal_fitness == 7.0 and len(res.optimal_solutions) == 4
    assert enumerate_all(pool, puzzle(pool, path_graph(3), SynergyAtLeast(0.6))).feasible_count == 0


def test_unsatisfiable_requirement():
    pool = three_items()
    res = enumerate_all(pool, puzzle(pool, path_graph(3), MinCount("race", "orc", 2)))
    assert res.feasible_count == 0 and res.optimal_fitness is None and res.optimal_solutions == ()


def test_size_guard():
    assert assignment_count(12, 4) == math.comb(12, 4) * 24
    pool = make_pool([(f"i{k}", "elf", 1) for k in range(12)], with_level=False)
    with pytest.raises(InstanceTooLarge):
        enumerate_all(pool, puzzle(pool, path_graph(4)), max_enumeration=1000)


def test_tiny_reference_values(tiny):
    pool, pz = tiny
    res = enumerate_all(pool, pz)
    assert res.enumerated == TINY_ENUMERATED
    assert res.feasible_count == TINY_FEASIBLE
    assert res.feasible_selections == TINY_FEASIBLE_SELECTIONS
    assert res.optimal_fitness == pytest.approx(TINY_OPTIMUM, abs=1e-9)
    assert res.feasible_count <= res.enumerated


def test_solver_results_lie_in_feasible_set(tiny):
    pool, pz = tiny
    feasible = set(feasible_assignments(pool, pz))
    assert len(feasible) == TINY_FEASIBLE
    for seed in range(30):
        out = construct(pool, pz, ConstructorConfig(rng_seed=seed))
        if isinstance(out, Solution):
            assert out.assignment in feasible
    res = run_ga(pool, pz, GaConfig(population_size=6, offspring_size=12, generations=5))
    assert all(m.assignment in feasible for m in res.final)
    assert res.best.fitness >= TINY_OPTIMUM - 1e-9
