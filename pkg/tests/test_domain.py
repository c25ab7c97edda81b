from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from partysolve.domain import (FormationGraph, Item, MaxCount, MaxPerValue, MinCount, MinDistinct,
                               MinSum, Pool, Puzzle, SchemaMismatch, Solution, SynergyAtLeast,
                               TraitDef, TraitSchema, UnknownItemId, evaluate, make_solution,
                               validate_puzzle)

from conftest import make_pool, path_graph, puzzle, race_schema


def test_schema_limits():
    with pytest.raises(SchemaMismatch):
        TraitSchema(())
    with pytest.raises(SchemaMismatch):
        TraitSchema(tuple(TraitDef(f"t{i}") for i in range(9)))
    with pytest.raises(SchemaMismatch):
        TraitSchema((TraitDef("a"), TraitDef("a")))
    assert len(TraitSchema(tuple(TraitDef(f"t{i}") for i in range(8)))) == 8


def test_trait_kind_and_scale_checked():
    with pytest.raises(SchemaMismatch):
        TraitDef("x", "ordinal")
    with pytest.raises(SchemaMismatch):
        TraitDef("x", "numeric", 0.0)


def test_pool_rejects_bad_items():
    schema = race_schema()
    with pytest.raises(SchemaMismatch):
        Pool(schema, [Item("a", ("elf",), 1.0)])
    with pytest.raises(SchemaMismatch):
        Pool(schema, [Item("a", ("elf", 3), -1.0)])
    with pytest.raises(SchemaMismatch):
        Pool(schema, [Item("a", ("centaur", 3), 1.0)])
    with pytest.raises(SchemaMismatch):
        Pool(schema, [Item("a", ("elf", -2), 1.0)])
    with pytest.raises(ValueError):
        Pool(schema, [Item("a", ("elf", 2), 1.0), Item("a", ("orc", 2), 1.0)])


def test_pool_lookup_and_arrays():
    pool = make_pool([("a", "elf", 3, 10), ("b", "orc", 5, 20)])
    assert pool["b"].price == 20.0
    with pytest.raises(UnknownItemId):
        pool["zzz"]
    assert pool.codes.shape == (2, 2)
    assert pool.nums[1, 1] == 5.0
    assert pool.code("race", "orc") == pool.codes[1, 0]
    assert not pool.codes.flags.writeable


def test_graph_normalises_edges():
    g = FormationGraph.from_edges(3, [(1, 0), (2, 1), (0, 1)])
    assert g.edges == ((0, 1), (1, 2))
    assert g.neighbors(1) == (0, 2)
    assert g.is_connected()
    assert not FormationGraph.from_edges(3, [(0, 1)]).is_connected()


def test_validate_well_formed_type1(templates):
    assert validate_puzzle(templates["type1"]) == []


def test_validate_threshold_out_of_range():
    pool = make_pool([("a", "elf", 3, 10)])
    bad = validate_puzzle(puzzle(pool, path_graph(3), SynergyAtLeast(1.5)))
    assert len(bad) == 1 and "threshold" in bad[0].field


def test_validate_bound_exceeds_nodes():
    pool = make_pool([("a", "elf", 3, 10)])
    bad = validate_puzzle(puzzle(pool, path_graph(10), MinCount("race", "elf", 11)))
    assert len(bad) == 1 and "exceeds node count" in bad[0].reason


def test_validate_structure_and_kinds():
    pool = make_pool([("a", "elf", 3, 10)])
    g = FormationGraph(3, ((0, 1), (1, 1)))
    fields = [v.field for v in validate_puzzle(Puzzle(
        pool.schema, g, (MinSum("race", 3), MinCount("level", 1, 1), MinDistinct("weight", 1),
                         SynergyAtLeast(0.5), SynergyAtLeast(0.6))))]
    assert "graph.edges" in fields  # self-loop and disconnected
    assert "requirements[0].trait" in fields  # MinSum on categorical
    assert "requirements[1].trait" in fields  # count on numeric
    assert "requirements[2].trait" in fields  # unknown trait
    assert "requirements" in fields  # two synergy requirements


def test_validate_warns_on_many_linear():
    pool = make_pool([("a", "elf", 3, 10)])
    reqs = [MinSum("level", i) for i in range(7)]
    with pytest.warns(UserWarning):
        assert validate_puzzle(puzzle(pool, path_graph(3), *reqs)) == []


def test_evaluate_min_sum_pass():
    pool = make_pool([(f"i{k}", "elf", 9 if k % 2 else 10, 5) for k in range(10)])
    pz = puzzle(pool, path_graph(10), MinSum("level", 84))
    rep = evaluate([f"i{k}" for k in range(10)], pz, pool)
    assert rep.feasible and rep.checks[0].value == 95.0


def test_evaluate_empty_requirements_all_pass():
    pool = make_pool([("a", "elf", 1, 1), ("b", "orc", 2, 2)])
    rep = evaluate(["a", "b"], puzzle(pool, path_graph(2)), pool)
    assert rep.feasible and rep.checks == ()
    assert rep.fitness == 3.0


def test_evaluate_goblins_and_two_races():
    rows = [(f"g{k}", "goblin", 1, 1) for k in range(9)] + [("e", "elf", 1, 1)]
    pool = make_pool(rows)
    pz = puzzle(pool, path_graph(10), MinCount("race", "goblin", 7), MinDistinct("race", 2))
    rep = evaluate([r[0] for r in rows], pz, pool)
    assert [c.passed for c in rep.checks] == [True, True]
    assert [c.value for c in rep.checks] == [9.0, 2.0]


def test_evaluate_max_requirements():
    rows = [("a", "elf", 1, 1), ("b", "elf", 1, 1), ("c", "orc", 1, 1)]
    pool = make_pool(rows)
    pz = puzzle(pool, path_graph(3), MaxCount("race", "elf", 1), MaxPerValue("race", 2))
    rep = evaluate(["a", "b", "c"], pz, pool)
    assert [c.passed for c in rep.checks] == [False, True]
    assert rep.failures() == [MaxCount("race", "elf", 1)]


def test_evaluate_rejects_bad_assignments():
    pool = make_pool([("a", "elf", 1, 1), ("b", "orc", 2, 2)])
    pz = puzzle(pool, path_graph(2))
    with pytest.raises(UnknownItemId):
        evaluate(["a", "nope"], pz, pool)
    with pytest.raises(ValueError):
        evaluate(["a", "a"], pz, pool)
    with pytest.raises(ValueError):
        evaluate(["a"], pz, pool)


def test_solution_key_orders_by_price_then_assignment():
    a = Solution(("x", "y"), 1.0, 5.0)
    b = Solution(("a", "b"), 1.0, 5.0)
    c = Solution(("z", "z2"), 1.0, 4.0)
    assert sorted([a, b, c], key=lambda s: s.key) == [c, b, a]


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_permutation_changes_only_synergy(pool500, templates, data):
    pz = templates["type2"]
    idx = data.draw(st.lists(st.integers(0, len(pool500) - 1), min_size=10, max_size=10,
                             unique=True))
    ids = [pool500.items[i].id for i in idx]
    perm = data.draw(st.permutations(ids))
    r1, r2 = evaluate(ids, pz, pool500), evaluate(perm, pz, pool500)
    assert r1.fitness == r2.fitness
    assert r1.fitness == math.fsum(pool500[i].price for i in ids)
    lin1 = [c.passed for c in r1.checks if not isinstance(c.requirement, SynergyAtLeast)]
    lin2 = [c.passed for c in r2.checks if not isinstance(c.requirement, SynergyAtLeast)]
    assert lin1 == lin2
    # pure function
    assert evaluate(ids, pz, pool500) == r1


def test_make_solution_caches_scores(pool500, templates):
    ids = [it.id for it in pool500.items[:10]]
    sol = make_solution(ids, templates["type1"], pool500)
    rep = evaluate(sol, templates["type1"], pool500)
    assert sol.synergy == rep.synergy and sol.fitness == rep.fitness
