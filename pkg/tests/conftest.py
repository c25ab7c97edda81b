from __future__ import annotations

import pytest

from partysolve.domain import FormationGraph, Item, Pool, Puzzle, TraitDef, TraitSchema
from partysolve.persistence import load_builtin_pool, load_template

RACES = ("human", "elf", "goblin", "orc", "dwarf")


@pytest.fixture(scope="session")
def pool500():
    return load_builtin_pool("pool_m500")


@pytest.fixture(scope="session")
def templates(pool500):
    return {name: load_template(name, pool500.schema) for name in ("type1", "type2", "type3")}


@pytest.fixture(scope="session")
def tiny():
    pool = load_builtin_pool("pool_tiny")
    return pool, load_template("tiny", pool.schema)


def race_schema(with_level: bool = True) -> TraitSchema:
    traits = [TraitDef("race", "categorical", 1.0, RACES)]
    if with_level:
        traits.append(TraitDef("level", "numeric", 3.0))
    return TraitSchema(tuple(traits))


def make_pool(rows, with_level: bool = True) -> Pool:
    """rows: (id, race[, level], price)."""
    schema = race_schema(with_level)
    items = []
    for row in rows:
        if with_level:
            iid, race, level, price = row
            items.append(Item(iid, (race, level), float(price)))
        else:
            iid, race, price = row
            items.append(Item(iid, (race,), float(price)))
    return Pool(schema, items)


def path_graph(n: int) -> FormationGraph:
    return FormationGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def puzzle(pool: Pool, graph: FormationGraph, *reqs, kernel=None) -> Puzzle:
    return Puzzle(pool.schema, graph, tuple(reqs), kernel)


TINY_SPEC_CATEGORIES = (("race", ("human", "elf", "orc")),
                        ("religion", ("r0", "r1", "r2", "r3")))


def random_tiny_instance(seed: int, with_synergy: bool = False):
    """A random small (pool, puzzle) pair: M in [6, 14], N in [2, 4], 1-3 linear requirements."""
    import numpy as np

    from partysolve.domain import (FormationGraph, MaxCount, MaxPerValue, MinCount, MinDistinct,
                                   MinSum, Puzzle, SynergyAtLeast)
    from partysolve.persistence import PoolSpec, generate_pool

    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(6, 15)), int(rng.integers(2, 5))
    pool = generate_pool(PoolSpec(size=m, categories=TINY_SPEC_CATEGORIES,
                                  cohesion=(("race", 0.5), ("religion", 0.3)), factions=3),
                         int(rng.integers(2**31)))
    edges = [(i, i + 1) for i in range(n - 1)]
    if n > 2 and rng.random() < 0.5:
        edges.append((0, n - 1))
    graph = FormationGraph.from_edges(n, edges)
    makers = [
        lambda: MinSum("level", int(rng.integers(n, 8 * n))),
        lambda: MinCount("race", str(rng.choice(["human", "elf", "orc"])), int(rng.integers(1, n + 1))),
        lambda: MaxCount("race", str(rng.choice(["human", "elf", "orc"])), int(rng.integers(0, n))),
        lambda: MinDistinct("religion", int(rng.integers(1, n + 1))),
        lambda: MaxPerValue("race", int(rng.integers(1, n + 1))),
    ]
    picks = rng.choice(len(makers), int(rng.integers(1, 4)), replace=False)
    reqs = [makers[int(i)]() for i in sorted(picks)]
    if with_synergy:
        reqs.insert(0, SynergyAtLeast(float(rng.choice([0.2, 0.3, 0.4]))))
    return pool, Puzzle(pool.schema, graph, tuple(reqs))


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, one line per criterion, at the end of the run."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[number])
