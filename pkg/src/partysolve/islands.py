"""Island model: fitness-sorted sub-populations evolving independently with periodic migration.

Migration pools every island, sorts by fitness and re-slices into equal
blocks, so similar-priced solutions end up together.  Islands share no state
between migrations, which lets them run in worker processes; each island's
random streams are keyed by its index, so results never depend on the
number of workers.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .domain import Pool, Puzzle, Solution
from .evolution import (GaConfig, GaResult, Population, diversity_cv, init_population, log_row,
                        next_generation, sort_members)
from .persistence import ConvergenceLog


@dataclass(frozen=True)
class IslandConfig:
    island_count: int = 5
    per_island_population: int = 10
    per_island_offspring: int = 20
    # generations each island evolves alone between migrations
    epochs_between_migrations: int = 10
    total_generations: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.island_count < 1:
            raise ValueError("island_count must be >= 1")
        if self.per_island_population < 2 or self.per_island_offspring < 2:
            raise ValueError("per-island sizes must be >= 2")
        if self.epochs_between_migrations < 1:
            raise ValueError("epochs_between_migrations must be >= 1")

    @property
    def total_population(self) -> int:
        return self.island_count * self.per_island_population


def partition(members: Sequence[Solution], island_count: int,
              generation: int = 0, evaluations: int = 0) -> list[Population]:
    """Sort by (fitness, assignment) and cut into ``island_count`` contiguous equal blocks.

    The evaluation count is attributed to the first island so that sums
    over islands stay correct.
    """
    if island_count < 1:
        raise ValueError("island_count must be >= 1")
    if len(members) % island_count:
        raise ValueError(f"{len(members)} members do not split into {island_count} equal islands")
    ranked = sort_members(members)
    size = len(ranked) // island_count
    out = []
    for i in range(island_count):
        block = ranked[i * size:(i + 1) * size]
        out.append(Population(block, generation, diversity_cv(block),
                              evaluations if i == 0 else 0))
    return out


def migrate(islands: Sequence[Population]) -> list[Population]:
    """Combine all islands, sort by fitness, re-slice into blocks of the original sizes."""
    if not islands:
        raise ValueError("no islands to migrate")
    if len(islands) == 1:
        return list(islands)
    ranked = sort_members([m for isl in islands for m in isl.members])
    out, start = [], 0
    for isl in islands:
        block = ranked[start:start + len(isl.members)]
        start += len(block)
        out.append(replace(isl, members=block, diversity=diversity_cv(block)))
    return out


@dataclass
class IslandResult(GaResult):
    islands: list[Population] = field(default_factory=list)


def _evolve(args) -> list[Population]:
    """Advance one island ``steps`` generations; returns every intermediate population."""
    pop, pool, puzzle, config, island, steps = args
    out = []
    for _ in range(steps):
        pop = next_generation(pop, pool, puzzle, config, island)
        out.append(pop)
    return out


def _spent(islands: Sequence[Population], budget: int | None) -> bool:
    return budget is not None and sum(isl.evaluations for isl in islands) >= budget


def _global_row(islands: Sequence[Population], generation: int, migration: bool):
    members = [m for isl in islands for m in isl.members]
    return log_row(members, generation, sum(isl.evaluations for isl in islands), migration)


def run_multi_island(pool: Pool, puzzle: Puzzle, ga_config: GaConfig = GaConfig(),
                     island_config: IslandConfig = IslandConfig(), workers: int = 1,
                     time_limit: float | None = None,
                     max_evaluations: int | None = None) -> IslandResult:
    """Evolve ``island_count`` sub-populations with migration every ``epochs_between_migrations``.

    ``ga_config`` supplies the operator rates; population sizes, generation
    count and seed come from ``island_config``.  With one island this is
    exactly :func:`partysolve.evolution.run_ga` on the same seed.
    ``max_evaluations`` stops after the first generation whose summed
    evaluation count reaches it, whatever the worker count.
    """
    ic = island_config
    cfg = replace(ga_config, population_size=ic.per_island_population,
                  offspring_size=ic.per_island_offspring, generations=ic.total_generations,
                  rng_seed=ic.rng_seed)
    start = time.monotonic()
    init = init_population(pool, puzzle, replace(cfg, population_size=ic.total_population))
    islands = partition(init.members, ic.island_count, 0, init.evaluations)
    log = ConvergenceLog([_global_row(islands, 0, False)])
    truncated = False
    executor = ProcessPoolExecutor(workers) if workers > 1 and ic.island_count > 1 else None
    try:
        gen = 0
        spent = False
        while gen < ic.total_generations and not spent:
            # run up to the next migration point (or the end) without interaction
            steps = min(ic.epochs_between_migrations - gen % ic.epochs_between_migrations,
                        ic.total_generations - gen)
            if executor is None:
                # generation-major order so a time limit can stop between generations
                histories: list[list[Population]] = [[] for _ in islands]
                for _ in range(steps):
                    for i, isl in enumerate(islands):
                        cur = histories[i][-1] if histories[i] else isl
                        histories[i].append(next_generation(cur, pool, puzzle, cfg, i))
                    if _spent([h[-1] for h in histories], max_evaluations):
                        break
                    if time_limit is not None and time.monotonic() - start > time_limit:
                        break
            else:
                jobs = [(isl, pool, puzzle, cfg, i, steps) for i, isl in enumerate(islands)]
                histories = list(executor.map(_evolve, jobs))
            done = len(histories[0])
            snapshot = islands
            for k in range(done):
                gen += 1
                snapshot = [h[k] for h in histories]
                migrating = (ic.island_count > 1 and k == done - 1 and done == steps
                             and gen % ic.epochs_between_migrations == 0)
                if migrating:
                    snapshot = migrate(snapshot)
                log.append(_global_row(snapshot, gen, migrating))
                if _spent(snapshot, max_evaluations):
                    spent = True
                    break
            islands = snapshot
            if time_limit is not None and time.monotonic() - start > time_limit:
                truncated = gen < ic.total_generations
                break
    finally:
        if executor is not None:
            executor.shutdown()
    final = sort_members([m for isl in islands for m in isl.members])
    return IslandResult(final[0], log, final, truncated, [], islands)
