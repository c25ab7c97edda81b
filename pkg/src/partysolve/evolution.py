"""Hybrid graph-based GA over feasible chromosomes.

A chromosome is a complete feasible assignment.  Offspring are built by
per-node uniform crossover (genes never move between nodes), random removal
mutation, and healing: the constructor refills the empty nodes, and if it
cannot, the offspring is replaced by a freshly constructed solution.  Every
population member is therefore feasible.  Fitness is total price, minimised.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .constructor import (ConstructorConfig, Infeasible, Problem, compile_problem, complete,
                          construct)
from .domain import Pool, Puzzle, Solution, SolverError
from .persistence import ConvergenceLog, LogRow
from .rng import derive_seed, make_rng

# stream tags, mixed into derived seeds
_INIT, _OFFSPRING, _REFRESH = 1, 2, 3


class InitializationBudgetExceeded(SolverError, RuntimeError):
    def __init__(self, message: str, diagnostics: Infeasible | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    offspring_size: int = 100
    crossover_rate: float = 0.5
    mutation_rate: float = 0.2
    generations: int = 100
    diversity_threshold: float = 0.05
    refresh_fraction: float = 1 / 3
    elitism: bool = True
    rng_seed: int = 0
    # constructor restarts per init/heal/refresh call
    max_iterations: int = 10
    # construction calls allowed per requested member during initialisation
    init_budget: int = 30

    def __post_init__(self):
        if self.population_size < 2 or self.offspring_size < 2:
            raise ValueError("population and offspring sizes must be >= 2")
        for name in ("crossover_rate", "mutation_rate", "refresh_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass(frozen=True)
class Population:
    members: tuple[Solution, ...]
    generation: int = 0
    # CV of the selected survivors, i.e. the value that drives refreshment
    diversity: float = 0.0
    evaluations: int = 0
    refreshed: int = 0

    def fitness(self) -> np.ndarray:
        return np.array([m.fitness for m in self.members])

    @property
    def best(self) -> Solution:
        return min(self.members, key=lambda s: s.key)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class PartialSolution:
    """Node slots holding an item id or None, plus items barred from refilling."""

    slots: tuple[str | None, ...]
    banned: frozenset[str] = frozenset()

    @property
    def empty_nodes(self) -> list[int]:
        return [i for i, s in enumerate(self.slots) if s is None]


@dataclass(frozen=True)
class Rejected:
    best_synergy_seen: float | None = None


def sort_members(members: Sequence[Solution]) -> tuple[Solution, ...]:
    return tuple(sorted(members, key=lambda s: s.key))


def diversity_cv(population: Population | Sequence[Solution] | Sequence[float]) -> float:
    """Population standard deviation of fitness over mean fitness (0 when the mean is 0)."""
    if isinstance(population, Population):
        f = population.fitness()
    else:
        seq = list(population)
        f = np.array([s.fitness if isinstance(s, Solution) else float(s) for s in seq])
    if len(f) == 0:
        return 0.0
    mu = float(f.mean())
    if mu == 0.0:
        return 0.0
    return float(f.std() / mu)


def init_population(pool: Pool, puzzle: Puzzle, config: GaConfig = GaConfig()) -> Population:
    """``population_size`` feasible members, each from its own constructor seed."""
    problem = compile_problem(pool, puzzle)
    found: list[Solution] = []
    last: Infeasible | None = None
    tries = 0
    budget = config.population_size * config.init_budget
    while len(found) < config.population_size and tries < budget:
        seed = derive_seed(config.rng_seed, _INIT, tries)
        tries += 1
        out = _fresh(problem, seed, config.max_iterations)
        if isinstance(out, Solution):
            found.append(out)
        else:
            last = out
    if not found:
        raise InitializationBudgetExceeded(
            f"no feasible solution in {tries} constructions; the puzzle is likely infeasible",
            last)
    # budget ran out: repeat what was found (duplicates are allowed)
    i = 0
    while len(found) < config.population_size:
        found.append(found[i])
        i += 1
    return Population(sort_members(found), 0, diversity_cv(found), tries)


def _fresh(problem: Problem, seed: int, max_iterations: int) -> Solution | Infeasible:
    out = complete(problem, [-1] * problem.N, rng_seed=seed, max_iterations=max_iterations,
                   prune=True)
    if isinstance(out, Infeasible):
        return out
    return problem.solution(*out)


def _rank_weights(fitness: np.ndarray) -> np.ndarray:
    """Linear rank weights (best = n, worst = 1) with tied members sharing their mean rank."""
    n = len(fitness)
    order = np.argsort(fitness, kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1)
    _, inv = np.unique(fitness, return_inverse=True)
    avg = (np.bincount(inv, ranks) / np.bincount(inv))[inv]
    return n + 1 - avg


def _pick(weights: np.ndarray, rng: np.random.Generator, exclude: int = -1) -> int:
    w = weights
    if exclude >= 0:
        w = weights.copy()
        w[exclude] = 0.0
    cum = np.cumsum(w)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), len(w) - 1))


def rank_select(population: Population | Sequence[Solution],
                rng: np.random.Generator) -> tuple[Solution, Solution]:
    members = population.members if isinstance(population, Population) else tuple(population)
    if len(members) < 2:
        raise ValueError("rank selection needs at least two members")
    w = _rank_weights(np.array([m.fitness for m in members]))
    a = _pick(w, rng)
    b = _pick(w, rng, exclude=a)
    return members[a], members[b]


def uniform_crossover(parent_a: Solution, parent_b: Solution, rng: np.random.Generator,
                      rate: float = 0.5) -> PartialSolution:
    """Per node, take parent_a's item with probability ``rate``, else parent_b's.

    A donor item already placed falls back to the other parent; if both are
    taken the node stays empty for healing.
    """
    if len(parent_a.assignment) != len(parent_b.assignment):
        raise ValueError("parents cover different graphs")
    used: set[str] = set()
    slots: list[str | None] = []
    coins = rng.random(len(parent_a.assignment))
    for ia, ib, c in zip(parent_a.assignment, parent_b.assignment, coins):
        first, second = (ia, ib) if c < rate else (ib, ia)
        if first not in used:
            pick: str | None = first
        elif second not in used:
            pick = second
        else:
            pick = None
        if pick is not None:
            used.add(pick)
        slots.append(pick)
    return PartialSolution(tuple(slots))


def mutate(solution: Solution | PartialSolution, rng: np.random.Generator,
           rate: float = 0.2) -> PartialSolution:
    """Visit nodes in random order, dropping each item with probability ``rate``.

    Dropped items are banned from the refill of this offspring.
    """
    if isinstance(solution, Solution):
        slots: list[str | None] = list(solution.assignment)
        banned: set[str] = set()
    else:
        slots = list(solution.slots)
        banned = set(solution.banned)
    order = rng.permutation(len(slots))
    coins = rng.random(len(slots))
    for node, c in zip(order, coins):
        if slots[node] is not None and c < rate:
            banned.add(slots[node])
            slots[node] = None
    return PartialSolution(tuple(slots), frozenset(banned))


def heal(partial: PartialSolution, pool: Pool, puzzle: Puzzle,
         config: ConstructorConfig = ConstructorConfig()) -> Solution | Rejected:
    """Refill empty nodes with the guided constructor; Rejected when no feasible fill is found."""
    problem = compile_problem(pool, puzzle)
    return _heal(problem, partial, config.rng_seed, config.max_iterations)


def _heal(problem: Problem, partial: PartialSolution, seed: int,
          max_iterations: int) -> Solution | Rejected:
    index = problem.pool.index_of
    slots = [-1 if s is None else index[s] for s in partial.slots]
    placed = [s for s in slots if s >= 0]
    if len(set(placed)) != len(placed):
        raise ValueError("partial solution repeats an item")
    banned = [index[b] for b in partial.banned if b in index]
    out = complete(problem, slots, banned, rng_seed=seed, max_iterations=max_iterations,
                   prune=True)
    if isinstance(out, Infeasible):
        return Rejected(out.best_synergy_seen)
    return problem.solution(*out)


def _select(merged: Sequence[Solution], size: int) -> list[Solution]:
    """Cheapest ``size`` members, preferring distinct assignments."""
    ranked = sort_members(merged)
    out: list[Solution] = []
    seen: set[tuple[str, ...]] = set()
    spare: list[Solution] = []
    for s in ranked:
        if s.assignment in seen:
            spare.append(s)
            continue
        seen.add(s.assignment)
        out.append(s)
        if len(out) == size:
            return out
    out.extend(spare[:size - len(out)])
    return sorted(out, key=lambda s: s.key)


def next_generation(population: Population, pool: Pool, puzzle: Puzzle,
                    config: GaConfig = GaConfig(), island: int = 0) -> Population:
    """Breed offspring, keep the best ``population_size``, refresh a third if diversity collapsed.

    Offspring ``o`` of generation ``g`` draws from the stream keyed by
    ``(rng_seed, island, g, o)``, so results do not depend on evaluation order.
    """
    problem = compile_problem(pool, puzzle)
    gen = population.generation + 1
    members = population.members
    weights = _rank_weights(np.array([m.fitness for m in members]))
    evaluations = population.evaluations
    offspring: list[Solution] = []
    for o in range(config.offspring_size):
        rng = make_rng(derive_seed(config.rng_seed, island, gen, _OFFSPRING, o))
        a = _pick(weights, rng)
        b = _pick(weights, rng, exclude=a)
        child = uniform_crossover(members[a], members[b], rng, config.crossover_rate)
        child = mutate(child, rng, config.mutation_rate)
        healed = _heal(problem, child, int(rng.integers(1 << 62)), config.max_iterations)
        evaluations += 1
        if isinstance(healed, Rejected):
            healed = _fresh(problem, int(rng.integers(1 << 62)), config.max_iterations)
            evaluations += 1
            if isinstance(healed, Infeasible):
                continue
        offspring.append(healed)

    pool_size = config.population_size
    if config.elitism:
        survivors = _select(list(members) + offspring, pool_size)
    else:
        survivors = _select(offspring, pool_size) if len(offspring) >= pool_size else \
            _select(list(members) + offspring, pool_size)
    cv = diversity_cv(survivors)
    refreshed = 0
    if cv < config.diversity_threshold and pool_size > 1:
        rng = make_rng(derive_seed(config.rng_seed, island, gen, _REFRESH))
        n_rep = min(int(math.floor(pool_size * config.refresh_fraction)), pool_size - 1)
        # index 0 is the elite and is never replaced
        victims = rng.choice(np.arange(1, pool_size), size=n_rep, replace=False)
        for v in sorted(int(x) for x in victims):
            # retry like init_population so a refresh only falls short on near-infeasible puzzles
            for _ in range(config.init_budget):
                fresh = _fresh(problem, int(rng.integers(1 << 62)), config.max_iterations)
                evaluations += 1
                if isinstance(fresh, Solution):
                    survivors[v] = fresh
                    refreshed += 1
                    break
    return Population(sort_members(survivors), gen, cv, evaluations, refreshed)


def log_row(members: Sequence[Solution], generation: int, evaluations: int,
            migration: bool = False) -> LogRow:
    f = np.array([m.fitness for m in members])
    return LogRow(generation, float(f.min()), float(np.median(f)), diversity_cv(f.tolist()),
                  evaluations, migration)


@dataclass
class GaResult:
    best: Solution
    log: ConvergenceLog
    final: tuple[Solution, ...]
    truncated: bool = False
    history: list[Population] = field(default_factory=list)


def run_ga(pool: Pool, puzzle: Puzzle, config: GaConfig = GaConfig(),
           time_limit: float | None = None, keep_history: bool = False,
           on_generation: Callable[[Population], None] | None = None,
           max_evaluations: int | None = None) -> GaResult:
    """Single-population ("vanilla") GA for ``config.generations`` generations.

    Stops early after the generation in which ``max_evaluations`` is reached
    (a deterministic budget) or, as a soft cap, once ``time_limit`` seconds
    have passed; the latter marks the result as truncated.
    """
    start = time.monotonic()
    pop = init_population(pool, puzzle, config)
    log = ConvergenceLog([log_row(pop.members, 0, pop.evaluations)])
    history = [pop] if keep_history else []
    truncated = False
    for _ in range(config.generations):
        pop = next_generation(pop, pool, puzzle, config)
        log.append(log_row(pop.members, pop.generation, pop.evaluations))
        if keep_history:
            history.append(pop)
        if on_generation is not None:
            on_generation(pop)
        if max_evaluations is not None and pop.evaluations >= max_evaluations:
            break
        if time_limit is not None and time.monotonic() - start > time_limit:
            truncated = pop.generation < config.generations
            break
    return GaResult(pop.best, log, pop.members, truncated, history)


def with_sizes(config: GaConfig, population_size: int, offspring_size: int) -> GaConfig:
    return replace(config, population_size=population_size, offspring_size=offspring_size)
