"""Guided randomized construction of a single feasible solution.

Each attempt visits the formation nodes in a fresh random order.  At every
node the candidate pool is narrowed by the look-ahead filter and the item
with the highest pair-weight sum against already placed neighbours is taken
(uniform tie-break; a uniform pick when no neighbour is placed yet).  An
emptied pool or a final synergy below threshold abandons the attempt and a
new path is drawn, up to ``max_iterations`` times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .constraints import LinearReqs, OpCounter
from .domain import FormationGraph, Pool, Puzzle, Solution, SolverError
from .rng import make_rng, next_seed


class PoolTooSmall(SolverError, ValueError):
    pass


@dataclass(frozen=True)
class ConstructorConfig:
    max_iterations: int = 10
    rng_seed: int = 0
    restart_on_empty_pool: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Infeasible:
    attempts: int
    best_synergy_seen: float | None
    empty_pool_restarts: int = 0


@dataclass(frozen=True)
class Attempt:
    """Outcome of one construction path, feasible or not."""

    solution: Solution | None
    synergy: float | None


class Problem:
    """A (pool, puzzle) pair pre-compiled for the solver's inner loops."""

    def __init__(self, pool: Pool, puzzle: Puzzle):
        self.pool = pool
        self.puzzle = puzzle
        self.reqs = LinearReqs(puzzle, pool)
        ck = puzzle.weight_kernel.compile(pool)
        self.kargs = (pool.codes, pool.nums, ck.kinds, ck.weights, ck.scales, ck.tables)
        self.adj = puzzle.graph.adjacency()
        self.indptr = np.cumsum([0] + [len(a) for a in self.adj]).astype(np.int64)
        self.indices = np.array([j for a in self.adj for j in a], dtype=np.int64)
        self.N = puzzle.N
        self.threshold = puzzle.synergy_threshold
        edges = puzzle.graph.edges
        self.edge_a = np.array([a for a, _ in edges], dtype=np.int64)
        self.edge_b = np.array([b for _, b in edges], dtype=np.int64)
        self.ids = tuple(it.id for it in pool.items)

    def synergy(self, slots: Sequence[int]) -> float:
        if len(self.edge_a) == 0:
            return 1.0
        s = np.asarray(slots, dtype=np.int64)
        w = kernels.pair_weights(s[self.edge_a], s[self.edge_b], *self.kargs)
        return math.fsum(w.tolist()) / len(self.edge_a)

    def solution(self, slots: Sequence[int], synergy: float | None = None) -> Solution:
        if synergy is None:
            synergy = self.synergy(slots)
        prices = self.pool.prices
        return Solution(tuple(self.ids[i] for i in slots), synergy,
                        math.fsum(float(prices[i]) for i in slots))

    def slots_of(self, solution: Solution) -> tuple[int, ...]:
        idx = self.pool.index_of
        return tuple(idx[i] for i in solution.assignment)

    def meets_threshold(self, synergy: float) -> bool:
        return self.threshold is None or synergy >= self.threshold


@lru_cache(maxsize=16)
def compile_problem(pool: Pool, puzzle: Puzzle) -> Problem:
    return Problem(pool, puzzle)


def random_traversal(graph: FormationGraph | int, rng: np.random.Generator) -> list[int]:
    n = graph if isinstance(graph, int) else graph.node_count
    return rng.permutation(n).tolist()


class _Pruned(Exception):
    pass


def _closed_weight(problem: Problem, slots: Sequence[int]) -> tuple[float, int]:
    """Pair-weight sum and count of edges whose both ends are already filled."""
    s = np.asarray(slots, dtype=np.int64)
    both = (s[problem.edge_a] >= 0) & (s[problem.edge_b] >= 0)
    if not both.any():
        return 0.0, 0
    w = kernels.pair_weights(s[problem.edge_a[both]], s[problem.edge_b[both]], *problem.kargs)
    return math.fsum(w.tolist()), int(both.sum())


# slack on the synergy upper bound so that rounding can never prune a feasible path
_BOUND_SLACK = 1e-9


def _build(problem: Problem, slots: list[int], banned: Sequence[int],
           rng: np.random.Generator, guided: bool, counter: OpCounter | None,
           prune: bool = False):
    """Fill the empty (-1) entries of ``slots`` in place along a random path.

    Returns False when the filtered pool empties.  With ``prune`` (guided
    only) the path is also abandoned as soon as even perfect weights on the
    still-open edges could not lift synergy to the threshold; such a path
    would fail the threshold check anyway, so outcomes are unchanged.
    The rng supplies the traversal order and one uniform draw per step.
    """
    reqs = problem.reqs
    tallies = reqs.tally_arrays()
    available = np.ones(len(problem.pool), dtype=np.uint8)
    for s in slots:
        if s >= 0:
            reqs.add_inplace(tallies, s)
            available[s] = 0
    if len(banned):
        available[np.asarray(banned, dtype=np.int64)] = 0
    empty = np.array([i for i, s in enumerate(slots) if s < 0], dtype=np.int64)
    order = empty[rng.permutation(len(empty))]
    u = rng.random(len(order))
    n_edges = len(problem.edge_a)
    prune = prune and guided and problem.threshold is not None and n_edges > 0
    closed_w, closed_n, target = 0.0, 0, 0.0
    if prune:
        closed_w, closed_n = _closed_weight(problem, slots)
        target = problem.threshold * n_edges - _BOUND_SLACK
        if closed_w + (n_edges - closed_n) < target:
            raise _Pruned
    work = np.asarray(slots, dtype=np.int64).copy()
    status, fchecks, schecks = kernels.build_path(
        work, order, available, u, problem.indptr, problem.indices, guided, prune, target,
        closed_w, closed_n, n_edges, reqs.kind_arr, reqs.cols, reqs.vcode, reqs.bounds,
        reqs.nvals, tallies.sums, tallies.cnts, tallies.vc, *problem.kargs)
    if counter is not None:
        counter.filter_checks += fchecks
        counter.score_checks += schecks
    slots[:] = work.tolist()
    if status < 0:
        raise _Pruned
    if status == 0:
        return False
    return reqs.satisfied(reqs.tallies_of(slots))


def complete(problem: Problem, slots: Sequence[int], banned: Sequence[int] = (), *,
             rng_seed: int, max_iterations: int, guided: bool = True,
             counter: OpCounter | None = None, prune: bool = False):
    """Fill the empty nodes of ``slots`` until synergy holds or the budget runs out.

    Returns ``(slots, synergy)`` on success, else an :class:`Infeasible`.
    Iteration ``i`` draws from its own stream seeded by the ``i``-th link of
    the seed chain starting at ``rng_seed``.  ``prune`` skips hopeless paths
    early; the returned solution is the same, but ``best_synergy_seen`` then
    only covers paths that ran to the end.
    """
    best = None
    emptied = 0
    seed = rng_seed
    has_gap = any(s < 0 for s in slots)
    for it in range(max_iterations):
        work = list(slots)
        try:
            built = _build(problem, work, banned, make_rng(seed), guided, counter, prune)
        except _Pruned:
            built = False
        else:
            if built:
                syn = problem.synergy(work)
                if problem.meets_threshold(syn):
                    return tuple(work), syn
                best = syn if best is None else max(best, syn)
            else:
                emptied += 1
        if not has_gap:
            return Infeasible(it + 1, best, emptied)
        seed = next_seed(seed)
    return Infeasible(max_iterations, best, emptied)


def construct(pool: Pool, puzzle: Puzzle, config: ConstructorConfig = ConstructorConfig(),
              counter: OpCounter | None = None) -> Solution | Infeasible:
    if len(pool) < puzzle.N:
        raise PoolTooSmall(f"pool has {len(pool)} items, formation needs {puzzle.N}")
    problem = compile_problem(pool, puzzle)
    out = complete(problem, [-1] * problem.N, rng_seed=config.rng_seed,
                   max_iterations=config.max_iterations, counter=counter)
    if isinstance(out, Infeasible):
        return out
    return problem.solution(*out)


def attempt(pool: Pool, puzzle: Puzzle, seed: int, guided: bool = True) -> Attempt:
    """One construction path with no synergy retry; used for benchmarking."""
    if len(pool) < puzzle.N:
        raise PoolTooSmall(f"pool has {len(pool)} items, formation needs {puzzle.N}")
    problem = compile_problem(pool, puzzle)
    slots = [-1] * problem.N
    if not _build(problem, slots, (), make_rng(seed), guided, None):
        return Attempt(None, None)
    sol = problem.solution(slots)
    return Attempt(sol, sol.synergy)


def construct_unguided(pool: Pool, puzzle: Puzzle,
                       config: ConstructorConfig = ConstructorConfig()) -> Attempt:
    return attempt(pool, puzzle, config.rng_seed, guided=False)
