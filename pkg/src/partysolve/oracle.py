"""Exhaustive ground truth for tiny instances.

Every injective assignment of pool items to formation nodes is examined.
Linear requirements depend only on the selected set, so they are checked
once per selection; arrangements of a linear-infeasible selection are
counted as examined and rejected.  There is no other pruning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Sequence

from .domain import (Item, MaxCount, MaxPerValue, MinCount, MinDistinct, MinSum, Pool, Puzzle,
                     Solution, SolverError)
from .synergy import pair_weight

DEFAULT_MAX_ENUMERATION = 10**8


class InstanceTooLarge(SolverError, ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    feasible_count: int
    optimal_fitness: float | None
    optimal_solutions: tuple[Solution, ...]
    enumerated: int
    feasible_selections: int = 0


def assignment_count(m: int, n: int) -> int:
    return math.comb(m, n) * math.factorial(n) if n <= m else 0


def _linear_ok(puzzle: Puzzle, items: Sequence[Item]) -> bool:
    schema = puzzle.schema
    for r in puzzle.linear:
        vals = [it.values[schema.index(r.trait)] for it in items]
        if isinstance(r, MinSum):
            ok = sum(vals) >= r.bound
        elif isinstance(r, MinCount):
            ok = vals.count(r.value) >= r.bound
        elif isinstance(r, MaxCount):
            ok = vals.count(r.value) <= r.bound
        elif isinstance(r, MinDistinct):
            ok = len(set(vals)) >= r.bound
        elif isinstance(r, MaxPerValue):
            ok = all(vals.count(v) <= r.cap for v in set(vals))
        else:
            raise TypeError(r)
        if not ok:
            return False
    return True


def linear_feasible(puzzle: Puzzle, items: Sequence[Item]) -> bool:
    return _linear_ok(puzzle, items)


def enumerate_all(pool: Pool, puzzle: Puzzle, max_enumeration: int = DEFAULT_MAX_ENUMERATION,
                  keep: int = 64) -> OracleResult:
    """Count feasible assignments and find the cheapest ones (at most ``keep`` returned)."""
    n, m = puzzle.N, len(pool)
    total = assignment_count(m, n)
    if total > max_enumeration:
        raise InstanceTooLarge(f"{total} assignments exceed the limit of {max_enumeration}")
    kernel = puzzle.weight_kernel
    edges = puzzle.graph.edges
    threshold = puzzle.synergy_threshold
    perm_count = math.factorial(n)
    feasible = 0
    feasible_sel = 0
    best: float | None = None
    best_sols: list[Solution] = []
    enumerated = 0
    for sel in combinations(pool.items, n):
        enumerated += perm_count
        if not _linear_ok(puzzle, sel):
            continue
        w = [[pair_weight(kernel, a, b) for b in sel] for a in sel]
        price = math.fsum(it.price for it in sel)
        found = False
        for perm in permutations(range(n)):
            syn = math.fsum(w[perm[i]][perm[j]] for i, j in edges) / len(edges) if edges else 1.0
            if threshold is not None and syn < threshold:
                continue
            found = True
            feasible += 1
            if best is None or price < best:
                best = price
                best_sols = []
            if price == best and len(best_sols) < keep:
                best_sols.append(Solution(tuple(sel[k].id for k in perm), syn, price))
        feasible_sel += found
    return OracleResult(feasible, best, tuple(sorted(best_sols, key=lambda s: s.assignment)),
                        enumerated, feasible_sel)


def feasible_assignments(pool: Pool, puzzle: Puzzle,
                         max_enumeration: int = DEFAULT_MAX_ENUMERATION) -> list[tuple[str, ...]]:
    """Every feasible assignment, as item-id tuples in node order."""
    n = puzzle.N
    if assignment_count(len(pool), n) > max_enumeration:
        raise InstanceTooLarge("instance too large to list")
    kernel, edges, thr = puzzle.weight_kernel, puzzle.graph.edges, puzzle.synergy_threshold
    out = []
    for sel in combinations(pool.items, n):
        if not _linear_ok(puzzle, sel):
            continue
        for perm in permutations(sel):
            syn = (math.fsum(pair_weight(kernel, perm[i], perm[j]) for i, j in edges) / len(edges)
                   if edges else 1.0)
            if thr is None or syn >= thr:
                out.append(tuple(it.id for it in perm))
    return out


def linear_completions(pool: Pool, puzzle: Puzzle, placed: Sequence[str],
                       banned: Sequence[str] = ()) -> list[frozenset[str]]:
    """All item sets that fill the remaining nodes and make the selection linear-feasible."""
    fixed = [pool[i] for i in placed]
    skip = set(placed) | set(banned)
    rest = [it for it in pool.items if it.id not in skip]
    k = puzzle.N - len(fixed)
    out = []
    for extra in combinations(rest, k):
        if _linear_ok(puzzle, fixed + list(extra)):
            out.append(frozenset(it.id for it in extra))
    return out
