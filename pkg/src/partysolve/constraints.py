"""Running tallies over partial assignments and look-ahead candidate filtering.

Every filter rule removes only items that cannot appear in *any* remaining
slot of a linear-feasible completion, so filtering is sound and can be
iterated.  ``filter_pool`` iterates the rules to a fixpoint, which makes it
idempotent.  An empty result is the signal to abandon the current path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import kernels
from .domain import (Item, MaxCount, MaxPerValue, MinCount, MinDistinct, MinSum, Pool,
                     Puzzle, SolverError)


class DuplicateItem(SolverError, ValueError):
    pass


class NodeAlreadyVisited(SolverError, ValueError):
    pass


@dataclass
class OpCounter:
    """Item-requirement checks performed by the filter and the scorer."""

    filter_checks: int = 0
    score_checks: int = 0

    @property
    def total(self) -> int:
        return self.filter_checks + self.score_checks


_SUM, _MINC, _MAXC, _DIST, _CAP = range(5)
_KIND = {MinSum: _SUM, MinCount: _MINC, MaxCount: _MAXC, MinDistinct: _DIST, MaxPerValue: _CAP}


class LinearReqs:
    """Linear requirements of a puzzle, pre-resolved against one pool.

    Each requirement becomes one row of small parallel arrays (kind tag,
    trait column, counted value code, bound) consumed by the filter kernel.
    """

    def __init__(self, puzzle: Puzzle, pool: Pool):
        self.pool = pool
        self.node_count = puzzle.N
        self.reqs = puzzle.linear
        self.kinds = tuple(_KIND[type(r)] for r in self.reqs)
        R = len(self.reqs)
        self.cols = np.zeros(R, dtype=np.int64)
        self.vcode = np.full(R, -1, dtype=np.int64)
        self.bounds = np.zeros(R, dtype=np.float64)
        self.nvals = np.zeros(R, dtype=np.int64)
        for r, req in enumerate(self.reqs):
            j = pool.schema.index(req.trait)
            self.cols[r] = j
            self.nvals[r] = len(pool.vocab[j])
            if isinstance(req, (MinCount, MaxCount)):
                self.vcode[r] = pool.code(req.trait, req.value)
            self.bounds[r] = req.cap if isinstance(req, MaxPerValue) else req.bound
        self.kind_arr = np.array(self.kinds, dtype=np.int64)
        self.vmax = max([1] + [len(v) for v in pool.vocab])

    # -- tuple tallies (hashable, used by PartialState) --------------------
    def empty_tallies(self) -> tuple:
        out = []
        for r, kind in enumerate(self.kinds):
            if kind == _SUM:
                out.append(0.0)
            elif kind == _MINC or kind == _MAXC:
                out.append(0)
            else:
                out.append((0,) * int(self.nvals[r]))
        return tuple(out)

    def add(self, tallies: tuple, idx: int) -> tuple:
        codes, nums = self.pool.codes, self.pool.nums
        out = []
        for r, (kind, t) in enumerate(zip(self.kinds, tallies)):
            col = self.cols[r]
            if kind == _SUM:
                out.append(t + float(nums[idx, col]))
            elif kind == _MINC or kind == _MAXC:
                out.append(t + int(codes[idx, col] == self.vcode[r]))
            else:
                c = int(codes[idx, col])
                out.append(t[:c] + (t[c] + 1,) + t[c + 1:])
        return tuple(out)

    def tallies_of(self, items: Sequence[int]) -> tuple:
        t = self.empty_tallies()
        for idx in items:
            t = self.add(t, idx)
        return t

    def satisfied(self, tallies: tuple) -> bool:
        for r, t in zip(self.reqs, tallies):
            if isinstance(r, MinSum) and not t >= r.bound:
                return False
            if isinstance(r, MinCount) and not t >= r.bound:
                return False
            if isinstance(r, MaxCount) and not t <= r.bound:
                return False
            if isinstance(r, MinDistinct) and not sum(1 for c in t if c) >= r.bound:
                return False
            if isinstance(r, MaxPerValue) and not max(t, default=0) <= r.cap:
                return False
        return True

    # -- array tallies (mutable, used by the kernels) ----------------------
    def tally_arrays(self, tallies: tuple | None = None) -> TallyArrays:
        R = len(self.kinds)
        arr = TallyArrays(np.zeros(R, dtype=np.float64), np.zeros(R, dtype=np.int64),
                          np.zeros((R, self.vmax), dtype=np.int64))
        if tallies is not None:
            for r, (kind, t) in enumerate(zip(self.kinds, tallies)):
                if kind == _SUM:
                    arr.sums[r] = t
                elif kind == _MINC or kind == _MAXC:
                    arr.cnts[r] = t
                else:
                    arr.vc[r, :len(t)] = t
        return arr

    def add_inplace(self, arr: TallyArrays, idx: int) -> None:
        codes, nums = self.pool.codes, self.pool.nums
        for r, kind in enumerate(self.kinds):
            col = self.cols[r]
            if kind == _SUM:
                arr.sums[r] += nums[idx, col]
            elif kind == _MINC or kind == _MAXC:
                arr.cnts[r] += codes[idx, col] == self.vcode[r]
            else:
                arr.vc[r, codes[idx, col]] += 1

    def filter(self, cands: np.ndarray, K: int, arr: TallyArrays,
               counter: OpCounter | None = None) -> np.ndarray:
        out, checks = kernels.filter_candidates(
            cands, K, self.kind_arr, self.cols, self.vcode, self.bounds, self.nvals,
            arr.sums, arr.cnts, arr.vc, self.pool.codes, self.pool.nums)
        if counter is not None:
            counter.filter_checks += checks
        return out


@dataclass
class TallyArrays:
    sums: np.ndarray
    cnts: np.ndarray
    vc: np.ndarray


@dataclass(frozen=True)
class PartialState:
    """Visited nodes, their items (pool indices) and per-requirement tallies."""

    reqs: LinearReqs = field(compare=False, repr=False)
    slots: tuple[int, ...]
    tallies: tuple

    @classmethod
    def empty(cls, reqs: LinearReqs) -> PartialState:
        return cls(reqs, (-1,) * reqs.node_count, reqs.empty_tallies())

    @classmethod
    def from_slots(cls, reqs: LinearReqs, slots: Sequence[int | None]) -> PartialState:
        state = cls.empty(reqs)
        for node, idx in enumerate(slots):
            if idx is not None and idx >= 0:
                state = update(state, node, idx)
        return state

    @property
    def L(self) -> int:
        return self.reqs.node_count - self.slots.count(-1)

    @property
    def remaining(self) -> int:
        return self.reqs.node_count - self.L

    @property
    def visited(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.slots) if s >= 0)

    @property
    def assigned(self) -> dict[int, int]:
        return {i: s for i, s in enumerate(self.slots) if s >= 0}

    @property
    def used(self) -> frozenset[int]:
        return frozenset(s for s in self.slots if s >= 0)


ItemRef = Union[int, str, Item]


def _index(reqs: LinearReqs, item: ItemRef) -> int:
    if isinstance(item, Item):
        return reqs.pool.index_of[item.id]
    if isinstance(item, str):
        return reqs.pool.index_of[item]
    return int(item)


def update(state: PartialState, node: int, item: ItemRef) -> PartialState:
    idx = _index(state.reqs, item)
    if state.slots[node] >= 0:
        raise NodeAlreadyVisited(f"node {node} already holds an item")
    if idx in state.slots:
        raise DuplicateItem(f"item {state.reqs.pool.items[idx].id!r} already placed")
    slots = state.slots[:node] + (idx,) + state.slots[node + 1:]
    return PartialState(state.reqs, slots, state.reqs.add(state.tallies, idx))


def filter_pool(cands: np.ndarray, state: PartialState,
                counter: OpCounter | None = None) -> np.ndarray:
    """Restrict candidate pool indices to items usable in some feasible completion.

    ``cands`` must already exclude placed items.  Returns a (possibly empty)
    index array in the input order.
    """
    K = state.remaining
    if K <= 0:
        raise ValueError("all nodes are already visited")
    reqs = state.reqs
    return reqs.filter(np.asarray(cands, dtype=np.int64), K, reqs.tally_arrays(state.tallies),
                       counter)
