"""Core data model: trait schema, items, formation graph, requirements, solutions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .synergy import WeightKernel, default_kernel, solution_synergy

MAX_TRAITS = 8
SOFT_MAX_LINEAR = 6

CATEGORICAL = "categorical"
NUMERIC = "numeric"


class SolverError(Exception):
    """Base class for errors raised by this package."""


class UnknownItemId(SolverError, KeyError):
    pass


class SchemaMismatch(SolverError, ValueError):
    pass


@dataclass(frozen=True)
class TraitDef:
    name: str
    kind: str = CATEGORICAL
    scale: float = 1.0
    # declared category vocabulary; empty means "derive from the pool"
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise SchemaMismatch(f"trait {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == NUMERIC and not self.scale > 0:
            raise SchemaMismatch(f"trait {self.name!r}: scale must be positive")


@dataclass(frozen=True)
class TraitSchema:
    traits: tuple[TraitDef, ...]

    def __post_init__(self):
        if not 1 <= len(self.traits) <= MAX_TRAITS:
            raise SchemaMismatch(f"schema needs 1..{MAX_TRAITS} traits, got {len(self.traits)}")
        names = [t.name for t in self.traits]
        if len(set(names)) != len(names):
            raise SchemaMismatch("trait names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.traits)

    def index(self, name: str) -> int:
        for i, t in enumerate(self.traits):
            if t.name == name:
                return i
        raise SchemaMismatch(f"unknown trait {name!r}")

    def trait(self, name: str) -> TraitDef:
        return self.traits[self.index(name)]

    def __len__(self):
        return len(self.traits)


TraitValue = Union[str, int]


@dataclass(frozen=True)
class Item:
    id: str
    values: tuple[TraitValue, ...]
    price: float

    def value(self, schema: TraitSchema, trait: str) -> TraitValue:
        return self.values[schema.index(trait)]


def check_item(item: Item, schema: TraitSchema) -> None:
    if len(item.values) != len(schema):
        raise SchemaMismatch(
            f"item {item.id!r}: {len(item.values)} values for {len(schema)} traits")
    if not (item.price >= 0 and math.isfinite(item.price)):
        raise SchemaMismatch(f"item {item.id!r}: price must be a finite non-negative number")
    for t, v in zip(schema.traits, item.values):
        if t.kind == NUMERIC:
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise SchemaMismatch(
                    f"item {item.id!r}: trait {t.name!r} needs a non-negative integer, got {v!r}")
        else:
            if not isinstance(v, str):
                raise SchemaMismatch(
                    f"item {item.id!r}: trait {t.name!r} needs a symbol, got {v!r}")
            if t.values and v not in t.values:
                raise SchemaMismatch(
                    f"item {item.id!r}: {v!r} is not a declared value of {t.name!r}")


class Pool:
    """An immutable, id-addressable item collection with array views for the solver.

    ``codes[m, p]`` holds the category index of item ``m`` for categorical
    trait ``p`` (0 for numeric traits) and ``nums[m, p]`` the numeric value
    (0.0 for categorical traits).
    """

    def __init__(self, schema: TraitSchema, items: Sequence[Item]):
        self.schema = schema
        self.items: tuple[Item, ...] = tuple(items)
        self.index_of: dict[str, int] = {}
        for i, item in enumerate(self.items):
            check_item(item, schema)
            if item.id in self.index_of:
                raise SchemaMismatch(f"duplicate item id {item.id!r}")
            self.index_of[item.id] = i

        m, p = len(self.items), len(schema)
        self.vocab: list[tuple[str, ...]] = []
        for j, t in enumerate(schema.traits):
            if t.kind == CATEGORICAL:
                seen = t.values or tuple(sorted({it.values[j] for it in self.items}))
                self.vocab.append(tuple(seen))
            else:
                self.vocab.append(())
        self.codes = np.zeros((m, p), dtype=np.int64)
        self.nums = np.zeros((m, p), dtype=np.float64)
        for j, t in enumerate(schema.traits):
            if t.kind == CATEGORICAL:
                lookup = {v: c for c, v in enumerate(self.vocab[j])}
                self.codes[:, j] = [lookup[it.values[j]] for it in self.items]
            else:
                self.nums[:, j] = [it.values[j] for it in self.items]
        self.prices = np.array([it.price for it in self.items], dtype=np.float64)
        for arr in (self.codes, self.nums, self.prices):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, item_id: str) -> Item:
        try:
            return self.items[self.index_of[item_id]]
        except KeyError:
            raise UnknownItemId(item_id) from None

    def __eq__(self, other):
        return isinstance(other, Pool) and self.schema == other.schema and self.items == other.items

    __hash__ = object.__hash__

    def code(self, trait: str, value: TraitValue) -> int:
        """Category index of ``value`` for ``trait``; -1 when no item carries it."""
        j = self.schema.index(trait)
        try:
            return self.vocab[j].index(value)
        except ValueError:
            return -1

    def __repr__(self):
        return f"Pool(M={len(self)}, traits={self.schema.names})"


@dataclass(frozen=True)
class FormationGraph:
    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = sorted({(min(a, b), max(a, b)) for a, b in self.edges})
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]]) -> FormationGraph:
        return cls(node_count, tuple((int(a), int(b)) for a, b in edges))

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self.adjacency()[node]

    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj = self.__dict__.get("_adj")
        if adj is None:
            lists: list[list[int]] = [[] for _ in range(self.node_count)]
            for a, b in self.edges:
                if 0 <= a < self.node_count and 0 <= b < self.node_count and a != b:
                    lists[a].append(b)
                    lists[b].append(a)
            adj = tuple(tuple(sorted(x)) for x in lists)
            object.__setattr__(self, "_adj", adj)
        return adj

    def is_connected(self) -> bool:
        if self.node_count <= 0:
            return False
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.node_count


# Requirements. Linear ones depend only on which items are selected.

@dataclass(frozen=True)
class MinSum:
    trait: str
    bound: float


@dataclass(frozen=True)
class MinCount:
    trait: str
    value: TraitValue
    bound: int


@dataclass(frozen=True)
class MaxCount:
    trait: str
    value: TraitValue
    bound: int


@dataclass(frozen=True)
class MinDistinct:
    trait: str
    bound: int


@dataclass(frozen=True)
class MaxPerValue:
    trait: str
    cap: int


@dataclass(frozen=True)
class SynergyAtLeast:
    threshold: float


Requirement = Union[MinSum, MinCount, MaxCount, MinDistinct, MaxPerValue, SynergyAtLeast]
LINEAR_TYPES = (MinSum, MinCount, MaxCount, MinDistinct, MaxPerValue)


def describe(req: Requirement) -> str:
    if isinstance(req, MinSum):
        return f"sum({req.trait}) >= {req.bound:g}"
    if isinstance(req, MinCount):
        return f"count({req.trait}={req.value}) >= {req.bound}"
    if isinstance(req, MaxCount):
        return f"count({req.trait}={req.value}) <= {req.bound}"
    if isinstance(req, MinDistinct):
        return f"distinct({req.trait}) >= {req.bound}"
    if isinstance(req, MaxPerValue):
        return f"each {req.trait} used <= {req.cap} times"
    return f"synergy >= {req.threshold:g}"


@dataclass(frozen=True)
class Puzzle:
    schema: TraitSchema
    graph: FormationGraph
    requirements: tuple[Requirement, ...] = ()
    kernel: WeightKernel | None = None
    name: str = ""
    # free-form solver knobs carried by the puzzle file, as sorted (key, value) pairs
    defaults: tuple[tuple[str, object], ...] = ()

    @property
    def linear(self) -> tuple[Requirement, ...]:
        return tuple(r for r in self.requirements if not isinstance(r, SynergyAtLeast))

    @property
    def synergy_threshold(self) -> float | None:
        for r in self.requirements:
            if isinstance(r, SynergyAtLeast):
                return r.threshold
        return None

    @property
    def weight_kernel(self) -> WeightKernel:
        return self.kernel if self.kernel is not None else default_kernel(self.schema)

    @property
    def N(self) -> int:
        return self.graph.node_count


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str


def validate_puzzle(puzzle: Puzzle) -> list[Violation]:
    out: list[Violation] = []
    g = puzzle.graph
    n = g.node_count
    if n < 1:
        out.append(Violation("graph.node_count", "must be at least 1"))
    for a, b in g.edges:
        if a == b:
            out.append(Violation("graph.edges", f"self-loop on node {a}"))
        elif not (0 <= a < n and 0 <= b < n):
            out.append(Violation("graph.edges", f"edge ({a}, {b}) outside [0, {n})"))
    if n >= 1 and not g.is_connected():
        out.append(Violation("graph.edges", "formation graph is not connected"))

    schema = puzzle.schema
    n_syn = 0
    for i, req in enumerate(puzzle.requirements):
        where = f"requirements[{i}]"
        if isinstance(req, SynergyAtLeast):
            n_syn += 1
            if not 0.0 <= req.threshold <= 1.0:
                out.append(Violation(f"{where}.threshold", f"{req.threshold} is out of [0,1]"))
            continue
        if req.trait not in schema.names:
            out.append(Violation(f"{where}.trait", f"unknown trait {req.trait!r}"))
            continue
        kind = schema.trait(req.trait).kind
        want = NUMERIC if isinstance(req, MinSum) else CATEGORICAL
        if kind != want:
            out.append(Violation(f"{where}.trait", f"{req.trait!r} is {kind}, needs {want}"))
        if isinstance(req, MinSum):
            if not req.bound >= 0:
                out.append(Violation(f"{where}.bound", "must be non-negative"))
            continue
        bound = req.cap if isinstance(req, MaxPerValue) else req.bound
        name = "cap" if isinstance(req, MaxPerValue) else "bound"
        if bound < 0:
            out.append(Violation(f"{where}.{name}", "must be non-negative"))
        elif bound > n:
            out.append(Violation(f"{where}.{name}", f"{bound} exceeds node count {n}"))
    if n_syn > 1:
        out.append(Violation("requirements", "at most one synergy requirement allowed"))
    n_lin = len(puzzle.linear)
    if n_lin > SOFT_MAX_LINEAR:
        warnings.warn(f"{n_lin} linear requirements; more than {SOFT_MAX_LINEAR} is unusual",
                      stacklevel=2)
    if puzzle.kernel is not None:
        out.extend(puzzle.kernel.violations(schema))
    return out


@dataclass(frozen=True)
class Solution:
    """A total, injective node -> item id assignment with cached scores."""

    assignment: tuple[str, ...]
    synergy: float
    fitness: float

    @property
    def key(self) -> tuple[float, tuple[str, ...]]:
        """Sort key: cheapest first, ties broken by the assignment itself."""
        return (self.fitness, self.assignment)


def fitness_of(ids: Iterable[str], pool: Pool) -> float:
    return math.fsum(pool[i].price for i in ids)


def make_solution(ids: Sequence[str], puzzle: Puzzle, pool: Pool) -> Solution:
    ids = tuple(ids)
    items = [pool[i] for i in ids]
    syn = solution_synergy(puzzle.weight_kernel, items, puzzle.graph, puzzle.schema)
    return Solution(ids, syn, math.fsum(it.price for it in items))


@dataclass(frozen=True)
class Check:
    requirement: Requirement
    passed: bool
    value: float


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[Check, ...]
    synergy: float
    fitness: float

    @property
    def feasible(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Requirement]:
        return [c.requirement for c in self.checks if not c.passed]


def linear_value(req: Requirement, items: Sequence[Item], schema: TraitSchema) -> float:
    """Observed value of a linear requirement's left-hand side over ``items``."""
    j = schema.index(req.trait)
    vals = [it.values[j] for it in items]
    if isinstance(req, MinSum):
        return float(sum(vals))
    if isinstance(req, (MinCount, MaxCount)):
        return float(sum(1 for v in vals if v == req.value))
    if isinstance(req, MinDistinct):
        return float(len(set(vals)))
    counts: dict = {}
    for v in vals:
        counts[v] = counts.get(v, 0) + 1
    return float(max(counts.values(), default=0))


def linear_passes(req: Requirement, value: float) -> bool:
    if isinstance(req, MinSum):
        return value >= req.bound
    if isinstance(req, MinCount):
        return value >= req.bound
    if isinstance(req, MaxCount):
        return value <= req.bound
    if isinstance(req, MinDistinct):
        return value >= req.bound
    return value <= req.cap


def evaluate(solution: Solution | Sequence[str], puzzle: Puzzle, pool: Pool) -> FeasibilityReport:
    ids = solution.assignment if isinstance(solution, Solution) else tuple(solution)
    if len(ids) != puzzle.N:
        raise ValueError(f"assignment covers {len(ids)} nodes, graph has {puzzle.N}")
    if len(set(ids)) != len(ids):
        raise ValueError("assignment repeats an item")
    items = [pool[i] for i in ids]
    syn = solution_synergy(puzzle.weight_kernel, items, puzzle.graph, puzzle.schema)
    checks = []
    for req in puzzle.requirements:
        if isinstance(req, SynergyAtLeast):
            checks.append(Check(req, syn >= req.threshold, syn))
        else:
            v = linear_value(req, items, puzzle.schema)
            checks.append(Check(req, linear_passes(req, v), v))
    return FeasibilityReport(tuple(checks), syn, math.fsum(it.price for it in items))


def solver_defaults(puzzle: Puzzle) -> Mapping[str, object]:
    return dict(puzzle.defaults)
