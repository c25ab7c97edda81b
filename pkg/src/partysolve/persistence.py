"""File formats, the synthetic pool generator and result writers.

Pools, puzzles, solutions and oracle reports are JSON objects; convergence
logs are CSV.  Writers are deterministic (sorted keys where order is not
meaningful, fixed float formatting via ``repr``) so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .domain import (CATEGORICAL, NUMERIC, FeasibilityReport, FormationGraph, Item,
                     MaxCount, MaxPerValue, MinCount, MinDistinct, MinSum, Pool, Puzzle,
                     Requirement, SchemaMismatch, Solution, SolverError, SynergyAtLeast,
                     TraitDef, TraitSchema, describe)
from .rng import make_rng
from .synergy import TraitRule, WeightKernel, default_kernel

POOL_FORMAT = "partysolve.pool/1"
PUZZLE_FORMAT = "partysolve.puzzle/1"
SOLUTION_FORMAT = "partysolve.solution/1"
POPULATION_FORMAT = "partysolve.population/1"
ORACLE_FORMAT = "partysolve.oracle/1"


class ParseError(SolverError, ValueError):
    def __init__(self, line: int, reason: str, path: str | None = None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: {reason}")


class InvalidSpec(SolverError, ValueError):
    pass


def _line_of(text: str, needle: str, occurrence: int = 0) -> int:
    """1-based line of the ``occurrence``-th match of ``needle``; 1 if absent."""
    pos = -1
    for _ in range(occurrence + 1):
        pos = text.find(needle, pos + 1)
        if pos < 0:
            return 1
    return text.count("\n", 0, pos) + 1


def _parse_json(text: str, path: str | None) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg, path) from None


def _read(source: str | Path) -> tuple[str, str]:
    p = Path(source)
    return p.read_text(encoding="utf-8"), str(p)


def _write(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _require(obj: dict, key: str, text: str, path: str | None, anchor: str = ""):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(_line_of(text, anchor) if anchor else 1, f"missing field {key!r}", path)
    return obj[key]


# ---------------------------------------------------------------- schema / pool

def schema_to_json(schema: TraitSchema) -> list[dict]:
    out = []
    for t in schema.traits:
        d: dict[str, Any] = {"name": t.name, "kind": t.kind}
        if t.kind == NUMERIC:
            d["scale"] = t.scale
        if t.values:
            d["values"] = list(t.values)
        out.append(d)
    return out


def schema_from_json(data: Any, text: str = "", path: str | None = None) -> TraitSchema:
    if not isinstance(data, list):
        raise ParseError(_line_of(text, '"traits"'), "schema traits must be a list", path)
    traits = []
    for i, d in enumerate(data):
        line = _line_of(text, '"name"', i)
        if not isinstance(d, dict) or "name" not in d:
            raise ParseError(line, f"trait #{i} needs a name", path)
        try:
            traits.append(TraitDef(str(d["name"]), d.get("kind", CATEGORICAL),
                                   float(d.get("scale", 1.0)), tuple(d.get("values", ()))))
        except (SchemaMismatch, TypeError, ValueError) as e:
            raise ParseError(line, str(e), path) from None
    try:
        return TraitSchema(tuple(traits))
    except SchemaMismatch as e:
        raise ParseError(_line_of(text, '"traits"'), str(e), path) from None


def dumps_pool(pool: Pool) -> str:
    names = pool.schema.names
    lines = ["{",
             f'  "format": {json.dumps(POOL_FORMAT)},',
             f'  "schema": {{"traits": {json.dumps(schema_to_json(pool.schema))}}},',
             '  "items": [']
    rows = []
    for it in pool.items:
        rec = {"id": it.id, "values": dict(zip(names, it.values)), "price": it.price}
        rows.append("    " + json.dumps(rec))
    lines.append(",\n".join(rows))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads_pool(text: str, path: str | None = None) -> Pool:
    data = _parse_json(text, path)
    if not isinstance(data, dict):
        raise ParseError(1, "pool file must be a JSON object", path)
    schema_obj = _require(data, "schema", text, path)
    schema = schema_from_json(_require(schema_obj, "traits", text, path, '"schema"'), text, path)
    raw_items = _require(data, "items", text, path)
    if not isinstance(raw_items, list):
        raise ParseError(_line_of(text, '"items"'), "items must be a list", path)
    items = []
    seen: set[str] = set()
    for i, rec in enumerate(raw_items):
        line = _line_of(text, '"id"', i)
        if not isinstance(rec, dict):
            raise ParseError(line, f"item #{i} is not an object", path)
        for key in ("id", "values", "price"):
            if key not in rec:
                raise ParseError(line, f"item #{i} missing field {key!r}", path)
        iid = str(rec["id"])
        if iid in seen:
            raise ParseError(line, f"duplicate item id {iid!r}", path)
        seen.add(iid)
        vals = rec["values"]
        if isinstance(vals, dict):
            extra = set(vals) - set(schema.names)
            if extra:
                raise SchemaMismatch(f"item {iid!r} has unknown trait {sorted(extra)[0]!r}")
            try:
                vals = [vals[n] for n in schema.names]
            except KeyError as e:
                raise SchemaMismatch(f"item {iid!r} missing trait {e.args[0]!r}") from None
        try:
            price = float(rec["price"])
        except (TypeError, ValueError):
            raise ParseError(line, f"item {iid!r}: price is not a number", path) from None
        items.append(Item(iid, tuple(vals), price))
    return Pool(schema, items)


def save_pool(pool: Pool, path: str | Path) -> None:
    _write(path, dumps_pool(pool))


def load_pool(path: str | Path) -> Pool:
    return loads_pool(*_read(path))


# ---------------------------------------------------------------- puzzle

def requirement_to_json(r: Requirement) -> dict:
    if isinstance(r, MinSum):
        return {"type": "min_sum", "trait": r.trait, "bound": r.bound}
    if isinstance(r, MinCount):
        return {"type": "min_count", "trait": r.trait, "value": r.value, "bound": r.bound}
    if isinstance(r, MaxCount):
        return {"type": "max_count", "trait": r.trait, "value": r.value, "bound": r.bound}
    if isinstance(r, MinDistinct):
        return {"type": "min_distinct", "trait": r.trait, "bound": r.bound}
    if isinstance(r, MaxPerValue):
        return {"type": "max_per_value", "trait": r.trait, "cap": r.cap}
    return {"type": "synergy_at_least", "threshold": r.threshold}


def requirement_from_json(d: dict, node_count: int) -> Requirement:
    kind = d["type"]
    if kind == "min_sum":
        return MinSum(d["trait"], float(d["bound"]))
    if kind == "min_mean":
        # mean form is stored as the equivalent total over all nodes
        return MinSum(d["trait"], float(d["bound"]) * node_count)
    if kind == "min_count":
        return MinCount(d["trait"], d["value"], int(d["bound"]))
    if kind == "max_count":
        return MaxCount(d["trait"], d["value"], int(d["bound"]))
    if kind == "min_distinct":
        return MinDistinct(d["trait"], int(d["bound"]))
    if kind == "max_per_value":
        return MaxPerValue(d["trait"], int(d["cap"]))
    if kind == "synergy_at_least":
        return SynergyAtLeast(float(d["threshold"]))
    raise ValueError(f"unknown requirement type {kind!r}")


def kernel_to_json(kernel: WeightKernel) -> dict:
    out: dict[str, Any] = {"trait_weights": {r.name: r.weight for r in kernel.rules}}
    scales = {r.name: r.scale for r in kernel.rules if r.kind == NUMERIC}
    if scales:
        out["scales"] = scales
    aff = {r.name: [[u, v, w] for (u, v), w in r.affinity] for r in kernel.rules if r.affinity}
    if aff:
        out["affinity"] = aff
    return out


def kernel_from_json(d: dict, schema: TraitSchema) -> WeightKernel:
    base = default_kernel(schema, d.get("trait_weights"))
    scales = d.get("scales", {})
    aff = d.get("affinity", {})
    for name in list(scales) + list(aff) + list(d.get("trait_weights", {})):
        if name not in schema.names:
            raise SchemaMismatch(f"kernel references unknown trait {name!r}")
    rules = []
    for r in base.rules:
        pairs = tuple(sorted(((min(u, v), max(u, v)), float(w)) for u, v, w in aff.get(r.name, [])))
        rules.append(TraitRule(r.name, r.kind, r.weight, float(scales.get(r.name, r.scale)), pairs))
    return WeightKernel(tuple(rules))


def dumps_puzzle(puzzle: Puzzle) -> str:
    obj: dict[str, Any] = {"format": PUZZLE_FORMAT}
    if puzzle.name:
        obj["name"] = puzzle.name
    obj["graph"] = {"node_count": puzzle.graph.node_count,
                    "edges": [list(e) for e in puzzle.graph.edges]}
    obj["requirements"] = [requirement_to_json(r) for r in puzzle.requirements]
    if puzzle.kernel is not None:
        obj["kernel"] = kernel_to_json(puzzle.kernel)
    if puzzle.defaults:
        obj["solver_defaults"] = dict(puzzle.defaults)
    return json.dumps(obj, indent=2) + "\n"


def loads_puzzle(text: str, schema: TraitSchema, path: str | None = None) -> Puzzle:
    data = _parse_json(text, path)
    if not isinstance(data, dict):
        raise ParseError(1, "puzzle file must be a JSON object", path)
    g = _require(data, "graph", text, path)
    try:
        n = int(_require(g, "node_count", text, path, '"graph"'))
        graph = FormationGraph.from_edges(n, g.get("edges", []))
    except (TypeError, ValueError) as e:
        raise ParseError(_line_of(text, '"graph"'), f"bad graph: {e}", path) from None
    reqs = []
    for i, d in enumerate(data.get("requirements", [])):
        line = _line_of(text, '"type"', i)
        if not isinstance(d, dict) or "type" not in d:
            raise ParseError(line, f"requirement #{i} needs a type", path)
        trait = d.get("trait")
        if trait is not None and trait not in schema.names:
            raise SchemaMismatch(f"requirement #{i} references unknown trait {trait!r}")
        try:
            reqs.append(requirement_from_json(d, n))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(line, f"requirement #{i}: {e}", path) from None
    kernel = kernel_from_json(data["kernel"], schema) if "kernel" in data else None
    defaults = tuple(sorted(data.get("solver_defaults", {}).items()))
    return Puzzle(schema, graph, tuple(reqs), kernel, str(data.get("name", "")), defaults)


def save_puzzle(puzzle: Puzzle, path: str | Path) -> None:
    _write(path, dumps_puzzle(puzzle))


def load_puzzle(path: str | Path, schema: TraitSchema) -> Puzzle:
    text, p = _read(path)
    return loads_puzzle(text, schema, p)


# ---------------------------------------------------------------- solutions

def solution_to_json(sol: Solution, report: FeasibilityReport | None = None) -> dict:
    d: dict[str, Any] = {
        "fitness": sol.fitness,
        "synergy": sol.synergy,
        "assignment": [{"node": i, "item": iid} for i, iid in enumerate(sol.assignment)],
    }
    if report is not None:
        d["feasible"] = report.feasible
        d["requirements"] = [{"requirement": describe(c.requirement), "passed": c.passed,
                              "value": c.value} for c in report.checks]
    return d


def solution_from_json(d: dict) -> Solution:
    nodes = sorted(d["assignment"], key=lambda r: r["node"])
    if [r["node"] for r in nodes] != list(range(len(nodes))):
        raise ValueError("assignment nodes must cover 0..N-1")
    return Solution(tuple(str(r["item"]) for r in nodes), float(d["synergy"]), float(d["fitness"]))


def dumps_solution(sol: Solution, report: FeasibilityReport | None = None,
                   puzzle_name: str = "") -> str:
    obj = {"format": SOLUTION_FORMAT, "puzzle": puzzle_name}
    obj.update(solution_to_json(sol, report))
    return json.dumps(obj, indent=2) + "\n"


def loads_solution(text: str, path: str | None = None) -> Solution:
    data = _parse_json(text, path)
    try:
        return solution_from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(_line_of(text, '"assignment"'), f"bad solution: {e}", path) from None


def save_solution(sol: Solution, path: str | Path, report: FeasibilityReport | None = None,
                  puzzle_name: str = "") -> None:
    _write(path, dumps_solution(sol, report, puzzle_name))


def load_solution(path: str | Path) -> Solution:
    return loads_solution(*_read(path))


def dumps_infeasible(attempts: int, best_synergy: float | None, puzzle_name: str = "") -> str:
    return json.dumps({"format": SOLUTION_FORMAT, "puzzle": puzzle_name, "feasible": False,
                       "attempts": attempts, "best_synergy_seen": best_synergy}, indent=2) + "\n"


def dumps_population(members: Sequence[Solution]) -> str:
    return json.dumps({"format": POPULATION_FORMAT,
                       "members": [solution_to_json(s) for s in members]}, indent=2) + "\n"


def loads_population(text: str) -> list[Solution]:
    return [solution_from_json(d) for d in json.loads(text)["members"]]


# ---------------------------------------------------------------- convergence log

@dataclass(frozen=True)
class LogRow:
    generation: int
    best_fitness: float
    median_fitness: float
    diversity_cv: float
    evaluations: int
    migration: bool = False


LOG_FIELDS = ("generation", "best_fitness", "median_fitness", "diversity_cv", "evaluations",
              "migration")


@dataclass
class ConvergenceLog:
    rows: list[LogRow] = field(default_factory=list)

    def append(self, row: LogRow) -> None:
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def dumps_log(log: ConvergenceLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_FIELDS)
    for r in log.rows:
        w.writerow([r.generation, repr(r.best_fitness), repr(r.median_fitness),
                    repr(r.diversity_cv), r.evaluations, int(r.migration)])
    return buf.getvalue()


def loads_log(text: str) -> ConvergenceLog:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != LOG_FIELDS:
        raise ParseError(1, f"expected header {','.join(LOG_FIELDS)}")
    log = ConvergenceLog()
    for lineno, row in enumerate(reader, start=2):
        try:
            g, b, m, cv, ev, mig = row
            log.append(LogRow(int(g), float(b), float(m), float(cv), int(ev), bool(int(mig))))
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
    return log


def save_log(log: ConvergenceLog, path: str | Path) -> None:
    _write(path, dumps_log(log))


def load_log(path: str | Path) -> ConvergenceLog:
    return loads_log(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- generator

DEFAULT_CATEGORIES = {
    "race": ("human", "elf", "goblin", "orc", "dwarf"),
    "religion": tuple(f"faith{i}" for i in range(10)),
    "hometown": tuple(f"town{i}" for i in range(8)),
    "nation": tuple(f"nation{i}" for i in range(6)),
}


@dataclass(frozen=True)
class PoolSpec:
    """Recipe for a synthetic pool.

    Items are drawn around ``factions`` prototypes: each categorical trait
    keeps the faction's value with probability ``cohesion[trait]`` and is
    uniform otherwise, which makes high-synergy neighbourhoods rare but
    present.  Prices are log-normal and rise with level.
    """

    size: int = 500
    categories: tuple[tuple[str, tuple[str, ...]], ...] = tuple(DEFAULT_CATEGORIES.items())
    cohesion: tuple[tuple[str, float], ...] = (
        ("race", 0.9), ("religion", 0.6), ("hometown", 0.5), ("nation", 0.9))
    level_trait: str = "level"
    level_range: tuple[int, int] = (1, 10)
    level_scale: float = 3.0
    factions: int = 5
    price_base: float = 50.0
    price_level_slope: float = 0.3
    price_sigma: float = 0.35

    def validate(self) -> None:
        if self.size < 1:
            raise InvalidSpec("pool size must be at least 1")
        lo, hi = self.level_range
        if lo < 0 or hi < lo:
            raise InvalidSpec(f"bad level range {self.level_range}")
        if not self.categories:
            raise InvalidSpec("at least one categorical trait is required")
        if len(self.categories) + 1 > 8:
            raise InvalidSpec("at most 8 traits")
        for name, vals in self.categories:
            if not vals:
                raise InvalidSpec(f"trait {name!r} has no values")
        if self.factions < 1:
            raise InvalidSpec("factions must be >= 1")
        for name, c in self.cohesion:
            if not 0 <= c <= 1:
                raise InvalidSpec(f"cohesion of {name!r} must be in [0,1]")
        if self.price_base <= 0 or self.price_sigma < 0:
            raise InvalidSpec("price model needs a positive base and non-negative sigma")

    def schema(self) -> TraitSchema:
        traits = [TraitDef(n, CATEGORICAL, 1.0, tuple(v)) for n, v in self.categories]
        traits.append(TraitDef(self.level_trait, NUMERIC, self.level_scale))
        return TraitSchema(tuple(traits))


def generate_pool(spec: PoolSpec = PoolSpec(), seed: int = 0) -> Pool:
    spec.validate()
    rng = make_rng(seed)
    cohesion = dict(spec.cohesion)
    cats = [(n, v) for n, v in spec.categories]
    # cycle each trait through a shuffled value order so every value anchors
    # some faction whenever there are at least as many factions as values
    perms = [rng.permutation(len(v)) for _, v in cats]
    protos = [[int(perms[j][f % len(v)]) for j, (_, v) in enumerate(cats)]
              for f in range(spec.factions)]
    lo, hi = spec.level_range
    width = len(str(spec.size - 1))
    items = []
    for m in range(spec.size):
        f = int(rng.integers(spec.factions))
        vals: list[Any] = []
        for j, (name, v) in enumerate(cats):
            keep = rng.random() < cohesion.get(name, 0.5)
            vals.append(v[protos[f][j]] if keep else v[int(rng.integers(len(v)))])
        level = int(rng.integers(lo, hi + 1))
        vals.append(level)
        z = rng.standard_normal()
        price = spec.price_base * math.exp(spec.price_level_slope * (level - lo) + spec.price_sigma * z)
        items.append(Item(f"h{m:0{width}d}", tuple(vals), round(price, 2)))
    return Pool(spec.schema(), items)


# ---------------------------------------------------------------- shipped files

TEMPLATES = ("type1", "type2", "type3", "tiny")
DEFAULT_POOL = "pool_m500"
TINY_POOL = "pool_tiny"


def template_text(name: str) -> str:
    return resources.files("partysolve").joinpath("templates", f"{name}.json").read_text("utf-8")


def load_template(name: str, schema: TraitSchema) -> Puzzle:
    return loads_puzzle(template_text(name), schema, f"<template {name}>")


def load_builtin_pool(name: str = DEFAULT_POOL) -> Pool:
    return loads_pool(template_text(name), f"<pool {name}>")


def resolve_pool(ref: str | Path) -> Pool:
    """Path to a pool file, or the name of a shipped pool."""
    if str(ref) in (DEFAULT_POOL, TINY_POOL, "default", "tiny"):
        name = {"default": DEFAULT_POOL, "tiny": TINY_POOL}.get(str(ref), str(ref))
        return load_builtin_pool(name)
    return load_pool(ref)


def resolve_puzzle(ref: str | Path, schema: TraitSchema) -> Puzzle:
    """Path to a puzzle file, or the name of a shipped template."""
    if str(ref) in TEMPLATES:
        return load_template(str(ref), schema)
    return load_puzzle(ref, schema)
