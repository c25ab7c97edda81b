"""Pairwise weight kernel and the edge-normalised synergy score.

Synergy of a full assignment is the mean pair weight over the edges of the
formation graph, so it always lies in [0, 1].  Pair weights are a weighted
sum of per-trait affinities: categorical traits look up an affinity table
(default 1 for equal values, 0 otherwise) and numeric traits decay as
``1 / (1 + |x - y| / scale)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .domain import FormationGraph, Item, Pool, TraitSchema

KIND_CATEGORICAL = 0
KIND_NUMERIC = 1


@dataclass(frozen=True)
class TraitRule:
    name: str
    kind: str
    weight: float
    scale: float = 1.0
    # symmetric overrides ((u, v), w) with u <= v; unlisted pairs use equality
    affinity: tuple[tuple[tuple[str, str], float], ...] = ()

    def affinity_map(self) -> dict[tuple[str, str], float]:
        out = {}
        for (u, v), w in self.affinity:
            out[(u, v)] = w
            out[(v, u)] = w
        return out


@dataclass(frozen=True)
class WeightKernel:
    rules: tuple[TraitRule, ...]

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(r.weight for r in self.rules)

    def violations(self, schema: TraitSchema) -> list:
        from .domain import Violation

        out = []
        if tuple(r.name for r in self.rules) != schema.names:
            out.append(Violation("kernel.traits", "kernel traits do not match the schema order"))
            return out
        for r, t in zip(self.rules, schema.traits):
            if r.kind != t.kind:
                out.append(Violation(f"kernel.{r.name}", f"kind {r.kind} != schema kind {t.kind}"))
            if r.weight < 0:
                out.append(Violation(f"kernel.{r.name}.weight", "must be non-negative"))
            if r.kind == "numeric" and not r.scale > 0:
                out.append(Violation(f"kernel.{r.name}.scale", "must be positive"))
            for (_, _), w in r.affinity:
                if not 0.0 <= w <= 1.0:
                    out.append(Violation(f"kernel.{r.name}.affinity", f"weight {w} out of [0,1]"))
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            out.append(Violation("kernel.trait_weights", f"weights sum to {total}, not 1"))
        return out

    def compile(self, pool: Pool) -> CompiledKernel:
        p = len(self.rules)
        vmax = max([1] + [len(v) for v in pool.vocab])
        kinds = np.zeros(p, dtype=np.int64)
        weights = np.array(self.weights, dtype=np.float64)
        scales = np.ones(p, dtype=np.float64)
        tables = np.zeros((p, vmax, vmax), dtype=np.float64)
        for j, r in enumerate(self.rules):
            if r.kind == "numeric":
                kinds[j] = KIND_NUMERIC
                scales[j] = r.scale
                continue
            vocab = pool.vocab[j]
            amap = r.affinity_map()
            for a, u in enumerate(vocab):
                for b, v in enumerate(vocab):
                    tables[j, a, b] = amap.get((u, v), 1.0 if u == v else 0.0)
        return CompiledKernel(kinds, weights, scales, tables)


@dataclass(frozen=True)
class CompiledKernel:
    """Array form of a kernel bound to one pool's category encoding."""

    kinds: np.ndarray
    weights: np.ndarray
    scales: np.ndarray
    tables: np.ndarray


def default_kernel(schema: TraitSchema, weights: Mapping[str, float] | None = None) -> WeightKernel:
    """Equal trait weights, equality affinity, reciprocal decay on numeric traits."""
    names = schema.names
    if weights is None:
        w = {n: 1.0 / len(names) for n in names}
    else:
        w = {n: float(weights.get(n, 0.0)) for n in names}
    return WeightKernel(tuple(
        TraitRule(t.name, t.kind, w[t.name], t.scale if t.kind == "numeric" else 1.0)
        for t in schema.traits))


def _trait_weight(rule: TraitRule, amap: dict, x, y) -> float:
    if rule.kind == "numeric":
        return 1.0 / (1.0 + abs(float(x) - float(y)) / rule.scale)
    return amap.get((x, y), 1.0 if x == y else 0.0)


def pair_weight(kernel: WeightKernel, a: Item, b: Item) -> float:
    """Weighted per-trait affinity of two items; symmetric, in [0, 1]."""
    from .domain import SchemaMismatch

    if len(a.values) != len(kernel.rules) or len(b.values) != len(kernel.rules):
        raise SchemaMismatch(f"items {a.id!r}/{b.id!r} do not match the kernel's traits")
    s = 0.0
    for rule, x, y in zip(kernel.rules, a.values, b.values):
        s += rule.weight * _trait_weight(rule, rule.affinity_map() if rule.affinity else {}, x, y)
    return s


def solution_synergy(kernel: WeightKernel, items: Sequence[Item], graph: FormationGraph,
                     schema: TraitSchema | None = None) -> float:
    """Mean pair weight over graph edges; an edgeless graph scores 1."""
    if not graph.edges:
        return 1.0
    return math.fsum(pair_weight(kernel, items[i], items[j])
                     for i, j in graph.edges) / len(graph.edges)


def neighbor_score(kernel: WeightKernel, candidate: Item, node: int,
                   assigned: Mapping[int, Item], graph: FormationGraph) -> float:
    """Sum of pair weights between ``candidate`` and the already-placed neighbours of ``node``."""
    s = 0.0
    for nb in graph.neighbors(node):
        if nb in assigned:
            s += pair_weight(kernel, candidate, assigned[nb])
    return s
