"""Forest families of an interaction graph and the forest partition function.

A forest is an acyclic edge subset, stored as a sorted tuple of edge
indices.  The empty forest is always a member.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .contraction import contract
from .errors import CapExceededError
from .exact import brute_force_sum
from .graph import InteractionGraph, TreeCotree
from .model import PairwiseModel, edge_factor_table

__all__ = [
    "ForestFamily",
    "RootedDecomposition",
    "enumerate_forests",
    "forest_term",
    "forest_partition",
    "graph_polynomial",
    "orthogonalize",
    "format_family",
    "parse_family",
    "DEFAULT_EDGE_CAP",
]

DEFAULT_EDGE_CAP = 24

Forest = tuple[int, ...]


@dataclass(frozen=True)
class ForestFamily:
    """Enumerated acyclic edge subsets of ``graph`` restricted to ``edge_ids``."""

    graph: InteractionGraph
    forests: tuple[Forest, ...]
    edge_ids: tuple[int, ...] = field(default=())

    @property
    def includes_empty(self) -> bool:
        return () in self.as_set()

    def as_set(self) -> frozenset[Forest]:
        return frozenset(self.forests)

    def __len__(self) -> int:
        return len(self.forests)

    def __iter__(self):
        return iter(self.forests)

    def __contains__(self, forest) -> bool:
        return tuple(sorted(forest)) in self.as_set()


def enumerate_forests(
    g: InteractionGraph, edge_ids: Iterable[int] | None = None, cap: int = DEFAULT_EDGE_CAP
) -> ForestFamily:
    """All acyclic subsets of ``edge_ids`` (default: every edge of ``g``).

    Depth-first subset growth over increasing edge index; a union-find with
    rollback tracks components, and adding an edge whose endpoints are
    already joined prunes that branch.  Output is in lexicographic order of
    the sorted index tuples, starting with the empty forest.
    """
    ids = tuple(range(g.n_edges)) if edge_ids is None else tuple(sorted(set(edge_ids)))
    if len(ids) > cap:
        raise CapExceededError("edge count for forest enumeration", len(ids), cap)
    ends = [g.endpoints(k) for k in ids]
    parent = list(range(g.n_nodes))
    size = [1] * g.n_nodes

    def find(v: int) -> int:
        while parent[v] != v:
            v = parent[v]
        return v

    out: list[Forest] = []
    current: list[int] = []

    def grow(start: int) -> None:
        out.append(tuple(current))
        for pos in range(start, len(ids)):
            a, b = find(ends[pos][0]), find(ends[pos][1])
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            current.append(ids[pos])
            grow(pos + 1)
            current.pop()
            parent[b] = b
            size[a] -= size[b]

    grow(0)
    return ForestFamily(g, tuple(out), ids)


def _factor_tables(m: PairwiseModel) -> list[np.ndarray]:
    return [edge_factor_table(m, k) for k in range(m.graph.n_edges)]


def forest_term(m: PairwiseModel, forest: Sequence[int], tables=None, brute: bool = False) -> float:
    """``sum_s prod_{e in forest} (exp(beta H_e) - 1)``.

    Leaf-elimination contraction by default; ``brute=True`` enumerates
    configurations instead (small models only).
    """
    tables = _factor_tables(m) if tables is None else tables
    factors = [(m.graph.endpoints(k), tables[k]) for k in forest]
    if brute:
        return brute_force_sum(m.state_sizes, factors)
    return contract(m.state_sizes, factors)


def _pairwise_sum(values: list[float]) -> float:
    if not values:
        return 0.0
    while len(values) > 1:
        nxt = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            nxt.append(values[-1])
        values = nxt
    return values[0]


def forest_partition(m: PairwiseModel, family: ForestFamily | None = None, brute: bool = False) -> float:
    """Forest partition function: the sum of :func:`forest_term` over ``family``.

    The empty forest contributes the product of all state counts.
    """
    if family is None:
        family = enumerate_forests(m.graph)
    if family.graph is not m.graph and family.graph != m.graph:
        raise ValueError("forest family belongs to a different graph")
    tables = _factor_tables(m)
    return _pairwise_sum([forest_term(m, f, tables, brute) for f in family.forests])


def graph_polynomial(m: PairwiseModel, subgraph: Iterable[int], state: Sequence[int]) -> float:
    """``prod_{e in subgraph} (1 + x_e(state))`` with ``x_e = exp(beta H_e) - 1``."""
    out = 1.0
    for k in subgraph:
        i, j = m.graph.endpoints(k)
        out *= 1.0 + math.expm1(m.beta * float(m.couplings[k][state[i], state[j]]))
    return out


# ---------------------------------------------------------------------------
# Orthogonalized rooted forests


@dataclass(frozen=True)
class RootedDecomposition:
    """Split of F(G) into F(T) and orthogonal parts keyed by cotree subsets.

    ``parts[S]`` holds exactly the forests of G whose cotree edges are
    ``S``.
    """

    family: ForestFamily
    tree_part: frozenset[Forest]
    parts: dict[tuple[int, ...], frozenset[Forest]]

    def union(self) -> frozenset[Forest]:
        out = set(self.tree_part)
        for p in self.parts.values():
            out |= p
        return frozenset(out)

    def is_partition(self) -> bool:
        pieces = [self.tree_part, *self.parts.values()]
        total = sum(len(p) for p in pieces)
        joined = self.union()
        return total == len(joined) and joined == self.family.as_set()


def orthogonalize(family: ForestFamily, tc: TreeCotree) -> RootedDecomposition:
    """Orthogonalize rooted forests over the cotree of ``tc``.

    For every nonempty cotree subset S the rooted family F_S (forests
    containing S) is reduced by subtracting the orthogonal parts of all
    strict supersets, working from the largest subsets down.  F(T) is
    enumerated independently from the tree edges.
    """
    if family.graph != tc.graph:
        raise ValueError("family and tree/cotree split are over different graphs")
    cotree = tc.cotree_edges
    forests = family.as_set()
    subsets = [s for k in range(len(cotree), 0, -1) for s in combinations(cotree, k)]
    parts: dict[tuple[int, ...], frozenset[Forest]] = {}
    for s in subsets:
        rooted = {f for f in forests if set(s) <= set(f)}
        for sup, part in parts.items():
            if len(sup) > len(s) and set(s) <= set(sup):
                rooted -= part
        parts[s] = frozenset(rooted)
    tree_part = enumerate_forests(tc.graph, tc.tree_edges).as_set()
    ordered = {s: parts[s] for s in sorted(parts, key=lambda t: (len(t), t))}
    return RootedDecomposition(family, tree_part, ordered)


def format_family(family: ForestFamily) -> str:
    """Text dump: a ``#`` header with the edge universe and counts, then one
    forest per line (the empty forest is an empty line)."""
    by_size = Counter(len(f) for f in family.forests)
    sizes = ",".join(f"{k}:{by_size[k]}" for k in sorted(by_size))
    ids = ",".join(str(k) for k in family.edge_ids)
    lines = [f"# forests={len(family)} nodes={family.graph.n_nodes} edge_ids={ids} by_size={sizes}"]
    lines += [" ".join(str(k) for k in f) for f in family.forests]
    return "\n".join(lines) + "\n"


def parse_family(text: str, g: InteractionGraph) -> ForestFamily:
    """Inverse of :func:`format_family`."""
    lines = text.split("\n")
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing family header")
    fields = dict(item.split("=", 1) for item in lines[0][1:].split())
    ids = tuple(int(t) for t in fields.get("edge_ids", "").split(",") if t)
    body = lines[1:]
    if body and body[-1] == "":
        body = body[:-1]
    forests = tuple(tuple(int(t) for t in line.split()) for line in body)
    if len(forests) != int(fields["forests"]):
        raise ValueError(f"header says {fields['forests']} forests, found {len(forests)}")
    return ForestFamily(g, forests, ids)
