"""Interaction graphs, spanning trees and cycle structure.

Edges are stored in a canonical order, sorted by ``(min(i, j), max(i, j))``,
and every routine in the package addresses edges by their position in that
order.  Spanning trees are computed per connected component, so a
"spanning tree" of a disconnected graph is a spanning forest.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Sequence

__all__ = [
    "GraphFormatError",
    "InteractionGraph",
    "UnionFind",
    "TreeCotree",
    "Cycle",
    "DensityReport",
    "girth",
    "max_spanning_tree",
    "fundamental_cycles",
    "cycle_algebra",
    "dual_graph",
    "classify_density",
    "read_edge_list",
    "parse_edge_list",
    "format_edge_list",
]

INF = math.inf


class GraphFormatError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, k: int) -> int:
        parent = self.parent
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected simple graph with nonnegative edge weights.

    Attributes:
        n_nodes: Number of sites.
        edges: Canonically ordered ``(i, j, weight)`` triples with ``i < j``.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be nonnegative")
        canon = []
        seen = set()
        for e in self.edges:
            if len(e) == 2:
                i, j = e
                w = 1.0
            else:
                i, j, w = e
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n_nodes} nodes")
            if not w >= 0 or math.isinf(w):
                raise ValueError(f"edge ({i}, {j}) has invalid weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            canon.append((key[0], key[1], w))
        canon.sort(key=lambda t: (t[0], t[1]))
        object.__setattr__(self, "edges", tuple(canon))

    @classmethod
    def from_pairs(cls, n_nodes: int, pairs: Iterable[Sequence], weights=None) -> "InteractionGraph":
        pairs = list(pairs)
        if weights is None:
            return cls(n_nodes, tuple(tuple(p) for p in pairs))
        return cls(n_nodes, tuple((p[0], p[1], w) for p, w in zip(pairs, weights)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(i, j): k for k, (i, j, _) in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per node, the ``(neighbour, edge index)`` pairs in edge order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for k, (i, j, _) in enumerate(self.edges):
            adj[i].append((j, k))
            adj[j].append((i, k))
        return tuple(tuple(a) for a in adj)

    def endpoints(self, k: int) -> tuple[int, int]:
        i, j, _ = self.edges[k]
        return i, j

    def weight(self, k: int) -> float:
        return self.edges[k][2]

    def find_edge(self, i: int, j: int) -> int:
        return self.edge_index[(min(i, j), max(i, j))]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_index

    def with_weights(self, weights: Sequence[float]) -> "InteractionGraph":
        if len(weights) != self.n_edges:
            raise ValueError("one weight per edge required")
        return InteractionGraph(
            self.n_nodes, tuple((i, j, w) for (i, j, _), w in zip(self.edges, weights))
        )

    def subgraph(self, edge_ids: Iterable[int]) -> "InteractionGraph":
        """Graph on the same node set keeping only ``edge_ids``."""
        return InteractionGraph(self.n_nodes, tuple(self.edges[k] for k in sorted(set(edge_ids))))

    def add_edge(self, i: int, j: int, weight: float = 1.0) -> "InteractionGraph":
        return InteractionGraph(self.n_nodes, self.edges + ((i, j, weight),))

    def components(self) -> list[list[int]]:
        """Connected components as sorted node lists, ordered by smallest node."""
        uf = UnionFind(self.n_nodes)
        for i, j, _ in self.edges:
            uf.union(i, j)
        groups: dict[int, list[int]] = {}
        for v in range(self.n_nodes):
            groups.setdefault(uf.find(v), []).append(v)
        return sorted(groups.values(), key=lambda g: g[0])

    def is_forest(self) -> bool:
        uf = UnionFind(self.n_nodes)
        return all(uf.union(i, j) for i, j, _ in self.edges)


# ---------------------------------------------------------------------------
# Cycles


@dataclass(frozen=True)
class Cycle:
    """An edge set in which every touched vertex has even degree."""

    edges: frozenset[int]
    graph: InteractionGraph = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        degree: dict[int, int] = {}
        for k in self.edges:
            i, j = self.graph.endpoints(k)
            degree[i] = degree.get(i, 0) + 1
            degree[j] = degree.get(j, 0) + 1
        if any(d % 2 for d in degree.values()):
            raise ValueError("edge set is not a cycle: odd vertex degree")

    @property
    def length(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def nodes(self) -> list[int]:
        out = set()
        for k in self.edges:
            out.update(self.graph.endpoints(k))
        return sorted(out)

    def node_order(self) -> list[int]:
        """Vertices in traversal order for a simple cycle."""
        adj: dict[int, list[int]] = {}
        for k in sorted(self.edges):
            i, j = self.graph.endpoints(k)
            adj.setdefault(i, []).append(j)
            adj.setdefault(j, []).append(i)
        if any(len(v) != 2 for v in adj.values()):
            raise ValueError("not a simple cycle")
        start = min(adj)
        order = [start]
        prev, cur = None, start
        while True:
            a, b = adj[cur]
            nxt = a if a != prev else b
            if nxt == start:
                break
            order.append(nxt)
            prev, cur = cur, nxt
        if len(order) != len(adj):
            raise ValueError("edge set is a disjoint union of cycles")
        return order


CycleOp = Literal["union", "intersection", "symdiff"]


def cycle_algebra(a: Cycle | frozenset[int], b: Cycle | frozenset[int], op: CycleOp) -> frozenset[int]:
    """Union, intersection or symmetric difference of two edge sets."""
    ea = a.edges if isinstance(a, Cycle) else frozenset(a)
    eb = b.edges if isinstance(b, Cycle) else frozenset(b)
    if op == "union":
        return ea | eb
    if op == "intersection":
        return ea & eb
    if op == "symdiff":
        return ea ^ eb
    raise ValueError(f"unknown cycle operation {op!r}")


def girth(g: InteractionGraph) -> float:
    """Length of the shortest cycle, ``math.inf`` for a forest.

    BFS from every vertex; a non-tree edge ``(u, w)`` met during the search
    from ``r`` closes a closed walk of length ``d(u) + d(w) + 1`` through
    ``r``, and the minimum over all roots is the girth.
    """
    best = INF
    adj = g.adjacency
    for root in range(g.n_nodes):
        dist = {root: 0}
        via = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if 2 * dist[u] >= best:
                break
            for w, k in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    via[w] = k
                    queue.append(w)
                elif k != via[u] and k != via[w]:
                    best = min(best, dist[u] + dist[w] + 1)
    return best if best == INF else int(best)


# ---------------------------------------------------------------------------
# Tree / cotree splitting


@dataclass(frozen=True)
class TreeCotree:
    """A spanning forest of ``graph`` together with its cotree edges.

    Attributes:
        graph: The underlying graph.
        tree_edges: Edge indices of the spanning forest (sorted).
        cotree_edges: Remaining edge indices in canonical order.
    """

    graph: InteractionGraph
    tree_edges: tuple[int, ...]
    cotree_edges: tuple[int, ...]

    def __post_init__(self):
        tree = tuple(sorted(self.tree_edges))
        cotree = tuple(sorted(self.cotree_edges))
        object.__setattr__(self, "tree_edges", tree)
        object.__setattr__(self, "cotree_edges", cotree)
        if set(tree) & set(cotree) or len(tree) + len(cotree) != self.graph.n_edges:
            raise ValueError("tree and cotree must partition the edge set")
        uf = UnionFind(self.graph.n_nodes)
        for k in tree:
            if not uf.union(*self.graph.endpoints(k)):
                raise ValueError("tree edges contain a cycle")
        for k in cotree:
            if uf.find(self.graph.endpoints(k)[0]) != uf.find(self.graph.endpoints(k)[1]):
                raise ValueError("tree does not span every component")

    @classmethod
    def from_tree(cls, graph: InteractionGraph, tree_edges: Iterable[int]) -> "TreeCotree":
        tree = set(tree_edges)
        return cls(graph, tuple(tree), tuple(k for k in range(graph.n_edges) if k not in tree))

    @cached_property
    def _rooted(self) -> tuple[list[int], list[int], list[int]]:
        """Parent node, parent edge and depth of each node in the forest."""
        n = self.graph.n_nodes
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for k in self.tree_edges:
            i, j = self.graph.endpoints(k)
            adj[i].append((j, k))
            adj[j].append((i, k))
        parent = [-1] * n
        parent_edge = [-1] * n
        depth = [-1] * n
        for root in range(n):
            if depth[root] >= 0:
                continue
            depth[root] = 0
            stack = [root]
            while stack:
                u = stack.pop()
                for w, k in adj[u]:
                    if depth[w] < 0:
                        depth[w] = depth[u] + 1
                        parent[w] = u
                        parent_edge[w] = k
                        stack.append(w)
        return parent, parent_edge, depth

    def tree_path(self, u: int, v: int) -> frozenset[int]:
        """Tree edges on the unique path from ``u`` to ``v``."""
        parent, parent_edge, depth = self._rooted
        path = set()
        while depth[u] > depth[v]:
            path.add(parent_edge[u])
            u = parent[u]
        while depth[v] > depth[u]:
            path.add(parent_edge[v])
            v = parent[v]
        while u != v:
            if parent[u] < 0 or parent[v] < 0:
                raise ValueError("nodes lie in different components")
            path.add(parent_edge[u])
            path.add(parent_edge[v])
            u, v = parent[u], parent[v]
        return frozenset(path)

    def reduced_cycle(self, e: int) -> frozenset[int]:
        """Tree part of the fundamental cycle of cotree edge ``e``."""
        if e not in self._cotree_set:
            raise ValueError(f"edge {e} is not a cotree edge")
        return self.tree_path(*self.graph.endpoints(e))

    @cached_property
    def _cotree_set(self) -> frozenset[int]:
        return frozenset(self.cotree_edges)

    def cycle(self, e: int) -> Cycle:
        return Cycle(self.reduced_cycle(e) | {e}, self.graph)

    @cached_property
    def fundamental_cycles(self) -> tuple[Cycle, ...]:
        """One cycle per cotree edge, in cotree order."""
        return tuple(self.cycle(e) for e in self.cotree_edges)

    def reduced_tree(self, *cotree: int) -> frozenset[int]:
        """Tree edges outside the reduced cycles of the given cotree edges."""
        removed: set[int] = set()
        for e in cotree:
            removed |= self.reduced_cycle(e)
        return frozenset(self.tree_edges) - removed


def max_spanning_tree(g: InteractionGraph, weights: Sequence[float] | None = None) -> TreeCotree:
    """Maximum-weight spanning forest by Kruskal's algorithm.

    Edges are scanned by decreasing weight; ties keep canonical edge order.
    ``weights`` overrides the graph's stored weights.
    """
    w = [e[2] for e in g.edges] if weights is None else list(weights)
    if len(w) != g.n_edges:
        raise ValueError("one weight per edge required")
    # sort is stable, so equal weights stay in canonical order
    order = sorted(range(g.n_edges), key=lambda k: -w[k])
    uf = UnionFind(g.n_nodes)
    tree = [k for k in order if uf.union(*g.endpoints(k))]
    return TreeCotree.from_tree(g, tree)


def fundamental_cycles(tc: TreeCotree) -> list[Cycle]:
    return list(tc.fundamental_cycles)


# ---------------------------------------------------------------------------
# Cycle density


@dataclass(frozen=True)
class DensityReport:
    """Finite-size cycle-density label.

    ``label`` is ``"sparse"`` iff ``ratio < threshold``; graphs without
    cycles get ``label == "no cycles"`` and an infinite girth.
    """

    k_max_dual_degree: int
    girth: float
    ratio: float
    label: str
    threshold: float
    n_cycles: int = 0

    @property
    def has_cycles(self) -> bool:
        return self.label != "no cycles"


def dual_graph(tc: TreeCotree) -> InteractionGraph:
    """Graph on fundamental cycles; two cycles adjacent iff they share an edge."""
    cycles = tc.fundamental_cycles
    pairs = [
        (a, b)
        for a in range(len(cycles))
        for b in range(a + 1, len(cycles))
        if cycles[a].edges & cycles[b].edges
    ]
    return InteractionGraph.from_pairs(len(cycles), pairs)


def classify_density(
    g: InteractionGraph, threshold: float = 0.5, tc: TreeCotree | None = None
) -> DensityReport:
    """Label ``g`` sparse or dense from its max dual degree over its girth.

    The dual is built over the fundamental cycles of ``tc`` (default: the
    maximum spanning tree of ``g``), so K depends on the chosen tree.  The
    label is a finite-size heuristic for an asymptotic notion.
    """
    length = girth(g)
    if length == INF:
        return DensityReport(0, INF, 0.0, "no cycles", threshold)
    tc = max_spanning_tree(g) if tc is None else tc
    dual = dual_graph(tc)
    k = max((len(a) for a in dual.adjacency), default=0)
    ratio = k / length
    return DensityReport(k, length, ratio, "sparse" if ratio < threshold else "dense", threshold, dual.n_nodes)


# ---------------------------------------------------------------------------
# Edge-list text format


def parse_edge_list(text: str, source: str = "<string>") -> InteractionGraph:
    """Parse ``N`` then ``i j [weight]`` lines; ``#`` starts a comment."""
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if n_nodes is None:
                if len(parts) != 1:
                    raise ValueError("expected a single node count")
                n_nodes = int(parts[0])
                if n_nodes < 0:
                    raise ValueError("node count must be nonnegative")
                continue
            if len(parts) not in (2, 3):
                raise ValueError("expected 'i j [weight]'")
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphFormatError(f"{source}:{lineno}: {exc}") from None
        edges.append((i, j, w, lineno))
    if n_nodes is None:
        raise GraphFormatError(f"{source}: missing node count")
    seen = set()
    for i, j, w, lineno in edges:
        key = (min(i, j), max(i, j))
        if i == j or not (0 <= i < n_nodes and 0 <= j < n_nodes) or key in seen or not w >= 0:
            raise GraphFormatError(f"{source}:{lineno}: invalid edge {i} {j} {w}")
        seen.add(key)
    return InteractionGraph(n_nodes, tuple((i, j, w) for i, j, w, _ in edges))


def read_edge_list(path) -> InteractionGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read(), str(path))


def format_edge_list(g: InteractionGraph) -> str:
    lines = [str(g.n_nodes)]
    lines += [f"{i} {j} {w!r}" for i, j, w in g.edges]
    return "\n".join(lines) + "\n"
