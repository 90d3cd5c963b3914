"""Reference-tree approximations and cycle corrections.

Contents:

* ``s_integral``: ``S_L(A) = int_[0,1]^L exp(A min(u)) du`` in closed form,
  as a three-term large-L series, and by one-dimensional quadrature of
  ``L (1-t)^(L-1) e^(A t)``.
* ``multi_cycle_bound`` / ``error_bound``: numeric forms of the cycle
  suppression bounds.
* ``single_cycle_identity`` / ``q_correction_sets``: forest-family
  bookkeeping for one, two and three cotree edges.
* ``first_order_partition``: the first-order high-temperature expansion
  around a reference spanning tree.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import integrate

from .contraction import contract
from .forests import ForestFamily, enumerate_forests
from .graph import Cycle, DensityReport, InteractionGraph, TreeCotree, max_spanning_tree
from .model import PairwiseModel, critical_beta, edge_weight_for_mst
from .special import lower_gamma_scaled

__all__ = [
    "SIntegralResult",
    "BoundReport",
    "CorrectionTerm",
    "CorrectionFamily",
    "s_integral",
    "s_closed_form",
    "s_series",
    "s_quadrature",
    "multi_cycle_bound",
    "error_bound",
    "single_cycle_identity",
    "q_correction_sets",
    "correction_terms",
    "tree_partition",
    "first_order_partition",
    "cycle_observable",
    "reference_tree",
    "AboveCriticalWarning",
]

_SMALL_A = 1e-6


class AboveCriticalWarning(UserWarning):
    """Computation requested at or above the q = 1 threshold."""


# ---------------------------------------------------------------------------
# S_L(A)


@dataclass(frozen=True)
class SIntegralResult:
    closed_form: float
    series_3term: float
    quadrature: float


def s_series(l: int, a: float, terms: int = 3) -> float:
    """Truncated expansion ``1 + A/(L+1) + A^2/((L+1)(L+2)) + ...``."""
    total, term = 0.0, 1.0
    for n in range(terms):
        if n:
            term *= a / (l + n)
        total += term
    return total


def s_closed_form(l: int, a: float) -> float:
    """``L e^A A^-L gamma(L, A)``, with the removable ``A = 0`` point."""
    if l < 1:
        raise ValueError("L must be >= 1")
    if abs(a) < _SMALL_A:
        return s_series(l, a, terms=4)
    return l * lower_gamma_scaled(l, a)


def s_quadrature(l: int, a: float) -> float:
    """``L * int_0^1 (1-t)^(L-1) e^(A t) dt`` by adaptive quadrature."""
    if l < 1:
        raise ValueError("L must be >= 1")
    val, _ = integrate.quad(lambda t: (1.0 - t) ** (l - 1) * math.exp(a * t), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return l * val


def s_integral(l: int, a: float) -> SIntegralResult:
    return SIntegralResult(s_closed_form(l, a), s_series(l, a, 3), s_quadrature(l, a))


# ---------------------------------------------------------------------------
# Bounds


def multi_cycle_bound(k: int, lengths: Sequence[int], beta_hbar: float) -> tuple[float, float]:
    """Cut-chain bound for ``k`` cycles of the given lengths.

    Returns:
        ``(product, loose)`` with ``product = prod_k (1 + 2k x / L_k)^(1/2k)``
        and ``loose = 1 + K x / min(L)``, ``x = beta_hbar``.
    """
    if len(lengths) != k:
        raise ValueError(f"expected {k} cycle lengths, got {len(lengths)}")
    if any(length < 3 for length in lengths):
        raise ValueError("cycle lengths must be >= 3")
    product = 1.0
    for order, length in enumerate(lengths, start=1):
        product *= (1.0 + 2 * order * beta_hbar / length) ** (1.0 / (2 * order))
    loose = 1.0 + len(lengths) * beta_hbar / min(lengths) if lengths else 1.0
    return product, loose


@dataclass(frozen=True)
class BoundReport:
    q: float
    l_star: int
    regime: str
    bound: float
    rho: float = 0.0
    above_critical: bool = False


def error_bound(m: PairwiseModel, report: DensityReport, rho: float = 1.0) -> BoundReport:
    """Order of ``|Z - Z_forest|`` implied by the cycle suppression factor.

    ``q^(L*-1) / L*`` for sparse graphs and ``q^(L*-1) exp(rho beta sup|H|)``
    for dense ones.  At or above the threshold the value is still returned,
    flagged with ``above_critical``.
    """
    if not report.has_cycles or math.isinf(report.girth):
        raise ValueError("error bound needs a graph with at least one cycle")
    temp = critical_beta(m)
    l_star = int(report.girth)
    q = temp.q
    if report.label == "sparse":
        bound = q ** (l_star - 1) / l_star
    else:
        bound = q ** (l_star - 1) * math.exp(rho * m.beta * temp.sup_h)
    above = q >= 1.0
    if above:
        warnings.warn(f"q = {q:.6g} >= 1: bound does not decay with cycle length", AboveCriticalWarning, stacklevel=2)
    return BoundReport(q, l_star, report.label, bound, rho, above)


# ---------------------------------------------------------------------------
# Forest-family identities


def single_cycle_identity(tc: TreeCotree, e: int) -> tuple[ForestFamily, list[tuple[int, ...]]]:
    """Both sides of ``F(e o T) = F(T) + e o (F(T) - F(T_e) o C~_e)``.

    Returns:
        ``left``, the forests of ``T + e`` by direct enumeration, and
        ``right``, the multiset assembled from the right-hand side as a list
        of sorted edge tuples (duplicates kept).
    """
    g = tc.graph
    if e not in tc.cotree_edges:
        raise ValueError(f"edge {e} is not a cotree edge")
    left = enumerate_forests(g, (*tc.tree_edges, e))
    f_tree = Counter(enumerate_forests(g, tc.tree_edges).forests)
    reduced = tc.reduced_cycle(e)
    with_cycle = Counter(
        tuple(sorted(set(f) | reduced)) for f in enumerate_forests(g, tc.reduced_tree(e)).forests
    )
    remainder = f_tree - with_cycle
    if sum(remainder.values()) != sum(f_tree.values()) - sum(with_cycle.values()):
        raise AssertionError("F(T_e) o C~_e is not contained in F(T)")
    right = list(f_tree.elements())
    right += [tuple(sorted((*f, e))) for f in remainder.elements()]
    return left, right


@dataclass(frozen=True)
class CorrectionFamily:
    """Edge sets subtracted for a group of cotree edges.

    ``reduced_sets`` are tree-edge sets (the C~ terms); ``sets`` are the
    same with the cotree edges attached, ready for polynomial evaluation.
    ``reduced_tree`` is the tree left after removing every reduced cycle of
    the group.
    """

    cotree: tuple[int, ...]
    labels: tuple[str, ...]
    reduced_sets: tuple[frozenset[int], ...]
    sets: tuple[frozenset[int], ...]
    reduced_tree: frozenset[int]


def q_correction_sets(tc: TreeCotree, edges: Sequence[int]) -> CorrectionFamily:
    """Subtraction family ``Q(e1, e2)`` or ``Q(e1, e2, e3)``.

    Pairs: ``C~_{1o2}, C~_1, C~_2`` and, when ``C_{1o2} != C_{1[]2}``,
    ``C~_{1[]2}``.  Triples: ``C~_{1o2o3}``, the three pairwise unions, and
    the pairwise and triple symmetric differences, each gated the same way.
    """
    edges = tuple(edges)
    if len(edges) not in (2, 3) or len(set(edges)) != len(edges):
        raise ValueError("need 2 or 3 distinct cotree edges")
    for e in edges:
        if e not in tc.cotree_edges:
            raise ValueError(f"edge {e} is not a cotree edge")
    red = {e: tc.reduced_cycle(e) for e in edges}
    full = {e: red[e] | {e} for e in edges}

    labels: list[str] = []
    reduced: list[frozenset[int]] = []

    def union(group):
        out = frozenset()
        for e in group:
            out |= red[e]
        return out

    def symdiff(group):
        out = frozenset()
        for e in group:
            out ^= red[e]
        return out

    def gated(group) -> bool:
        # C_o == C_[] exactly when the cycles share no edge pairwise-overall
        circ = frozenset().union(*(full[e] for e in group))
        box = frozenset()
        for e in group:
            box ^= full[e]
        return circ != box

    if len(edges) == 2:
        e1, e2 = edges
        labels += [f"o({e1},{e2})", f"({e1})", f"({e2})"]
        reduced += [union(edges), red[e1], red[e2]]
        if gated(edges):
            labels.append(f"[]({e1},{e2})")
            reduced.append(symdiff(edges))
    else:
        labels.append("o({},{},{})".format(*edges))
        reduced.append(union(edges))
        for pair in combinations(edges, 2):
            labels.append("o({},{})".format(*pair))
            reduced.append(union(pair))
        for pair in combinations(edges, 2):
            if gated(pair):
                labels.append("[]({},{})".format(*pair))
                reduced.append(symdiff(pair))
        if gated(edges):
            labels.append("[]({},{},{})".format(*edges))
            reduced.append(symdiff(edges))
    attached = tuple(r | set(edges) for r in reduced)
    return CorrectionFamily(edges, tuple(labels), tuple(reduced), attached, tc.reduced_tree(*edges))


# ---------------------------------------------------------------------------
# First-order expansion


def reference_tree(m: PairwiseModel) -> TreeCotree:
    """Maximum spanning tree under ``w_e = max_s |exp(beta H_e) - 1|``."""
    return max_spanning_tree(m.graph, edge_weight_for_mst(m))


def tree_partition(m: PairwiseModel, edges) -> float:
    """``sum_s exp(beta sum_{e in edges} H_e(s))`` for an acyclic edge set."""
    factors = [(m.graph.endpoints(k), np.exp(m.beta * m.couplings[k])) for k in edges]
    return contract(m.state_sizes, factors)


@dataclass(frozen=True)
class CorrectionTerm:
    """Cycle correction of one cotree edge in the first-order expansion.

    ``value = sum_s beta^|C_e| prod_{e' in C_e} H_e'(s) exp(beta H|_{T_e})``.
    """

    edge: int
    cycle: Cycle
    reduced_tree: frozenset[int]
    value: float

    @property
    def order(self) -> int:
        return self.cycle.length


def correction_terms(m: PairwiseModel, tc: TreeCotree) -> list[CorrectionTerm]:
    out = []
    for e in tc.cotree_edges:
        cycle = tc.cycle(e)
        reduced = tc.reduced_tree(e)
        factors = [(m.graph.endpoints(k), m.beta * m.couplings[k]) for k in sorted(cycle.edges)]
        factors += [(m.graph.endpoints(k), np.exp(m.beta * m.couplings[k])) for k in sorted(reduced)]
        out.append(CorrectionTerm(e, cycle, reduced, contract(m.state_sizes, factors)))
    return out


def first_order_partition(m: PairwiseModel, tc: TreeCotree | None = None) -> float:
    """First-order expansion of Z around the spanning tree of ``tc``.

    ``Z_1 = sum_s (1 + beta sum_{e in cotree} H_e(s)) exp(beta H|_T)
    - sum_{e in cotree} sum_s beta^|C_e| prod_{C_e} H(s) exp(beta H|_{T_e})``.
    Every sum is a contraction over a tree plus at most one extra edge or
    one cycle, never a sweep over all configurations.
    """
    tc = reference_tree(m) if tc is None else tc
    if critical_beta(m).regime != "below_critical":
        warnings.warn("first-order expansion evaluated at q >= 1", AboveCriticalWarning, stacklevel=2)
    sizes = m.state_sizes
    tree_factors = [(m.graph.endpoints(k), np.exp(m.beta * m.couplings[k])) for k in tc.tree_edges]
    total = contract(sizes, tree_factors)
    for e in tc.cotree_edges:
        total += contract(sizes, tree_factors + [(m.graph.endpoints(e), m.beta * m.couplings[e])])
    for term in correction_terms(m, tc):
        total -= term.value
    return total


def cycle_observable(m: PairwiseModel, c: Cycle | frozenset[int], state: Sequence[int]) -> float:
    """``prod_{e in c} beta H_e(state)``."""
    edges = c.edges if isinstance(c, Cycle) else c
    out = 1.0
    for k in edges:
        i, j = m.graph.endpoints(k)
        out *= m.beta * float(m.couplings[k][state[i], state[j]])
    return out
