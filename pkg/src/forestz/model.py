"""Pairwise models on finite state spaces.

The Boltzmann weight of a configuration ``s`` is
``exp(beta * sum_{(ij) in E} H_ij(s_i, s_j))``.  Coupling tables are stored
per canonical edge ``(i, j)``, ``i < j``, with shape ``(n_i, n_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .graph import InteractionGraph
from .special import lambert_w

__all__ = [
    "PairwiseModel",
    "TemperatureReport",
    "ising_model",
    "table_model",
    "critical_beta",
    "edge_factor",
    "edge_factor_table",
    "edge_weight_for_mst",
    "W1",
    "KAPPA",
]

#: W(1), the omega constant; ``beta * sup|H| < W1`` is the q < 1 regime.
W1 = lambert_w(1.0)

#: Safety factor on the critical temperature, ``T_c = KAPPA * sup|H| / W(1)``.
KAPPA = 1.0


@dataclass(frozen=True)
class PairwiseModel:
    """Two-body Hamiltonian on an interaction graph.

    Attributes:
        graph: Interaction graph; edge ``k`` carries ``couplings[k]``.
        state_sizes: Number of states of each node (>= 2).
        couplings: Per-edge tables ``H_ij[s_i, s_j]`` in edge order.
        beta: Inverse temperature.
    """

    graph: InteractionGraph
    state_sizes: tuple[int, ...]
    couplings: tuple[np.ndarray, ...]
    beta: float = 1.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.state_sizes)
        if len(sizes) != self.graph.n_nodes:
            raise ValueError("one state size per node required")
        if any(s < 2 for s in sizes):
            raise ValueError("state sizes must be >= 2")
        if len(self.couplings) != self.graph.n_edges:
            raise ValueError("one coupling table per edge required")
        tables = []
        for k, table in enumerate(self.couplings):
            i, j = self.graph.endpoints(k)
            arr = np.array(table, dtype=float)
            if arr.shape != (sizes[i], sizes[j]):
                raise ValueError(f"edge {k} ({i}, {j}) table shape {arr.shape}, expected {(sizes[i], sizes[j])}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"edge {k} table has non-finite entries")
            arr.setflags(write=False)
            tables.append(arr)
        beta = float(self.beta)
        if not beta >= 0 or math.isinf(beta):
            raise ValueError(f"beta must be finite and >= 0, got {beta}")
        object.__setattr__(self, "state_sizes", sizes)
        object.__setattr__(self, "couplings", tuple(tables))
        object.__setattr__(self, "beta", beta)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def sup_h(self) -> float:
        """``sup |H_ij|`` over all edges and state pairs."""
        return max((float(np.abs(t).max()) for t in self.couplings), default=0.0)

    def with_beta(self, beta: float) -> "PairwiseModel":
        return replace(self, beta=beta)

    def table(self, i: int, j: int) -> np.ndarray:
        """Coupling table indexed ``[s_i, s_j]`` for either orientation."""
        k = self.graph.find_edge(i, j)
        t = self.couplings[k]
        return t if i < j else t.T

    def restrict(self, edge_ids) -> "PairwiseModel":
        """Same nodes and beta, keeping only the given edges."""
        keep = sorted(set(edge_ids))
        sub = self.graph.subgraph(keep)
        return PairwiseModel(sub, self.state_sizes, tuple(self.couplings[k] for k in keep), self.beta)

    def log_factor(self, k: int) -> np.ndarray:
        """``beta * H_k`` as an ``(n_i, n_j)`` array."""
        return self.beta * self.couplings[k]

    def energy_terms(self, states: np.ndarray) -> np.ndarray:
        """Per-edge ``H_e(s)`` for configurations ``states`` of shape ``(..., N)``."""
        states = np.asarray(states)
        out = np.empty(states.shape[:-1] + (self.graph.n_edges,))
        for k, (i, j, _) in enumerate(self.graph.edges):
            out[..., k] = self.couplings[k][states[..., i], states[..., j]]
        return out


@dataclass(frozen=True)
class TemperatureReport:
    """Where ``beta`` sits relative to the q = 1 threshold.

    ``q = beta * sup_h * exp(beta * sup_h)``; the regime is
    ``"below_critical"`` iff ``q < 1``.  A model with ``sup_h == 0`` is free:
    ``beta_c`` is infinite and ``q`` is zero.
    """

    sup_h: float
    beta: float
    beta_c: float
    q: float
    regime: str

    @property
    def free(self) -> bool:
        return self.sup_h == 0.0

    @property
    def t_c(self) -> float:
        return 0.0 if self.free else 1.0 / self.beta_c


def ising_model(
    g: InteractionGraph, j: float = 1.0, half_factor: bool = False, beta: float = 1.0
) -> PairwiseModel:
    """Zero-field Ising model with ``H_ij(s, s') = J s s'`` on spins ``(-1, +1)``.

    State index 0 is spin -1 and index 1 is spin +1.  ``half_factor``
    halves the coupling, matching ``H = -(J/2) sum_ij A_ij s_i s_j`` over
    ordered pairs.
    """
    coupling = 0.5 * j if half_factor else float(j)
    spins = np.array([-1.0, 1.0])
    table = coupling * np.outer(spins, spins)
    return PairwiseModel(g, (2,) * g.n_nodes, (table,) * g.n_edges, beta)


def table_model(
    g: InteractionGraph,
    tables: Sequence[np.ndarray],
    beta: float = 1.0,
    state_sizes: Sequence[int] | None = None,
) -> PairwiseModel:
    """Model with explicit per-edge tables; state sizes inferred when omitted."""
    if state_sizes is None:
        sizes = [0] * g.n_nodes
        for k, t in enumerate(tables):
            i, j = g.endpoints(k)
            sizes[i] = max(sizes[i], np.shape(t)[0])
            sizes[j] = max(sizes[j], np.shape(t)[1])
        state_sizes = [s if s else 2 for s in sizes]
    return PairwiseModel(g, tuple(state_sizes), tuple(tables), beta)


def critical_beta(m: PairwiseModel, kappa: float = KAPPA) -> TemperatureReport:
    """Threshold ``beta_c = W(1) / (kappa * sup|H|)`` and q at ``m.beta``."""
    sup_h = m.sup_h
    if sup_h == 0.0:
        return TemperatureReport(0.0, m.beta, math.inf, 0.0, "below_critical")
    x = m.beta * sup_h
    # far above threshold exp(x) overflows; q is then infinite
    q = x * math.exp(x) if x < 700.0 else math.inf
    beta_c = W1 / (kappa * sup_h)
    return TemperatureReport(sup_h, m.beta, beta_c, q, "below_critical" if q < 1.0 else "at_or_above_critical")


def edge_factor(m: PairwiseModel, e: int, s_i: int, s_j: int) -> float:
    """Mayer-type edge variable ``exp(beta H_e(s_i, s_j)) - 1``."""
    return math.expm1(m.beta * float(m.couplings[e][s_i, s_j]))


def edge_factor_table(m: PairwiseModel, e: int) -> np.ndarray:
    return np.expm1(m.beta * m.couplings[e])


def edge_weight_for_mst(m: PairwiseModel, e: int | None = None):
    """``max_s |exp(beta H_e(s)) - 1|``; all edges as a list when ``e`` is None."""
    if e is None:
        return [float(np.abs(edge_factor_table(m, k)).max()) for k in range(m.graph.n_edges)]
    return float(np.abs(edge_factor_table(m, e)).max())
