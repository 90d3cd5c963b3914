"""Sum-product belief propagation for pairwise models.

Two schedules:

``tree_two_pass``
    Exact collect/distribute passes on an acyclic graph; also yields log Z
    from the message normalizers.
``damped_parallel``
    Synchronous updates on any graph, ``new = (1 - damping) * update +
    damping * old``, until the largest change of any message entry drops
    below ``tol``.  Non-convergence is reported, not raised.

Messages are kept in the log domain so low temperatures do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numba import njit
from scipy import sparse

from .model import PairwiseModel

__all__ = [
    "Beliefs",
    "run_bp",
    "log_partition_tree",
    "kl_divergence",
    "node_kl",
    "DirectedEdges",
    "damped_bp_batch",
]

Schedule = Literal["tree_two_pass", "damped_parallel"]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000
DEFAULT_DAMPING = 0.5


@dataclass(frozen=True)
class Beliefs:
    """Per-node distributions with convergence metadata.

    ``log_z`` is only set by the exact tree schedule.
    """

    marginals: tuple[np.ndarray, ...]
    converged: bool
    iterations: int
    max_residual: float
    log_z: float | None = None

    def __len__(self) -> int:
        return len(self.marginals)


def logsumexp(x: np.ndarray, axis: int | None = None):
    # thin numpy version; scipy's array-API dispatch dominates on tiny tables
    peak = np.max(x, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - peak), axis=axis, keepdims=True)) + peak
    return out.item() if axis is None else np.squeeze(out, axis)


def _normalize_log(v: np.ndarray) -> tuple[np.ndarray, float]:
    c = float(logsumexp(v))
    return v - c, c


def _tree_two_pass(m: PairwiseModel) -> Beliefs:
    g = m.graph
    n = g.n_nodes
    if not g.is_forest():
        raise ValueError("tree_two_pass needs an acyclic graph")
    adj = g.adjacency
    log_psi = [m.log_factor(k) for k in range(g.n_edges)]

    def psi(i: int, j: int, k: int) -> np.ndarray:
        # log table indexed [s_i, s_j]
        return log_psi[k] if i < j else log_psi[k].T

    # messages[(i, j)] = normalized log message i -> j over s_j
    messages: dict[tuple[int, int], np.ndarray] = {}
    log_z = 0.0
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        order, parent = [], {root: (-1, -1)}
        stack = [root]
        seen[root] = True
        while stack:
            u = stack.pop()
            order.append(u)
            for w, k in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = (u, k)
                    stack.append(w)
        # collect: leaves to root
        for u in reversed(order):
            p, k = parent[u]
            incoming = np.zeros(m.state_sizes[u])
            for w, kw in adj[u]:
                if w != p:
                    incoming += messages[(w, u)]
            if p < 0:
                log_z += float(logsumexp(incoming))
                continue
            msg, c = _normalize_log(logsumexp(psi(u, p, k) + incoming[:, None], axis=0))
            messages[(u, p)] = msg
            log_z += c
        # distribute: root to leaves
        for u in order:
            p, _ = parent[u]
            total = np.zeros(m.state_sizes[u])
            for w, _ in adj[u]:
                total += messages[(w, u)]
            for w, kw in adj[u]:
                if w == p:
                    continue
                cavity = total - messages[(w, u)]
                messages[(u, w)], _ = _normalize_log(logsumexp(psi(u, w, kw) + cavity[:, None], axis=0))
    marginals = []
    for u in range(n):
        total = np.zeros(m.state_sizes[u])
        for w, _ in adj[u]:
            total += messages[(w, u)]
        b, _ = _normalize_log(total)
        marginals.append(np.exp(b))
    return Beliefs(tuple(marginals), True, 2, 0.0, log_z)


@dataclass(frozen=True)
class DirectedEdges:
    """Directed-edge layout: edge ``k = (i, j)`` gives ``2k: i->j``, ``2k+1: j->i``."""

    src: np.ndarray
    dst: np.ndarray
    n_nodes: int
    width: int

    @classmethod
    def of(cls, m: PairwiseModel) -> "DirectedEdges":
        src, dst = [], []
        for i, j, _ in m.graph.edges:
            src += [i, j]
            dst += [j, i]
        return cls(np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), m.n_nodes, max(m.state_sizes, default=1))

    def log_psi(self, m: PairwiseModel) -> np.ndarray:
        """``(D, S, S)`` array of ``beta H[s_src, s_dst]``; -inf on padded states."""
        out = np.full((len(self.src), self.width, self.width), -np.inf)
        for k in range(m.graph.n_edges):
            t = m.log_factor(k)
            out[2 * k, : t.shape[0], : t.shape[1]] = t
            out[2 * k + 1, : t.shape[1], : t.shape[0]] = t.T
        return out

    def node_mask(self, sizes: Sequence[int]) -> np.ndarray:
        """0 on valid states, -inf on padding, shape ``(N, S)``."""
        mask = np.full((self.n_nodes, self.width), -np.inf)
        for v, s in enumerate(sizes):
            mask[v, :s] = 0.0
        return mask


def _lse(x: np.ndarray, axis: int) -> np.ndarray:
    # state axes are short; slice-wise ufuncs beat numpy's axis reductions there
    parts = [np.take(x, k, axis=axis) for k in range(x.shape[axis])]
    peak = parts[0]
    for p in parts[1:]:
        peak = np.maximum(peak, p)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    total = np.exp(parts[0] - peak)
    for p in parts[1:]:
        total += np.exp(p - peak)
    with np.errstate(divide="ignore"):
        return peak + np.log(total)


@njit(cache=True)
def _damped_kernel(src, dst, rev, in_ptr, in_edges, sizes, log_psi, lm, tol, max_iters, damping):
    n_dir, width = lm.shape
    n_nodes = len(in_ptr) - 1
    log_keep = math.log(damping) if damping > 0 else -math.inf
    log_new = math.log1p(-damping)
    totals = np.zeros((n_nodes, width))
    cavity = np.empty(width)
    upd = np.empty(width)
    weight = np.empty(width)
    new = lm.copy()
    res = math.inf
    for it in range(1, max_iters + 1):
        for v in range(n_nodes):
            for s in range(sizes[v]):
                acc = 0.0
                for p in range(in_ptr[v], in_ptr[v + 1]):
                    acc += lm[in_edges[p], s]
                totals[v, s] = acc
        res = 0.0
        for d in range(n_dir):
            u = src[d]
            ns = sizes[u]
            nt = sizes[dst[d]]
            for s in range(ns):
                cavity[s] = totals[u, s] - lm[rev[d], s]
            for t in range(nt):
                peak = -math.inf
                for s in range(ns):
                    peak = max(peak, log_psi[d, s, t] + cavity[s])
                acc = 0.0
                for s in range(ns):
                    acc += math.exp(log_psi[d, s, t] + cavity[s] - peak)
                upd[t] = peak + math.log(acc)
            peak = -math.inf
            for t in range(nt):
                peak = max(peak, upd[t])
            acc = 0.0
            for t in range(nt):
                weight[t] = math.exp(upd[t] - peak)
                acc += weight[t]
            for t in range(nt):
                p_old = math.exp(lm[d, t])
                p_new = (1.0 - damping) * weight[t] / acc + damping * p_old
                if p_new > 0.0:
                    new[d, t] = math.log(p_new)
                else:
                    # underflow: redo the mixture in the log domain
                    x = log_new + upd[t] - peak - math.log(acc)
                    y = log_keep + lm[d, t]
                    hi = max(x, y)
                    new[d, t] = hi if hi == -math.inf else hi + math.log1p(math.exp(min(x, y) - hi))
                res = max(res, abs(p_new - p_old))
        lm, new = new, lm
        if res < tol:
            return lm, True, it, res
    return lm, False, max_iters, res


def _initial_messages(layout: DirectedEdges, node_mask: np.ndarray, batch: int, init) -> tuple[np.ndarray, np.ndarray]:
    dst_mask = node_mask[layout.dst]
    valid = np.isfinite(dst_mask)
    if init is None:
        lm = np.broadcast_to(dst_mask, (batch, len(layout.dst), layout.width)).copy()
    else:
        with np.errstate(divide="ignore"):
            lm = np.log(np.broadcast_to(init, (batch, len(layout.dst), layout.width))) + dst_mask
    return np.where(valid, lm - _lse(lm, -1)[..., None], 0.0), valid


def _damped_numpy(layout, log_psi, node_mask, lm, valid, tol, max_iters, damping):
    batch = log_psi.shape[0]
    src, dst = layout.src, layout.dst
    n_dir = len(src)
    width = layout.width
    padded = not valid.all()
    rev = np.arange(n_dir) ^ 1
    incidence = sparse.csr_matrix((np.ones(n_dir), (dst, np.arange(n_dir))), shape=(layout.n_nodes, n_dir))
    src_mask = node_mask[src]
    log_keep = math.log(damping) if damping > 0 else -math.inf
    log_new = math.log1p(-damping)

    def node_totals(msgs: np.ndarray) -> np.ndarray:
        b = msgs.shape[0]
        flat = np.moveaxis(msgs, 0, 1).reshape(n_dir, b * width)
        return np.moveaxis((incidence @ flat).reshape(layout.n_nodes, b, width), 1, 0)

    converged = np.zeros(batch, dtype=bool)
    iterations = np.zeros(batch, dtype=np.int64)
    residual = np.full(batch, np.inf)
    idx = np.arange(batch)
    it = 0
    while len(idx) and it < max_iters:
        it += 1
        cur = lm[idx]
        cavity = node_totals(cur)[:, src] - cur[:, rev]
        if padded:
            cavity = cavity + src_mask
        upd = _lse(log_psi[idx] + cavity[..., :, None], -2)
        if padded:
            upd = np.where(valid, upd, -np.inf)
        upd = upd - _lse(upd, -1)[..., None]
        if damping > 0:
            new = np.logaddexp(log_new + upd, log_keep + (np.where(valid, cur, -np.inf) if padded else cur))
        else:
            new = upd
        if padded:
            new = np.where(valid, new, 0.0)
        change = np.where(valid, np.abs(np.exp(new) - np.exp(cur)), 0.0)
        res = change.reshape(len(idx), -1).max(axis=1)
        lm[idx] = new
        iterations[idx] = it
        residual[idx] = res
        done = res < tol
        converged[idx[done]] = True
        idx = idx[~done]
    return lm, converged, iterations, residual


def damped_bp_batch(
    layout: DirectedEdges,
    log_psi: np.ndarray,
    node_mask: np.ndarray,
    init: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    damping: float = DEFAULT_DAMPING,
    engine: Literal["compiled", "numpy"] = "compiled",
    return_messages: bool = False,
):
    """Damped synchronous BP for a batch of models sharing one graph.

    Args:
        layout: Directed-edge structure.
        log_psi: ``(B, D, S, S)`` log pair potentials.
        node_mask: ``(N, S)`` padding mask.
        init: Optional ``(B, D, S)`` or ``(D, S)`` initial messages
            (probabilities, normalized internally); uniform by default.
        engine: ``"compiled"`` runs a JIT message loop per batch member;
            ``"numpy"`` vectorizes over the batch.  Both perform the same
            updates and agree to rounding.

    Returns:
        ``(log_beliefs (B, N, S), converged (B,), iterations (B,),
        residual (B,))``.  Each member stops at its own convergence.  With
        ``return_messages`` the final ``(B, D, S)`` log messages are
        appended.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    batch = log_psi.shape[0]
    n_dir = len(layout.src)
    lm, valid = _initial_messages(layout, node_mask, batch, init)
    if n_dir == 0:
        converged = np.ones(batch, dtype=bool)
        iterations = np.zeros(batch, dtype=np.int64)
        residual = np.zeros(batch)
    elif engine == "numpy":
        lm, converged, iterations, residual = _damped_numpy(
            layout, log_psi, node_mask, lm, valid, tol, max_iters, damping
        )
    elif engine == "compiled":
        order = np.argsort(layout.dst, kind="stable")
        in_ptr = np.searchsorted(layout.dst[order], np.arange(layout.n_nodes + 1))
        sizes = np.isfinite(node_mask).sum(axis=1).astype(np.int64)
        rev = np.arange(n_dir) ^ 1
        converged = np.zeros(batch, dtype=bool)
        iterations = np.zeros(batch, dtype=np.int64)
        residual = np.zeros(batch)
        for b in range(batch):
            out, conv, its, res = _damped_kernel(
                layout.src, layout.dst, rev, in_ptr, order, sizes,
                np.ascontiguousarray(log_psi[b]), lm[b].copy(), tol, max_iters, damping,
            )
            lm[b] = np.where(valid, out, 0.0)
            converged[b], iterations[b], residual[b] = conv, its, res
    else:
        raise ValueError(f"unknown engine {engine!r}")
    totals = np.zeros((batch, layout.n_nodes, layout.width))
    np.add.at(totals, (slice(None), layout.dst), lm)
    totals += node_mask
    log_beliefs = totals - _lse(totals, -1)[..., None]
    if return_messages:
        return log_beliefs, converged, iterations, residual, np.where(valid, lm, -np.inf)
    return log_beliefs, converged, iterations, residual


def run_bp(
    m: PairwiseModel,
    schedule: Schedule = "damped_parallel",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    damping: float = DEFAULT_DAMPING,
    init: np.ndarray | None = None,
) -> Beliefs:
    """Belief propagation on ``m``.

    ``init`` seeds the damped schedule with ``(2E, S)`` message tables
    (see :class:`DirectedEdges` for the row order).
    """
    if schedule == "tree_two_pass":
        return _tree_two_pass(m)
    if schedule != "damped_parallel":
        raise ValueError(f"unknown schedule {schedule!r}")
    layout = DirectedEdges.of(m)
    log_psi = layout.log_psi(m)[None]
    mask = layout.node_mask(m.state_sizes)
    lb, conv, iters, res = damped_bp_batch(layout, log_psi, mask, init, tol, max_iters, damping)
    marginals = []
    for v, s in enumerate(m.state_sizes):
        p = np.exp(lb[0, v, :s])
        marginals.append(p / p.sum())
    return Beliefs(tuple(marginals), bool(conv[0]), int(iters[0]), float(res[0]))


def log_partition_tree(m: PairwiseModel) -> float:
    """Exact log Z of an acyclic model from the two-pass normalizers."""
    return _tree_two_pass(m).log_z


def node_kl(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    # rounding can push a vanishing divergence just below zero
    return max(0.0, float(np.sum(p[support] * np.log(p[support] / q[support]))))


def kl_divergence(p: Beliefs | Sequence[np.ndarray], q: Beliefs | Sequence[np.ndarray]) -> float:
    """Node-averaged ``KL(p_i || q_i)``."""
    pm = p.marginals if isinstance(p, Beliefs) else tuple(p)
    qm = q.marginals if isinstance(q, Beliefs) else tuple(q)
    if len(pm) != len(qm):
        raise ValueError(f"node counts differ: {len(pm)} vs {len(qm)}")
    if not pm:
        return 0.0
    return sum(node_kl(a, b) for a, b in zip(pm, qm)) / len(pm)
