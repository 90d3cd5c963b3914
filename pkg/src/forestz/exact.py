"""Ground truth by exhaustive enumeration of configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from .model import PairwiseModel

__all__ = ["ExactResult", "exact_partition", "exact_marginals", "enumerate_states", "DEFAULT_STATE_CAP"]

DEFAULT_STATE_CAP = 2**22
_CHUNK = 2**16


@dataclass(frozen=True)
class ExactResult:
    """``z`` is summed directly in linear scale when no weight can overflow,
    so integer-valued partition functions come out exact."""

    log_z: float
    marginals: tuple[np.ndarray, ...]
    z: float


def enumerate_states(sizes, start: int, stop: int) -> np.ndarray:
    """Configurations ``start..stop-1`` in mixed radix, node 0 least significant."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((stop - start, len(sizes)), dtype=np.int64)
    for n, size in enumerate(sizes):
        out[:, n] = idx % size
        idx //= size
    return out


def _pairwise_logaddexp(values: list[np.ndarray]) -> np.ndarray:
    while len(values) > 1:
        nxt = [np.logaddexp(values[i], values[i + 1]) for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            nxt.append(values[-1])
        values = nxt
    return values[0]


def _check_cap(m: PairwiseModel, cap: int) -> int:
    total = math.prod(m.state_sizes)
    if total > cap:
        raise CapExceededError("configuration count", total, cap)
    return total


def exact_partition(m: PairwiseModel, cap: int = DEFAULT_STATE_CAP) -> ExactResult:
    """Partition function and single-site marginals by full enumeration.

    Configurations are swept in fixed-size chunks; each chunk is reduced with
    log-sum-exp and chunk results are combined pairwise, so the result does
    not depend on how the sweep is partitioned beyond rounding.
    """
    total = _check_cap(m, cap)
    sizes = m.state_sizes
    n = len(sizes)
    if n == 0:
        return ExactResult(0.0, (), 1.0)
    chunk_logs: list[np.ndarray] = []
    chunk_sums: list[float] = []
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        states = enumerate_states(sizes, start, stop)
        logw = m.beta * m.energy_terms(states).sum(axis=1) if m.graph.n_edges else np.zeros(stop - start)
        peak = logw.max()
        w = np.exp(logw - peak)
        if peak < 600.0:
            chunk_sums.append(float(np.exp(logw).sum()))
        # row n holds log sum_{s_n = a} w for node n; padded with -inf
        width = max(sizes)
        rows = np.full((n, width), -np.inf)
        for v in range(n):
            with np.errstate(divide="ignore"):
                rows[v, : sizes[v]] = np.log(np.bincount(states[:, v], weights=w, minlength=sizes[v])) + peak
        chunk_logs.append(rows)
    rows = _pairwise_logaddexp(chunk_logs)
    log_z = float(np.logaddexp.reduce(rows[0, : sizes[0]]))
    marginals = []
    for v in range(n):
        p = np.exp(rows[v, : sizes[v]] - log_z)
        marginals.append(p / p.sum())
    if len(chunk_sums) == len(chunk_logs):
        z = math.fsum(chunk_sums)
    else:
        z = math.exp(log_z) if log_z < 709.0 else math.inf
    return ExactResult(log_z, tuple(marginals), z)


def exact_marginals(m: PairwiseModel, cap: int = DEFAULT_STATE_CAP) -> tuple[np.ndarray, ...]:
    return exact_partition(m, cap).marginals


def brute_force_sum(sizes, factors, cap: int = 2**14) -> float:
    """``sum_s prod_f f(s)`` by enumeration; cross-check for small contractions."""
    total = math.prod(sizes)
    if total > cap:
        raise CapExceededError("configuration count", total, cap)
    states = enumerate_states(sizes, 0, total)
    acc = np.ones(total)
    for scope, table in factors:
        acc *= np.asarray(table)[tuple(states[:, v] for v in scope)]
    return float(acc.sum())
