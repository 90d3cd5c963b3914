"""Sum-product contraction of small factor graphs by variable elimination.

Used for every "sum over configurations of a product of edge tables"
in the package: forest terms (tables of ``exp(beta H) - 1``), tree partition
functions, and the ring-shaped cycle corrections.  Factors may be signed.
Elimination order is greedy min-degree, which on a forest is leaf
elimination and on a single cycle with pendant trees never creates a
factor of more than two variables.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = ["Factor", "contract", "contract_log"]

Factor = tuple[tuple[int, ...], np.ndarray]

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _multiply_sum(factors: list[Factor], keep: tuple[int, ...]) -> np.ndarray:
    letter = {}
    for scope, _ in factors:
        for v in scope:
            letter.setdefault(v, _LETTERS[len(letter)])
    subscripts = ",".join("".join(letter[v] for v in scope) for scope, _ in factors)
    out = "".join(letter[v] for v in keep)
    return np.einsum(f"{subscripts}->{out}", *(t for _, t in factors))


def _contract_scaled(sizes: Sequence[int], factors: Iterable[Factor]) -> tuple[float, int]:
    """``(mantissa, exponent)`` with value ``mantissa * 2**exponent``.

    Peaks pulled out at each elimination step are multiplied into a binary
    mantissa/exponent pair, so the result is as exact as plain float
    products (powers of two come out exact) yet cannot overflow.
    """
    pending: list[Factor] = []
    touched = set()
    for scope, table in factors:
        scope = tuple(int(v) for v in scope)
        table = np.asarray(table, dtype=float)
        if table.shape != tuple(sizes[v] for v in scope):
            raise ValueError(f"factor on {scope} has shape {table.shape}")
        if len(set(scope)) != len(scope):
            raise ValueError(f"repeated variable in scope {scope}")
        pending.append((scope, table))
        touched.update(scope)

    mant, expo = 1.0, 0

    def scale(x: float) -> None:
        nonlocal mant, expo
        m, e = math.frexp(mant * x)
        mant, expo = m, expo + e

    for v in range(len(sizes)):
        if v not in touched:
            scale(float(sizes[v]))

    remaining = set(touched)
    while remaining:
        neighbours = {v: set() for v in remaining}
        for scope, _ in pending:
            for v in scope:
                neighbours[v].update(scope)
        v = min(remaining, key=lambda u: (len(neighbours[u]), u))
        involved = [f for f in pending if v in f[0]]
        pending = [f for f in pending if v not in f[0]]
        keep = tuple(sorted(neighbours[v] - {v}))
        new = _multiply_sum(involved, keep)
        if keep:
            peak = float(np.abs(new).max()) if new.size else 0.0
            if peak == 0.0:
                return 0.0, 0
            # dividing by a power of two keeps the table entries exact
            _, e = math.frexp(peak)
            pending.append((keep, new / math.ldexp(1.0, e)))
            expo += e
        else:
            value = float(new)
            if value == 0.0:
                return 0.0, 0
            scale(value)
        remaining.discard(v)
    return mant, expo


def contract_log(sizes: Sequence[int], factors: Iterable[Factor]) -> tuple[float, float]:
    """Signed log of ``sum_s prod_f f(s_scope)``.

    Args:
        sizes: State count of every variable; variables absent from all
            factors contribute their state count.
        factors: ``(scope, table)`` pairs, table axes in scope order.

    Returns:
        ``(sign, log|value|)`` with sign in ``{-1, 0, 1}``.
    """
    mant, expo = _contract_scaled(sizes, factors)
    if mant == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, mant), math.log(abs(mant)) + expo * math.log(2.0)


def contract(sizes: Sequence[int], factors: Iterable[Factor]) -> float:
    """``sum_s prod_f f(s_scope)`` as a float (may overflow to inf)."""
    mant, expo = _contract_scaled(sizes, factors)
    try:
        return math.ldexp(mant, expo)
    except OverflowError:
        return math.copysign(math.inf, mant)
