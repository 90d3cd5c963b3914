"""Scalar special functions: Lambert W and incomplete gamma."""

from __future__ import annotations

import math

__all__ = ["lambert_w", "gammainc_lower", "gammainc_upper", "lower_gamma_scaled"]

_EPS = 1e-16
_TINY = 1e-300


def lambert_w(x: float, tol: float = 1e-15, max_iter: int = 100) -> float:
    """Principal branch of the Lambert W function for ``x >= 0``.

    Halley iteration on ``w e^w - x`` started from ``log(1 + x)``.
    """
    x = float(x)
    if x < 0 or math.isnan(x):
        raise ValueError(f"lambert_w needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = math.log1p(x)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def _series_p(a: float, x: float) -> float:
    # sum_n x^n / (a (a+1) ... (a+n)); times x^a e^-x / Gamma(a) gives P(a, x)
    term = 1.0 / a
    total = term
    n = 0
    while True:
        n += 1
        term *= x / (a + n)
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
        if n > 10000:
            raise ArithmeticError("incomplete gamma series did not converge")


def _cf_q(a: float, x: float) -> float:
    # modified Lentz for Gamma(a, x) e^x x^-a
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)`` for ``a > 0, x >= 0``."""
    if a <= 0 or x < 0:
        raise ValueError("gammainc_lower needs a > 0 and x >= 0")
    if x == 0:
        return 0.0
    log_pref = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        return math.exp(log_pref) * _series_p(a, x)
    return 1.0 - math.exp(log_pref) * _cf_q(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0 or x < 0:
        raise ValueError("gammainc_upper needs a > 0 and x >= 0")
    if x == 0:
        return 1.0
    log_pref = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        return 1.0 - math.exp(log_pref) * _series_p(a, x)
    return math.exp(log_pref) * _cf_q(a, x)


def lower_gamma_scaled(a: float, x: float) -> float:
    """``e^x x^-a gamma(a, x)`` for real ``x``, analytic through ``x = 0``.

    For ``x`` below the series/continued-fraction split (including every
    negative ``x``) this is the power series ``sum_n x^n / (a)_(n+1)``; above
    it, ``e^x x^-a Gamma(a) - e^x x^-a Gamma(a, x)`` with the second term
    from the continued fraction.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if x < a + 1.0:
        return _series_p(a, x)
    return math.exp(x - a * math.log(x) + math.lgamma(a)) - _cf_q(a, x)
