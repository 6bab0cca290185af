"""Bessel functions of the first kind for integer order.

Two regimes:

* ascending power series when ``x**2/4`` is small compared with the order
  (terms decrease from the first one, so there is no cancellation);
* Miller's downward recurrence otherwise, normalised with
  ``J_0 + 2*sum(J_2k) = 1``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 10**6

_RESCALE_AT = 1e250
_RESCALE_BY = 1e-250


def _check(n: int, x: float) -> None:
    if not math.isfinite(x):
        raise ValueError(f"bessel_j: argument must be finite, got {x!r}")
    if abs(n) > MAX_ORDER:
        raise ValueError(f"bessel_j: |order| must be <= {MAX_ORDER}, got {n}")


def _use_series(n: int, x: float) -> bool:
    return x <= 1.0 or 0.25 * x * x <= 0.5 * (n + 1)


def _leading_term(n: int, half: float) -> float:
    # (x/2)^n / n!
    if n <= 400:
        term = 1.0
        for k in range(1, n + 1):
            term *= half / k
            if term < 1e-305:
                return 0.0
        return term
    log_term = n * math.log(half) - math.lgamma(n + 1)
    if log_term < -700.0:
        return 0.0
    return math.exp(log_term)


def _series(n: int, x: float) -> float:
    half = 0.5 * x
    term = _leading_term(n, half)
    if term == 0.0:
        return 0.0
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            return total


def _start_order(top: float) -> int:
    m = int(top) + 30 + int(math.sqrt(60.0 * top))
    return m + (m % 2)


def _underflows(n: int, x: float) -> bool:
    # Debye bound for n > x: log J_n(x) <= n (tanh a - a), cosh a = n / x
    if n <= x:
        return False
    a = math.acosh(n / x)
    return n * (math.tanh(a) - a) < -740.0


@lru_cache(maxsize=256)
def _miller(n_max: int, x: float) -> tuple[float, ...]:
    """J_0..J_{n_max} at x > 0 by downward recurrence."""
    m = _start_order(max(n_max, x))
    out = [0.0] * (n_max + 1)
    stored_at = [0] * (n_max + 1)
    rescales = 0
    j_above = 0.0
    j_here = 1e-30
    norm = 0.0
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        if k <= n_max:
            out[k] = j_here
            stored_at[k] = rescales
        if k % 2 == 0:
            norm += 2.0 * j_here
        j_below = k * two_over_x * j_here - j_above
        j_above, j_here = j_here, j_below
        if abs(j_here) > _RESCALE_AT:
            j_here *= _RESCALE_BY
            j_above *= _RESCALE_BY
            norm *= _RESCALE_BY
            rescales += 1
    out[0] = j_here
    stored_at[0] = rescales
    norm += j_here
    return tuple(
        v * _RESCALE_BY ** (rescales - c) / norm if rescales > c else v / norm
        for v, c in zip(out, stored_at)
    )


def bessel_j(n: int, x: float) -> float:
    """J_n(x) for integer ``n`` and real ``x``.

    Uses ``J_{-n} = (-1)^n J_n`` and ``J_n(-x) = (-1)^n J_n(x)`` to reduce
    to non-negative order and argument.
    """
    n = int(n)
    x = float(x)
    _check(n, x)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -sign
    if x < 0.0:
        x = -x
        if n % 2:
            sign = -sign
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    if _underflows(n, x):
        return 0.0
    if _use_series(n, x):
        return sign * _series(n, x)
    return sign * _miller(n, x)[n]


def bessel_j_sequence(n_max: int, x: float) -> np.ndarray:
    """Array ``[J_0(x), ..., J_{n_max}(x)]`` for ``x >= 0``."""
    x = float(x)
    _check(n_max, x)
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if x < 0.0:
        raise ValueError("bessel_j_sequence expects x >= 0")
    if x == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    if x <= 1.0:
        return np.array([_series(k, x) for k in range(n_max + 1)])
    return np.array(_miller(n_max, x))
