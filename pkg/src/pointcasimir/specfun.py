"""Exponential integrals, the Xi_k family, Bernoulli numbers and Pochhammer symbols.

``Xi_k(r) = int_0^inf exp(-t r) (1 + t)^{-k} dt = e^r E_k(r)``.  The closed form in
terms of ``E_1`` alternates in sign and loses all accuracy once ``r`` grows, so it
is kept only as :func:`xi_closed_form` for comparison.  Production values come
from the scaled generalized exponential integral: a power series for ``r < 1``
and a Lentz continued fraction for ``r >= 1``, both without cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209
E1_UNDERFLOW = 700.0
SERIES_CUTOFF = 1.0
_EPS = 4.0 * np.finfo(float).eps  # stop within a few ulps
_TINY = 1e-300
_MAX_ITER = 10_000
BERNOULLI_MAX_J = 16


def _check_r(r):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("argument must be positive")
    return arr


def _check_k(k, lowest):
    if int(k) != k or k < lowest:
        raise DomainError(f"order must be an integer >= {lowest}, got {k}")
    return int(k)


def _series_scaled(n: int, x: np.ndarray) -> np.ndarray:
    """``e^x E_n(x)`` from the ascending series; accurate for ``0 < x < 1``."""
    nm1 = n - 1
    ans = np.full_like(x, 1.0 / nm1) if nm1 else -np.log(x) - EULER_GAMMA
    fact = np.ones_like(x)
    psi = -EULER_GAMMA + sum(1.0 / i for i in range(1, nm1 + 1))
    for i in range(1, _MAX_ITER):
        fact = fact * (-x / i)
        if i != nm1:
            delta = -fact / (i - nm1)
        else:
            delta = fact * (-np.log(x) + psi)
        ans = ans + delta
        if np.all(np.abs(delta) <= np.abs(ans) * _EPS):
            break
    return ans * np.exp(x)


def _cf_scaled(n: int, x: np.ndarray) -> np.ndarray:
    """``e^x E_n(x)`` from the modified Lentz continued fraction; ``x >= 1``."""
    b = x + n
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER):
        an = -i * (n - 1 + i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= _EPS):
            break
    return h


def scaled_expint(n: int, r):
    """``e^r E_n(r)`` for integer ``n >= 1`` and ``r > 0``; vectorized over ``r``."""
    n = _check_k(n, 1)
    x = _check_r(r)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    out = np.empty_like(x)
    small = x < SERIES_CUTOFF
    if small.any():
        out[small] = _series_scaled(n, x[small])
    if (~small).any():
        out[~small] = _cf_scaled(n, x[~small])
    return float(out[0]) if scalar else out


def exp_integral_e1(r):
    """Exponential integral ``E_1(r) = int_r^inf e^{-t}/t dt`` for ``r > 0``.

    Returns 0 for ``r > 700``, where the value underflows double precision.
    """
    x = _check_r(r)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    out = np.zeros_like(x)
    ok = x <= E1_UNDERFLOW
    if ok.any():
        out[ok] = scaled_expint(1, x[ok]) * np.exp(-x[ok])
    return float(out[0]) if scalar else out


def xi(k: int, r):
    """``Xi_k(r) = e^r E_k(r)`` for ``k >= 2``, ``r > 0``; vectorized over ``r``."""
    return scaled_expint(_check_k(k, 2), r)


def i_k(k: int, r):
    """The purely imaginary integral ``I_k(r) = i Xi_k(r)`` (``I_1 = i e^r E_1(r)``)."""
    return 1j * scaled_expint(_check_k(k, 1), r)


def xi_closed_form(k: int, r: float) -> float:
    """Closed-form ``Xi_k`` through ``E_1``.  Cancels badly for large ``r``."""
    k = _check_k(k, 2)
    r = float(_check_r(r))
    poly = sum(math.factorial(k - h - 2) * (-r) ** h for h in range(k - 1))
    tail = (-r) ** (k - 1) * scaled_expint(1, r)
    return (poly + tail) / math.factorial(k - 1)


@lru_cache(maxsize=None)
def bernoulli_even(j: int) -> Fraction:
    """Exact ``B_{2j+2}`` from the finite double sum over power sums."""
    if int(j) != j or not 0 <= j <= BERNOULLI_MAX_J:
        raise DomainError(f"j must be an integer in [0, {BERNOULLI_MAX_J}]")
    n = 2 * j + 3
    p = 2 * j + 2
    total = Fraction(0)
    power_sum = 0
    for k in range(2, n + 1):
        power_sum += (k - 1) ** p
        total += Fraction((-1) ** (k - 1) * math.comb(n, k) * power_sum, k)
    return total


def pochhammer(a, l: int):
    """Rising factorial ``(a)_l = a (a+1) ... (a+l-1)``; ``a`` may be complex."""
    l = _check_k(l, 0)
    out = 1.0 + 0.0j if isinstance(a, complex) else 1.0
    for i in range(l):
        out *= a + i
    return out


@dataclass(frozen=True)
class XiEvaluator:
    """Bounded-order evaluator for ``Xi_k``; the series/fraction switch sits at ``r = 1``."""

    max_order: int = 64
    series_cutoff: float = field(default=SERIES_CUTOFF, init=False)

    def __post_init__(self):
        if self.max_order < 2:
            raise DomainError("max_order must be at least 2")

    def __call__(self, k: int, r):
        if k > self.max_order:
            raise DomainError(f"order {k} exceeds max_order {self.max_order}")
        return xi(k, r)

    def difference(self, k: int, r):
        """``Xi_{k+1}(r) - Xi_k(r)``, the path weight of the identical-obstacle series."""
        return self(k + 1, r) - self(k, r)


@dataclass(frozen=True)
class BernoulliTable:
    """Exact even Bernoulli numbers ``B_2, B_4, ..., B_{2J+2}``."""

    J: int
    values: tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "values", tuple(bernoulli_even(j) for j in range(self.J + 1))
        )

    def __getitem__(self, j: int) -> Fraction:
        return self.values[j]

    def __len__(self) -> int:
        return len(self.values)
