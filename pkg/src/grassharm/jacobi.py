"""Classical Jacobi polynomials P_n^(alpha, beta) by three-term recurrence."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .lattice import ParameterError

__all__ = ["jacobi_eval", "jacobi_derivative", "jacobi_taylor_at_one"]


def _check(n, alpha, beta):
    if n < 0 or int(n) != n:
        raise ParameterError(f"degree must be a non-negative integer, got {n}")
    if alpha <= -1 or beta <= -1:
        raise ParameterError(f"need alpha, beta > -1, got ({alpha}, {beta})")


def jacobi_eval(n, alpha, beta, x):
    """Evaluate P_n^(alpha, beta)(x); ``x`` may be a scalar or an array."""
    _check(n, alpha, beta)
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    ab = alpha + beta
    p_cur = (alpha + 1) + (ab + 2) * (x - 1) / 2
    for j in range(2, n + 1):
        a = 2 * j * (j + ab) * (2 * j + ab - 2)
        b = (2 * j + ab - 1) * ((2 * j + ab) * (2 * j + ab - 2) * x + alpha**2 - beta**2)
        c = 2 * (j + alpha - 1) * (j + beta - 1) * (2 * j + ab)
        p_prev, p_cur = p_cur, (b * p_cur - c * p_prev) / a
    return p_cur if p_cur.ndim else float(p_cur)


def jacobi_derivative(n, alpha, beta, x, order=1):
    """d^order/dx^order P_n^(alpha, beta)(x)."""
    _check(n, alpha, beta)
    if order > n:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        return out if out.ndim else 0.0
    factor = math.exp(math.lgamma(n + alpha + beta + 1 + order) - math.lgamma(n + alpha + beta + 1)) / 2**order
    return factor * jacobi_eval(n - order, alpha + order, beta + order, x)


def jacobi_taylor_at_one(n: int, alpha: int, beta: int, order: int) -> Fraction:
    """Exact value of P_n^(alpha,beta)^{(order)}(1) / order! for integer parameters."""
    _check(n, alpha, beta)
    if order > n:
        return Fraction(0)
    rising = math.prod(range(n + alpha + beta + 1, n + alpha + beta + 1 + order))
    return Fraction(rising * math.comb(n + alpha, n - order), 2**order * math.factorial(order))
