"""Root data, the twisted highest-weight lattice and the exact dimension formula.

Everything here is integer or rational arithmetic; floats only appear in
:func:`killing_inner` / :func:`casimir` when a non-integer scale is requested.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

__all__ = [
    "ParameterError",
    "GrassmannParams",
    "RestrictedRoot",
    "SphericalWeight",
    "make_space",
    "make_weight",
    "positive_roots",
    "rho",
    "killing_inner",
    "casimir",
    "enumerate_weights",
    "iter_shell",
    "phi_block",
    "dimension",
    "dimension_bound",
    "twisted_dimension_bound",
    "weyl_highest_weight",
    "weyl_dimension",
    "smoothness_threshold",
    "sobolev_r_condition",
    "sobolev_r_bound",
    "absolute_continuity_gate",
    "weight_count",
]


class ParameterError(ValueError):
    """Raised when an input lies outside the parameter domain."""


@dataclass(frozen=True)
class GrassmannParams:
    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise ParameterError("p and q must be integers")
        if self.q < 1 or self.p < self.q:
            raise ParameterError(f"need p >= q >= 1, got p={self.p}, q={self.q}")

    @property
    def k(self) -> int:
        return self.p - self.q

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def dim_uk(self) -> int:
        return 2 * self.p * self.q

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "k": self.k, "n": self.n, "dim_uk": self.dim_uk}


@dataclass(frozen=True)
class RestrictedRoot:
    coeffs: tuple[int, ...]
    multiplicity: int

    @property
    def label(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs, start=1):
            if c == 0:
                continue
            sign = "-" if c < 0 else ("+" if terms else "")
            mag = "" if abs(c) == 1 else str(abs(c))
            terms.append(f"{sign}{mag}a{i}")
        return "".join(terms)


@dataclass(frozen=True)
class SphericalWeight:
    """A point of the lattice of chi_l-spherical highest weights.

    ``m`` is the partition (m_1 >= ... >= m_q >= 0); the restricted highest
    weight is ``lambda_i = 2 m_i + |l|``.
    """

    l: int
    m: tuple[int, ...]
    lam: tuple[int, ...] = field(init=False)
    spectral_n: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        m = tuple(int(v) for v in self.m)
        if not m:
            raise ParameterError("weight needs at least one part")
        if m[-1] < 0 or any(a < b for a, b in zip(m, m[1:])):
            raise ParameterError(f"m must be non-increasing and non-negative, got {m}")
        q = len(m)
        L = abs(int(self.l))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "lam", tuple(2 * mi + L for mi in m))
        object.__setattr__(self, "spectral_n", tuple(mi + q - i for i, mi in enumerate(m, start=1)))

    @property
    def q(self) -> int:
        return len(self.m)

    def spectral_constants(self, space: GrassmannParams) -> tuple[int, ...]:
        """c(n_i) = n_i (n_i + |l| + k + 1)."""
        L = abs(self.l)
        return tuple(n * (n + L + space.k + 1) for n in self.spectral_n)

    def to_record(self, space: GrassmannParams) -> dict:
        return {"p": space.p, "q": space.q, "l": self.l, "m": list(self.m), "lambda": list(self.lam)}


def make_space(p: int, q: int) -> GrassmannParams:
    return GrassmannParams(int(p), int(q))


def make_weight(space: GrassmannParams, l: int, m: Sequence[int]) -> SphericalWeight:
    w = SphericalWeight(l, tuple(m))
    if w.q != space.q:
        raise ParameterError(f"weight has {w.q} parts, space has rank {space.q}")
    return w


def positive_roots(space: GrassmannParams) -> list[RestrictedRoot]:
    q, k = space.q, space.k
    roots = []
    for i in range(q):
        e = [0] * q
        e[i] = 1
        if k > 0:
            roots.append(RestrictedRoot(tuple(e), 2 * k))
        e[i] = 2
        roots.append(RestrictedRoot(tuple(e), 1))
    for i, j in itertools.combinations(range(q), 2):
        for s in (1, -1):
            e = [0] * q
            e[i], e[j] = 1, s
            roots.append(RestrictedRoot(tuple(e), 2))
    return roots


def rho(space: GrassmannParams) -> tuple[int, ...]:
    # half-sum of positive roots with multiplicity, in the alpha_i basis
    return tuple(space.k + 1 + 2 * (space.q - i) for i in range(1, space.q + 1))


def killing_inner(space: GrassmannParams, u: Sequence, v: Sequence, scale=None):
    """Scaled Euclidean pairing on the restricted dual; default scale is 4n."""
    if len(u) != space.q or len(v) != space.q:
        raise ParameterError(f"vectors must have length q={space.q}")
    if scale is None:
        scale = 4 * space.n
    elif scale <= 0:
        raise ParameterError("scale must be positive")
    return scale * sum(a * b for a, b in zip(u, v))


def casimir(space: GrassmannParams, w: SphericalWeight, scale=None):
    r = rho(space)
    shifted = [lam + 2 * ri for lam, ri in zip(w.lam, r)]
    return killing_inner(space, w.lam, shifted, scale)


def iter_shell(q: int, l: int, m1: int) -> Iterator[SphericalWeight]:
    """Weights with first part exactly ``m1``, decreasing-lexicographic."""
    if q == 1:
        yield SphericalWeight(l, (m1,))
        return
    for rest in _partitions_bounded(q - 1, m1):
        yield SphericalWeight(l, (m1,) + rest)


def _partitions_bounded(parts: int, bound: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        yield ()
        return
    for first in range(bound, -1, -1):
        for rest in _partitions_bounded(parts - 1, first):
            yield (first,) + rest


def enumerate_weights(space: GrassmannParams, l: int, m1_max: int) -> list[SphericalWeight]:
    if m1_max < 0:
        raise ParameterError("m1_max must be >= 0")
    return [SphericalWeight(l, m) for m in _partitions_bounded(space.q, m1_max)]


def phi_block(x: Fraction, t: Fraction) -> Fraction:
    """(x - t)(x - t + 1)...(x + t) with unit steps; 2t + 1 factors.

    ``t`` may be a half-integer; ``t = -1/2`` gives the empty product.
    """
    count = 2 * Fraction(t) + 1
    if count.denominator != 1 or count < 0:
        raise ParameterError(f"phi_block needs 2t+1 a non-negative integer, got t={t}")
    out = Fraction(1)
    start = Fraction(x) - Fraction(t)
    for j in range(int(count)):
        out *= start + j
    return out


def dimension(space: GrassmannParams, w: SphericalWeight, exact: bool = False):
    """Dimension of the irreducible representation with highest weight ``w``.

    Evaluated as a product of rationals; the result is checked to be an
    integer. For ``p = q`` the phi factors are empty products.
    """
    q, k = space.q, space.k
    L = abs(w.l)
    m = w.m
    half = Fraction(k - 1, 2)
    d = Fraction(1)
    for i in range(1, q + 1):
        mi = m[i - 1]
        x = 2 * mi + L + k + 1 + 2 * (q - i)
        y = k + 1 + 2 * (q - i)
        d *= phi_block(Fraction(x + L, 2), half) * phi_block(Fraction(x - L, 2), half)
        d /= phi_block(Fraction(y, 2), half) ** 2
        d *= Fraction(x, y)
    for i, j in itertools.combinations(range(1, q + 1), 2):
        mi, mj = m[i - 1], m[j - 1]
        d *= Fraction(mi + mj + L + k + 1 + 2 * q - (i + j), k + 1 + 2 * q - (i + j)) ** 2
        d *= Fraction(mi - mj + j - i, j - i) ** 2
    if d.denominator != 1 or d <= 0:
        raise ArithmeticError(f"dimension did not reduce to a positive integer: {d}")
    return d if exact else int(d)


def weyl_highest_weight(space: GrassmannParams, w: SphericalWeight) -> tuple[int, ...]:
    """SU(p+q) highest weight (as a U(p+q) signature) carrying the chi_l line."""
    L = abs(w.l)
    top = tuple(mi + L for mi in w.m)
    bottom = tuple(-mi for mi in reversed(w.m))
    return top + (0,) * space.k + bottom


def weyl_dimension(signature: Sequence[int]) -> int:
    num, den = 1, 1
    for a, b in itertools.combinations(range(len(signature)), 2):
        num *= signature[a] - signature[b] + b - a
        den *= b - a
    if num % den:
        raise ArithmeticError("Weyl product is not integral")
    return num // den


def dimension_bound(space: GrassmannParams, w: SphericalWeight) -> int:
    return (w.m[0] + 1) ** (space.q * (2 * space.p - 1))


def _bound_slope(space: GrassmannParams) -> int:
    # SU(2) is the one space where d = 2m + |l| + 1 outgrows m + |l| + 1
    return 2 if space.n == 2 else 1


def twisted_dimension_bound(space: GrassmannParams, w: SphericalWeight) -> int:
    """(c m_1 + |l| + 1)^{q(2p-1)} with c = 1, or c = 2 for p = q = 1.

    Unlike :func:`dimension_bound` this holds for l != 0 and for SU(2).
    """
    return (_bound_slope(space) * w.m[0] + abs(w.l) + 1) ** (space.q * (2 * space.p - 1))


def smoothness_threshold(space: GrassmannParams, nu: int) -> int:
    if nu < 1:
        raise ParameterError("nu must be a positive integer")
    p, q = space.p, space.q
    first = ((p + q) ** 2 + 2 * nu + q * (2 * p - 1)) // (2 * p - q) + 1
    return max(first, 2 * p * q)


def sobolev_r_bound(space: GrassmannParams, s: float) -> float:
    """Right-hand side of the strict inequality on r for H^s membership."""
    p, q = space.p, space.q
    return (1 + 2 * s + q * (2 * p - 1)) / (2 * p - q)


def sobolev_r_condition(space: GrassmannParams, s: float, r: int) -> bool:
    if s < 0 or r < 1:
        raise ParameterError("need s >= 0 and r >= 1")
    return r > sobolev_r_bound(space, s) and r >= space.dim_uk


def absolute_continuity_gate(space: GrassmannParams, r: int) -> bool:
    if r < 1:
        raise ParameterError("r must be >= 1")
    return r >= space.dim_uk


def weight_count(q: int, m1_max: int) -> int:
    return math.comb(m1_max + q, q)
