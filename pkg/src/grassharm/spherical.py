"""chi_l-spherical functions on the torus of SU(p+q)/S(U(p)xU(q)).

On the torus point exp(i H_t) the function is

    psi(t) = N * det[P_{n_i}(x_j)] / prod_{i<j}(x_j - x_i) * prod_j cos(t_j)^|l|

with x_j = cos(2 t_j), P_n = P_n^(k, |l|) and n_i = m_i + q - i. The
determinant ratio is evaluated as det[f_i[x_1, ..., x_j]] (Newton divided
differences), which stays finite when nodes coincide; coincident nodes use
derivative entries.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .jacobi import jacobi_derivative, jacobi_eval, jacobi_taylor_at_one
from .lattice import GrassmannParams, ParameterError, SphericalWeight, make_weight

__all__ = [
    "MAX_M1",
    "TorusPoint",
    "NormalizationMode",
    "SphericalEvalOptions",
    "normalized_block",
    "determinant_constant",
    "identity_value",
    "radial_values",
    "spherical_value",
    "spherical_values",
    "spherical_gradient",
    "DecayFit",
    "decay_exponent_fit",
    "decay_envelope_constant",
]

MAX_M1 = 300


@dataclass(frozen=True)
class TorusPoint:
    t: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))

    @property
    def q(self) -> int:
        return len(self.t)

    def canonical(self) -> "TorusPoint":
        """Reduce to pi/2 >= t_1 >= ... >= t_q >= 0.

        Uses t -> -t and t -> pi - t per coordinate; the latter flips the sign
        of cos(t), which only matters through cos^|l| and is not tracked here.
        """
        folded = []
        for v in self.t:
            v = math.fmod(abs(v), math.pi)
            if v > math.pi / 2:
                v = math.pi - v
            folded.append(v)
        return TorusPoint(tuple(sorted(folded, reverse=True)))

    def is_regular(self) -> bool:
        t = self.t
        if any(not (0.0 < v < math.pi / 2) for v in t):
            return False
        return len(set(t)) == len(t)


class NormalizationMode(str, enum.Enum):
    IDENTITY_CALIBRATED = "identity_calibrated"
    PAPER_CONSTANT = "paper_constant"


@dataclass(frozen=True)
class SphericalEvalOptions:
    confluence_tolerance: float = 1e-6
    normalization_mode: NormalizationMode = NormalizationMode.IDENTITY_CALIBRATED

    def __post_init__(self):
        if not self.confluence_tolerance > 0:
            raise ParameterError("confluence_tolerance must be positive")
        object.__setattr__(self, "normalization_mode", NormalizationMode(self.normalization_mode))


DEFAULT_OPTIONS = SphericalEvalOptions()


def normalized_block(nhat: int, space: GrassmannParams, l: int, x, opts: SphericalEvalOptions = DEFAULT_OPTIONS):
    """One-variable block entering the determinant.

    In ``identity_calibrated`` mode the block is scaled to 1 at x = 1; in
    ``paper_constant`` mode it is the classical Jacobi polynomial.
    """
    val = jacobi_eval(nhat, space.k, abs(l), x)
    if opts.normalization_mode is NormalizationMode.IDENTITY_CALIBRATED:
        val = val / math.comb(nhat + space.k, nhat)
    return val


def determinant_constant(space: GrassmannParams) -> float:
    # 2^{q(q-1)/2} prod_{j<q} (k+j)^{q-j} j!
    q, k = space.q, space.k
    c = 2.0 ** (0.5 * q * (q - 1))
    for j in range(1, q):
        c *= (k + j) ** (q - j) * math.factorial(j)
    return c


def _check_weight(space: GrassmannParams, w: SphericalWeight) -> None:
    if w.q != space.q:
        raise ParameterError(f"weight has {w.q} parts, space has rank {space.q}")
    if w.m[0] > MAX_M1:
        raise ParameterError(f"m_1 = {w.m[0]} exceeds the supported maximum {MAX_M1}")


def _fraction_det(rows: list[list[Fraction]]) -> Fraction:
    a = [row[:] for row in rows]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, size):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, size):
                    a[r][c] -= f * a[col][c]
    return det


_identity_cache: dict[tuple, Fraction] = {}
_identity_lock = threading.Lock()


def identity_value(space: GrassmannParams, w: SphericalWeight) -> Fraction:
    """Exact fully-confluent divided-difference determinant at x = (1, ..., 1)."""
    key = (space.p, space.q, abs(w.l), w.m)
    hit = _identity_cache.get(key)
    if hit is not None:
        return hit
    with _identity_lock:
        hit = _identity_cache.get(key)
        if hit is None:
            L = abs(w.l)
            rows = [[jacobi_taylor_at_one(n, space.k, L, j) for j in range(space.q)] for n in w.spectral_n]
            hit = _fraction_det(rows)
            if hit == 0:
                raise ArithmeticError(f"vanishing identity value for {w}")
            _identity_cache[key] = hit
    return hit


def _divided_difference_matrix(space, w, x, tol):
    """Batch of matrices D[..., i, j] = f_i[z_1, ..., z_{j+1}] with sorted, snapped nodes."""
    q = space.q
    alpha, beta = space.k, abs(w.l)
    z = -np.sort(-x, axis=-1)  # descending
    for j in range(1, q):
        close = np.abs(z[..., j] - z[..., j - 1]) < tol
        z[..., j] = np.where(close, z[..., j - 1], z[..., j])
    shape = z.shape[:-1]
    D = np.empty(shape + (q, q))
    for i, n in enumerate(w.spectral_n):
        level = [jacobi_eval(n, alpha, beta, z[..., j]) for j in range(q)]
        D[..., i, 0] = level[0]
        for order in range(1, q):
            deriv = [jacobi_derivative(n, alpha, beta, z[..., j], order) / math.factorial(order) for j in range(q - order)]
            nxt = []
            for j in range(q - order):
                gap = z[..., j + order] - z[..., j]
                same = gap == 0
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = (level[j + 1] - level[j]) / np.where(same, 1.0, gap)
                nxt.append(np.where(same, deriv[j], ratio))
            level = nxt
            D[..., i, order] = level[0]
    return D


def radial_values(space: GrassmannParams, w: SphericalWeight, x, opts: SphericalEvalOptions = DEFAULT_OPTIONS):
    """Polynomial part of psi as a function of x_j = cos(2 t_j).

    ``x`` has trailing dimension q. In ``identity_calibrated`` mode the
    result is 1 at x = (1, ..., 1).
    """
    _check_weight(space, w)
    x = np.array(x, dtype=float)
    if x.shape[-1] != space.q:
        raise ParameterError(f"expected trailing dimension {space.q}")
    if space.q == 1:
        n = w.spectral_n[0]
        vals = jacobi_eval(n, space.k, abs(w.l), x[..., 0])
        det = np.asarray(vals, dtype=float)
    else:
        det = np.linalg.det(_divided_difference_matrix(space, w, x, opts.confluence_tolerance))
    if opts.normalization_mode is NormalizationMode.IDENTITY_CALIBRATED:
        return det / float(identity_value(space, w))
    q = space.q
    c = w.spectral_constants(space)
    denom = 1.0
    for i in range(q):
        for j in range(i + 1, q):
            denom *= c[i] - c[j]
    # the constant pairs with prod (x_i - x_j); the divided differences give prod (x_j - x_i)
    sign = (-1) ** (q * (q - 1) // 2)
    return sign * determinant_constant(space) * det / denom


def spherical_values(space: GrassmannParams, w: SphericalWeight, t, opts: SphericalEvalOptions = DEFAULT_OPTIONS):
    """Vectorised psi on an array of torus angles with trailing dimension q."""
    t = np.asarray(t, dtype=float)
    vals = radial_values(space, w, np.cos(2 * t), opts)
    L = abs(w.l)
    if L:
        vals = vals * np.prod(np.cos(t) ** L, axis=-1)
    return vals


def _as_point(pt) -> TorusPoint:
    return pt if isinstance(pt, TorusPoint) else TorusPoint(tuple(pt))


def spherical_value(space: GrassmannParams, w: SphericalWeight, pt, opts: SphericalEvalOptions = DEFAULT_OPTIONS) -> float:
    pt = _as_point(pt)
    if pt.q != space.q:
        raise ParameterError(f"torus point has {pt.q} angles, space has rank {space.q}")
    if w.l == 0 and not any(w.m) and opts.normalization_mode is NormalizationMode.IDENTITY_CALIBRATED:
        return 1.0
    return float(spherical_values(space, w, np.array(pt.t), opts))


def spherical_gradient(space, w, pt, opts: SphericalEvalOptions = DEFAULT_OPTIONS, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient in the torus angles; truncation error O(step^2)."""
    pt = _as_point(pt)
    if not pt.is_regular():
        raise ParameterError("gradient requires a regular torus point")
    t0 = np.array(pt.t)
    shifts = np.eye(space.q) * step
    plus = spherical_values(space, w, t0 + shifts, opts)
    minus = spherical_values(space, w, t0 - shifts, opts)
    return (plus - minus) / (2 * step)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    per_axis_slope: float
    intercept: float
    residual: float
    branch: str
    expected_per_axis: float


def _family(space, l, nhat, branch):
    q = space.q
    if branch == "interior":
        m = (nhat,) * q
    else:
        m = (nhat,) * (q - 1) + (0,)
    return make_weight(space, l, m)


def decay_exponent_fit(
    space: GrassmannParams,
    l: int,
    pt,
    n_values: Sequence[int],
    branch: str = "interior",
    envelope_window: int = 8,
    opts: SphericalEvalOptions = DEFAULT_OPTIONS,
) -> DecayFit:
    """Log-log least-squares slope of |psi| along a diagonal weight family.

    ``branch="interior"`` uses m = (n, ..., n); ``"boundary"`` uses
    m = (n, ..., n, 0) and needs q >= 2. With ``envelope_window > 1`` each
    sample is the max of |psi| over n, ..., n + window - 1, which fits the
    upper envelope instead of the oscillating values. The per-axis slope
    divides by the number of growing coordinates.
    """
    pt = _as_point(pt)
    if not pt.is_regular():
        raise ParameterError("decay fit requires a regular torus point")
    n_values = sorted(int(v) for v in n_values)
    if len(n_values) < 4:
        raise ParameterError("need at least 4 sample points")
    if branch not in ("interior", "boundary"):
        raise ParameterError(f"unknown branch {branch!r}")
    if branch == "boundary" and space.q < 2:
        raise ParameterError("boundary branch needs q >= 2")
    window = max(1, int(envelope_window))
    t = np.array(pt.t)
    logs = []
    for n in n_values:
        vals = [abs(spherical_value(space, _family(space, l, n + j, branch), t, opts)) for j in range(window)]
        logs.append(math.log(max(vals)))
    logn = np.log(n_values)
    A = np.vstack([logn, np.ones_like(logn)]).T
    coef, *_ = np.linalg.lstsq(A, np.array(logs), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - logs) ** 2)))
    axes = space.q if branch == "interior" else space.q - 1
    if branch == "interior":
        expected = -(2 * space.p - space.q) / 2
    else:
        expected = -(2 * space.p - space.q + 3) / 2
    return DecayFit(float(coef[0]), float(coef[0]) / axes, float(coef[1]), resid, branch, expected)


def decay_envelope_constant(space: GrassmannParams, weights: Sequence[SphericalWeight], pt, opts=DEFAULT_OPTIONS) -> tuple[float, float]:
    """Empirical envelope constants over ``weights`` for both decay branches.

    Returns (interior, boundary): max of |psi| * prod n_j^{(2p-q)/2} over
    weights with m_q > 0, and max of |psi| * prod_{j<q} n_j^{(2p-q+3)/2}
    over weights with m_q = 0 (zero when a stratum is absent).
    """
    pt = _as_point(pt)
    a = (2 * space.p - space.q) / 2
    b = (2 * space.p - space.q + 3) / 2
    interior = boundary = 0.0
    for w in weights:
        v = abs(spherical_value(space, w, pt, opts))
        ns = w.spectral_n
        if w.m[-1] > 0:
            interior = max(interior, v * math.prod(n**a for n in ns))
        else:
            boundary = max(boundary, v * math.prod(n**b for n in ns[:-1]))
    return interior, boundary
