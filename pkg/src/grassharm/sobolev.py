"""Sobolev series and Plancherel synthesis for convolutions of orbital measures."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .lattice import (
    GrassmannParams,
    ParameterError,
    SphericalWeight,
    absolute_continuity_gate,
    casimir,
    dimension,
    iter_shell,
    rho,
    sobolev_r_condition,
)
from .montecarlo import OrbitalMeasureSpec
from .spherical import DEFAULT_OPTIONS, TorusPoint, decay_envelope_constant, spherical_values

__all__ = [
    "CERTIFY_RATIO",
    "SeriesReport",
    "DensityGrid",
    "SynthesisWarning",
    "summand",
    "shell_summands",
    "tail_bound",
    "sobolev_partial_sums",
    "density_synthesis",
    "density_pairing",
]

CERTIFY_RATIO = 1e-3


class SynthesisWarning(UserWarning):
    pass


@dataclass
class SeriesReport:
    s: float
    r: int
    partial_sums: list[float]
    tail_bound: float
    converged: bool
    cutoff: int
    scale: float
    envelope: tuple[float, ...] = ()
    tail_exponent: float = math.nan
    threshold_condition: bool = False

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "r": self.r,
            "cutoff": self.cutoff,
            "partial_sums": self.partial_sums,
            "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else None,
            "converged": self.converged,
            "casimir_scale": self.scale,
            "tail_exponent": self.tail_exponent,
            "threshold_condition": self.threshold_condition,
        }


@dataclass
class DensityGrid:
    grid: list[TorusPoint]
    values: list[float]
    cutoff: int
    warnings: list[str] = field(default_factory=list)


def _points_array(spec: OrbitalMeasureSpec) -> np.ndarray:
    return np.array([pt.t for pt in spec.points])


def _log_summand(space, w, s, psi_vals, scale):
    prod_sq = float(np.prod(np.abs(psi_vals) ** 2))
    if prod_sq == 0.0:
        return -math.inf
    kappa = casimir(space, w, scale)
    return math.log(dimension(space, w)) + s * math.log1p(kappa) + math.log(prod_sq)


def summand(space: GrassmannParams, spec: OrbitalMeasureSpec, w: SphericalWeight, s: float, scale=None, opts=DEFAULT_OPTIONS) -> float:
    """d_lambda (1 + kappa_lambda)^s prod_i |psi_lambda(a_i)|^2."""
    if w.l != spec.l:
        raise ParameterError("weight and measure disagree on l")
    vals = spherical_values(space, w, _points_array(spec), opts)
    return math.exp(_log_summand(space, w, s, vals, scale))


def shell_summands(space, spec, s, m1, scale=None, opts=DEFAULT_OPTIONS) -> list[float]:
    pts = _points_array(spec)
    out = []
    for w in iter_shell(space.q, spec.l, m1):
        out.append(math.exp(_log_summand(space, w, s, spherical_values(space, w, pts, opts), scale)))
    return out


def _power_tail(exponent: float, start: int) -> float:
    """Upper bound for sum_{m >= start} m^exponent (start >= 2)."""
    if exponent >= -1:
        return math.inf
    return (start - 1) ** (exponent + 1) / (-exponent - 1)


def tail_bound(
    space: GrassmannParams,
    spec: OrbitalMeasureSpec,
    s: float,
    cutoff: int,
    envelopes: list[tuple[float, float]],
    scale=None,
) -> tuple[float, float]:
    """Bound on the discarded part (m_1 > cutoff) of the Sobolev series.

    ``envelopes`` holds, per torus point, the empirical (interior, boundary)
    decay constants. Dimensions are bounded as in :func:`twisted_dimension_bound` and
    the Casimir by its value with every lambda_i = lambda_1. The two lattice
    strata (m_q > 0 and m_q = 0) are bounded separately and added.
    Returns (bound, exponent of m_1 in the interior stratum).
    """
    p, q, r = space.p, space.q, spec.r
    L = abs(spec.l)
    if scale is None:
        scale = 4 * space.n
    start = cutoff + 1
    if start < 2:
        raise ParameterError("tail bound needs cutoff >= 1")
    D = q * (2 * p - 1)
    # (c m + L + 1)^D <= dim_ratio * m^D for m >= start
    slope = 2 if space.n == 2 else 1
    dim_ratio = ((slope * start + L + 1) / start) ** D
    lam1 = 2 * start + L
    kappa_max = scale * q * lam1 * (lam1 + 2 * rho(space)[0])
    gamma = (1 + kappa_max) / start**2
    common = dim_ratio * gamma**s

    a = (2 * p - q) * r
    interior_exp = D + 2 * s - a
    c_int = math.prod(e[0] ** 2 for e in envelopes)
    inner = zeta(a) ** (q - 1) if q > 1 else 1.0
    interior = c_int * inner * common * _power_tail(interior_exp, start) if c_int > 0 else 0.0
    if c_int > 0 and q > 1 and a <= 1:
        interior = math.inf

    boundary = 0.0
    if q > 1:
        b = (2 * p - q + 3) * r
        c_bd = math.prod(e[1] ** 2 for e in envelopes)
        if c_bd > 0:
            inner_b = zeta(b) ** (q - 2) if q > 2 else 1.0
            boundary = c_bd * inner_b * common * _power_tail(D + 2 * s - b, start)
    return interior + boundary, interior_exp


class _Kahan:
    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, x: float) -> None:
        y = x - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t


def _pairwise_sum(values: list[float]) -> float:
    if len(values) <= 8:
        return math.fsum(values)
    mid = len(values) // 2
    return _pairwise_sum(values[:mid]) + _pairwise_sum(values[mid:])


def sobolev_partial_sums(
    space: GrassmannParams,
    spec: OrbitalMeasureSpec,
    s: float,
    m1_max: int,
    scale=None,
    window: int = 20,
    workers: int = 1,
    opts=DEFAULT_OPTIONS,
) -> SeriesReport:
    """Partial sums of the H^s norm series over shells m_1 = 0..m1_max.

    ``partial_sums[c]`` is the sum over all weights with m_1 <= c. The tail
    bound uses empirical decay constants from the last ``window`` shells;
    certification is refused until ``m1_max >= window``, since an envelope
    fitted on fewer shells can undershoot the true tail.
    """
    if m1_max < 1:
        raise ParameterError("m1_max must be >= 1")
    if spec.points[0].q != space.q:
        raise ParameterError("torus points do not match the rank")
    if scale is None:
        scale = 4 * space.n

    def shell(m1):
        return _pairwise_sum(shell_summands(space, spec, s, m1, scale, opts))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            shells = list(pool.map(shell, range(m1_max + 1)))
    else:
        shells = [shell(m1) for m1 in range(m1_max + 1)]
    acc = _Kahan()
    partial = []
    for v in shells:
        acc.add(v)
        partial.append(acc.total)

    first = max(1, m1_max - window + 1)
    tail_weights = [w for m1 in range(first, m1_max + 1) for w in iter_shell(space.q, spec.l, m1)]
    envelopes = [decay_envelope_constant(space, tail_weights, pt, opts) for pt in spec.points]
    bound, exponent = tail_bound(space, spec, s, m1_max, envelopes, scale)
    converged = m1_max >= window and math.isfinite(bound) and bound < CERTIFY_RATIO * partial[-1]
    return SeriesReport(
        s=float(s),
        r=spec.r,
        partial_sums=partial,
        tail_bound=bound,
        converged=converged,
        cutoff=m1_max,
        scale=float(scale),
        envelope=tuple(e[0] for e in envelopes),
        tail_exponent=exponent,
        threshold_condition=sobolev_r_condition(space, max(s, 0.0), spec.r),
    )


def density_synthesis(
    space: GrassmannParams,
    spec: OrbitalMeasureSpec,
    grid,
    m1_max: int,
    check_convergence: bool = True,
    opts=DEFAULT_OPTIONS,
) -> DensityGrid:
    """Truncated Plancherel series sum_lambda d_lambda prod_i psi(a_i^{-1}) psi(g) on torus points."""
    if not absolute_continuity_gate(space, spec.r):
        raise ParameterError(f"r = {spec.r} < dim U/K = {space.dim_uk}: no density to synthesise")
    if m1_max < 0:
        raise ParameterError("m1_max must be >= 0")
    grid = [pt if isinstance(pt, TorusPoint) else TorusPoint(tuple(pt)) for pt in grid]
    t = np.array([pt.t for pt in grid], dtype=float).reshape(len(grid), space.q)
    pts_inv = -_points_array(spec)
    values = np.zeros(len(grid))
    for m1 in range(m1_max + 1):
        for w in iter_shell(space.q, spec.l, m1):
            coeff = dimension(space, w) * float(np.prod(spherical_values(space, w, pts_inv, opts)))
            values += coeff * spherical_values(space, w, t, opts)
    notes = []
    if check_convergence and m1_max >= 1:
        report = sobolev_partial_sums(space, spec, 0.0, m1_max, opts=opts)
        if not report.converged:
            msg = f"L2 series not certified at cutoff {m1_max} (tail bound {report.tail_bound:.3g})"
            notes.append(msg)
            warnings.warn(msg, SynthesisWarning, stacklevel=2)
    return DensityGrid(grid, values.tolist(), m1_max, notes)


def density_pairing(space: GrassmannParams, spec: OrbitalMeasureSpec, coefficients: dict, m1_max: int, opts=DEFAULT_OPTIONS) -> complex:
    """Integral of f * conj(h) over U for h = sum_mu c_mu psi_mu, f the synthesized density.

    Schur orthogonality (integral of psi_lambda conj(psi_mu) = delta / d_mu)
    reduces this to sum_mu conj(c_mu) prod_i psi_mu(a_i^{-1}) for mu within
    the cutoff.
    """
    pts_inv = -_points_array(spec)
    total = 0j
    for m, c in coefficients.items():
        w = SphericalWeight(spec.l, tuple(m))
        if w.q != space.q:
            raise ParameterError("coefficient key has wrong rank")
        if w.m[0] > m1_max:
            continue
        total += np.conj(c) * float(np.prod(spherical_values(space, w, pts_inv, opts)))
    return complex(total)
