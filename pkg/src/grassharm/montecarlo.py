"""Monte Carlo estimators for chi_l-orbital measures.

Random streams are keyed by (seed, purpose tag, chunk index) through a
counter-based Philox generator. Samples are produced in fixed-size chunks
and reduced in chunk order, so any number of workers gives bit-identical
results.
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .groups import check_special_unitary, chi_l, haar_k, k_matrix, spherical_on_group, torus_element
from .lattice import GrassmannParams, ParameterError, SphericalWeight
from .spherical import DEFAULT_OPTIONS, SphericalEvalOptions, TorusPoint, spherical_value

__all__ = [
    "CHUNK_SIZE",
    "DRIFT_TOL",
    "MCEstimate",
    "OrbitalMeasureSpec",
    "chunk_rng",
    "mc_mean",
    "orbital_sample",
    "composed_sample",
    "pairing_reference",
    "pairing_estimate",
    "FunctionalEquationResult",
    "functional_equation_check",
    "ConsistencyReport",
    "convolution_consistency_check",
    "within_sigmas",
]

CHUNK_SIZE = 4096
DRIFT_TOL = 1e-9
# absolute slack for identities that hold sample-by-sample, where stderr is itself roundoff
ROUNDOFF_ATOL = 1e-10


@dataclass(frozen=True)
class MCEstimate:
    value: complex
    stderr: float
    samples: int
    drift_repairs: int = 0

    def to_dict(self) -> dict:
        return {
            "estimate": [self.value.real, self.value.imag],
            "stderr": self.stderr,
            "samples": self.samples,
            "drift_repairs": self.drift_repairs,
        }


@dataclass(frozen=True)
class OrbitalMeasureSpec:
    l: int
    points: tuple[TorusPoint, ...]

    def __post_init__(self):
        pts = tuple(p if isinstance(p, TorusPoint) else TorusPoint(tuple(p)) for p in self.points)
        if not pts:
            raise ParameterError("need at least one torus point")
        for pt in pts:
            if not pt.is_regular():
                raise ParameterError(f"torus point {pt.t} is not regular")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "l", int(self.l))

    @property
    def r(self) -> int:
        return len(self.points)


def _tag(name: str) -> int:
    return zlib.crc32(name.encode())


def chunk_rng(seed: int, tag: str, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag(tag), int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def mc_mean(
    sampler: Callable[[np.random.Generator, int], tuple[np.ndarray, int]],
    samples: int,
    seed: int,
    tag: str,
    workers: int = 1,
) -> MCEstimate:
    """Mean and standard error of a complex integrand.

    ``sampler(rng, size)`` returns (values, drift_repairs) for one chunk.
    """
    if samples < 1:
        raise ParameterError("samples must be positive")
    sizes = [CHUNK_SIZE] * (samples // CHUNK_SIZE)
    if samples % CHUNK_SIZE:
        sizes.append(samples % CHUNK_SIZE)

    def run(idx):
        vals, repairs = sampler(chunk_rng(seed, tag, idx), sizes[idx])
        vals = np.asarray(vals, dtype=complex)
        return vals.sum(), float(np.sum(np.abs(vals) ** 2)), repairs

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    total = complex(math.fsum(p[0].real for p in parts), math.fsum(p[0].imag for p in parts))
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / samples
    if samples > 1:
        var = max(total_sq / samples - abs(mean) ** 2, 0.0) * samples / (samples - 1)
        stderr = math.sqrt(var / samples)
    else:
        stderr = math.inf
    return MCEstimate(mean, stderr, samples, sum(p[2] for p in parts))


def _repair(g: np.ndarray) -> tuple[np.ndarray, int]:
    """Re-orthonormalise samples whose unitarity drift exceeds DRIFT_TOL."""
    n = g.shape[-1]
    gram = np.swapaxes(g.conj(), -1, -2) @ g
    err = np.abs(gram - np.eye(n)).max(axis=(-2, -1))
    bad = err > DRIFT_TOL
    count = int(bad.sum())
    if count:
        u, _, vh = np.linalg.svd(g[bad])
        fixed = u @ vh
        det = np.linalg.det(fixed)
        g = g.copy()
        g[bad] = fixed * (det ** (-1.0 / n))[:, None, None]
    return g, count


def orbital_sample(spec: OrbitalMeasureSpec, space: GrassmannParams, rng: np.random.Generator, size: int):
    """Samples g = k_1 a_1 k_2 ... a_r k_{r+1} with weights chi_l(k_1 ... k_{r+1})^{-1}."""
    a, b = haar_k(space, rng, size)
    g = k_matrix(a, b)
    detb = np.linalg.det(b)
    for pt in spec.points:
        a, b = haar_k(space, rng, size)
        g = g @ torus_element(space, pt) @ k_matrix(a, b)
        detb = detb * np.linalg.det(b)
    g, repairs = _repair(g)
    weight = detb ** (-spec.l)
    return g, weight, repairs


def composed_sample(spec: OrbitalMeasureSpec, space: GrassmannParams, rng: np.random.Generator, size: int):
    """Product of independent single-factor orbital samples g_1 ... g_r."""
    g = None
    weight = np.ones(size, dtype=complex)
    repairs = 0
    for pt in spec.points:
        gi, wi, ri = orbital_sample(OrbitalMeasureSpec(spec.l, (pt,)), space, rng, size)
        g = gi if g is None else g @ gi
        weight = weight * wi
        repairs += ri
    g, extra = _repair(g)
    return g, weight, repairs + extra


def pairing_reference(spec: OrbitalMeasureSpec, space: GrassmannParams, w: SphericalWeight, opts=DEFAULT_OPTIONS) -> float:
    """prod_i psi(a_i^{-1}); a_i^{-1} has the same torus angles as a_i up to sign."""
    return math.prod(spherical_value(space, w, TorusPoint(tuple(-v for v in pt.t)), opts) for pt in spec.points)


def _check_weight_matches(spec, w):
    if w.l != spec.l:
        raise ParameterError(f"weight carries l={w.l}, measure carries l={spec.l}")


def pairing_estimate(
    spec: OrbitalMeasureSpec,
    space: GrassmannParams,
    w: SphericalWeight,
    samples: int,
    seed: int,
    workers: int = 1,
    composed: bool = False,
    opts: SphericalEvalOptions = DEFAULT_OPTIONS,
) -> MCEstimate:
    """Estimate of the integral of conj(psi) against the orbital measure."""
    if samples < 1000:
        raise ParameterError("pairing_estimate needs at least 1000 samples")
    _check_weight_matches(spec, w)
    draw = composed_sample if composed else orbital_sample

    def sampler(rng, size):
        g, weight, repairs = draw(spec, space, rng, size)
        return np.conj(spherical_on_group(space, w, g, opts)) * weight, repairs

    tag = f"pairing/{'composed' if composed else 'joint'}"
    return mc_mean(sampler, samples, seed, tag, workers)


def within_sigmas(delta: complex, stderr: float, sigmas: float = 4.0) -> bool:
    return abs(delta) <= sigmas * stderr + ROUNDOFF_ATOL


@dataclass(frozen=True)
class FunctionalEquationResult:
    residual: MCEstimate
    reference: float

    @property
    def sigmas(self) -> float:
        r = abs(self.residual.value)
        if self.residual.stderr == 0:
            return 0.0 if r <= ROUNDOFF_ATOL else math.inf
        return r / self.residual.stderr

    @property
    def passed(self) -> bool:
        return within_sigmas(self.residual.value, self.residual.stderr)


def functional_equation_check(
    space: GrassmannParams,
    l: int,
    w: SphericalWeight,
    u1,
    u2,
    samples: int,
    seed: int,
    workers: int = 1,
    opts: SphericalEvalOptions = DEFAULT_OPTIONS,
) -> FunctionalEquationResult:
    """Residual of  int_K psi(u1 k u2) chi_l(k) dk - psi(u1) psi(u2)."""
    if samples < 1000:
        raise ParameterError("functional_equation_check needs at least 1000 samples")
    if w.l != l:
        raise ParameterError("weight and character index disagree")
    u1 = u1 if isinstance(u1, TorusPoint) else TorusPoint(tuple(u1))
    u2 = u2 if isinstance(u2, TorusPoint) else TorusPoint(tuple(u2))
    ref = spherical_value(space, w, u1, opts) * spherical_value(space, w, u2, opts)
    g1, g2 = torus_element(space, u1), torus_element(space, u2)

    def sampler(rng, size):
        a, b = haar_k(space, rng, size)
        g = g1 @ k_matrix(a, b) @ g2
        g, repairs = _repair(g)
        return spherical_on_group(space, w, g, opts) * chi_l(l, b) - ref, repairs

    return FunctionalEquationResult(mc_mean(sampler, samples, seed, "functional-equation", workers), ref)


@dataclass(frozen=True)
class ConsistencyReport:
    joint: MCEstimate
    composed: MCEstimate
    reference: float
    combined_stderr: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "combined_stderr", math.hypot(self.joint.stderr, self.composed.stderr))

    @property
    def difference(self) -> complex:
        return self.joint.value - self.composed.value

    @property
    def agree(self) -> bool:
        return within_sigmas(self.difference, self.combined_stderr)

    def to_dict(self) -> dict:
        return {
            "joint": self.joint.to_dict(),
            "composed": self.composed.to_dict(),
            "reference": [self.reference, 0.0],
            "combined_stderr": self.combined_stderr,
            "agree": self.agree,
        }


def convolution_consistency_check(
    spec: OrbitalMeasureSpec,
    space: GrassmannParams,
    w: SphericalWeight,
    samples: int,
    seed: int,
    workers: int = 1,
    opts: SphericalEvalOptions = DEFAULT_OPTIONS,
) -> ConsistencyReport:
    if spec.r < 2:
        raise ParameterError("consistency check needs r >= 2")
    joint = pairing_estimate(spec, space, w, samples, seed, workers, composed=False, opts=opts)
    comp = pairing_estimate(spec, space, w, samples, seed, workers, composed=True, opts=opts)
    return ConsistencyReport(joint, comp, pairing_reference(spec, space, w, opts))
