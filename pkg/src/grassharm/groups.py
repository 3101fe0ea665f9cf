"""Matrices in U = SU(p+q) and K = S(U(p) x U(q)).

All samplers accept a leading batch size so Monte Carlo loops stay in numpy.
"""
from __future__ import annotations

import numpy as np

from .lattice import GrassmannParams, ParameterError, SphericalWeight
from .spherical import DEFAULT_OPTIONS, SphericalEvalOptions, TorusPoint, radial_values

__all__ = [
    "UNITARY_TOL",
    "haar_unitary",
    "haar_special_unitary",
    "haar_k",
    "k_matrix",
    "chi_l",
    "torus_element",
    "torus_element_expm",
    "kak_coordinates",
    "check_special_unitary",
    "spherical_on_group",
]

UNITARY_TOL = 1e-10


def haar_unitary(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed U(n) matrices (Mezzadri's QR with phase correction)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    shape = (n, n) if size is None else (size, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    qm, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return qm * ph[..., None, :]


def haar_k(space: GrassmannParams, rng: np.random.Generator, size: int | None = None):
    """Haar sample of K as a pair (A, B) with det(A) det(B) = 1.

    The determinant is fixed by a scalar phase on A chosen uniformly among
    the p admissible roots, which keeps the law invariant under K.
    """
    p, q = space.p, space.q
    a = haar_unitary(p, rng, size)
    b = haar_unitary(q, rng, size)
    total = np.linalg.det(a) * np.linalg.det(b)
    root = rng.integers(0, p, size=None if size is None else size)
    phase = np.exp(-1j * (np.angle(total) + 2 * np.pi * root) / p)
    if size is None:
        a = a * phase
    else:
        a = a * phase[:, None, None]
    return a, b


def k_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Block-diagonal embedding of (A, B) into (p+q)x(p+q) matrices."""
    p, q = a.shape[-1], b.shape[-1]
    out = np.zeros(a.shape[:-2] + (p + q, p + q), dtype=complex)
    out[..., :p, :p] = a
    out[..., p:, p:] = b
    return out


def chi_l(l: int, b: np.ndarray):
    """Character chi_l(k) = det(B)^l of K, from the U(q) block."""
    val = np.linalg.det(b) ** int(l)
    return complex(val) if np.ndim(val) == 0 else val


def torus_element(space: GrassmannParams, pt) -> np.ndarray:
    """exp(i H_t) in closed form; ``pt`` may be a TorusPoint or an array (..., q)."""
    t = np.asarray(pt.t if isinstance(pt, TorusPoint) else pt, dtype=float)
    if t.shape[-1] != space.q:
        raise ParameterError(f"torus point needs {space.q} angles")
    n = space.n
    out = np.zeros(t.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = 1.0
    for j in range(space.q):
        a, b = j, n - 1 - j
        c, s = np.cos(t[..., j]), np.sin(t[..., j])
        out[..., a, a] = c
        out[..., b, b] = c
        out[..., a, b] = 1j * s
        out[..., b, a] = 1j * s
    return out


def torus_element_expm(space: GrassmannParams, pt) -> np.ndarray:
    """Reference path: scipy.linalg.expm of i H_t for a single point."""
    from scipy.linalg import expm

    t = np.asarray(pt.t if isinstance(pt, TorusPoint) else pt, dtype=float)
    n = space.n
    h = np.zeros((n, n))
    for j in range(space.q):
        h[j, n - 1 - j] = h[n - 1 - j, j] = t[j]
    return expm(1j * h)


def check_special_unitary(g: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    g = np.asarray(g)
    n = g.shape[-1]
    gram = np.swapaxes(g.conj(), -1, -2) @ g
    err = np.abs(gram - np.eye(n)).max(axis=(-2, -1))
    det_err = np.abs(np.linalg.det(g) - 1)
    return bool(np.all(err <= tol) and np.all(det_err <= tol))


def _block_singular_values(space, g):
    p = space.p
    s = np.linalg.svd(g[..., :p, p:], compute_uv=False)  # descending
    c = np.linalg.svd(g[..., p:, p:], compute_uv=False)[..., ::-1]  # ascending
    return s, c


def kak_coordinates(space: GrassmannParams, g: np.ndarray, check: bool = True) -> np.ndarray:
    """Canonical torus angles of g = k1 exp(i H_t) k2, sorted decreasing.

    The sines come from the top-right p x q block and the cosines from the
    bottom-right q x q block; pairing them through arctan2 keeps full
    precision near both ends of [0, pi/2].
    """
    g = np.asarray(g)
    if g.shape[-1] != space.n or g.shape[-2] != space.n:
        raise ParameterError(f"expected {space.n}x{space.n} matrices")
    if check and not check_special_unitary(g, 1e-8):
        raise ParameterError("input is not special unitary")
    s, c = _block_singular_values(space, g)
    return np.arctan2(s, c)


def spherical_on_group(
    space: GrassmannParams,
    w: SphericalWeight,
    g: np.ndarray,
    opts: SphericalEvalOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """psi_{lambda,l}(g) for arbitrary (batched) group elements.

    Writing g = k1 a_t k2, the lower-right block is B1 diag(cos t) B2, so
    chi_l(k1 k2)^{-1} prod cos(t_j)^|l| equals conj(det g22)^l for l >= 0
    and det(g22)^|l| for l < 0; no explicit K factors are needed.
    """
    g = np.asarray(g)
    p = space.p
    s, c = _block_singular_values(space, g)
    x = np.clip(c**2 - s**2, -1.0, 1.0)
    vals = radial_values(space, w, x, opts).astype(complex)
    if w.l:
        d22 = np.linalg.det(g[..., p:, p:])
        vals = vals * (np.conj(d22) ** w.l if w.l > 0 else d22 ** (-w.l))
    return vals


def haar_special_unitary(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar sample of SU(n): a U(n) sample rescaled by a uniformly chosen n-th root of 1/det."""
    u = haar_unitary(n, rng, size)
    det = np.linalg.det(u)
    root = rng.integers(0, n, size=None if size is None else size)
    phase = np.exp(-1j * (np.angle(det) + 2 * np.pi * root) / n)
    return u * (phase if size is None else phase[:, None, None])
