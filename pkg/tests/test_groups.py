import math

import numpy as np
import pytest
from scipy import stats

from grassharm import lattice as lc
from grassharm.groups import (
    check_special_unitary,
    chi_l,
    haar_k,
    haar_special_unitary,
    haar_unitary,
    k_matrix,
    kak_coordinates,
    spherical_on_group,
    torus_element,
    torus_element_expm,
)
from grassharm.spherical import spherical_values

SPACES = [lc.make_space(p, q) for p, q in ((1, 1), (2, 1), (2, 2), (3, 2), (4, 1))]


def rng(seed=0):
    return np.random.default_rng(seed)


def test_haar_unitary_is_unitary():
    u = haar_unitary(4, rng(), 200)
    gram = np.swapaxes(u.conj(), -1, -2) @ u
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(4), gram.shape), atol=1e-12)


def test_haar_unitary_second_moment():
    n, size = 3, 40_000
    x = np.abs(haar_unitary(n, rng(1), size)[:, 0, 0]) ** 2
    assert abs(x.mean() - 1 / n) <= 4 * x.std() / math.sqrt(size)


def test_haar_unitary_eigenphases_uniform():
    u = haar_unitary(3, rng(2), 4000)
    phases = np.angle(np.linalg.eigvals(u)).ravel()
    assert stats.kstest((phases + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3


def test_haar_unitary_rejects_bad_size():
    with pytest.raises(lc.ParameterError):
        haar_unitary(0, rng())


def test_haar_special_unitary():
    g = haar_special_unitary(3, rng(3), 500)
    assert check_special_unitary(g)
    # trace of a Haar SU(3) element has E|tr|^2 = 1
    tr2 = np.abs(np.trace(g, axis1=1, axis2=2)) ** 2
    assert abs(tr2.mean() - 1) < 0.15
    assert check_special_unitary(haar_special_unitary(2, rng(4)))


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_haar_k_lands_in_k(space):
    a, b = haar_k(space, rng(5), 300)
    assert check_special_unitary(k_matrix(a, b))
    single_a, single_b = haar_k(space, rng(6))
    assert single_a.shape == (space.p, space.p) and single_b.shape == (space.q, space.q)


def test_haar_k_det_b_phase_uniform():
    space = lc.make_space(2, 1)
    _, b = haar_k(space, rng(7), 5000)
    phase = np.angle(np.linalg.det(b))
    assert stats.kstest((phase + np.pi) / (2 * np.pi), "uniform").pvalue > 1e-3


def test_haar_k_character_integrates_to_zero():
    space = lc.make_space(2, 2)
    _, b = haar_k(space, rng(8), 20_000)
    for l in (1, 2):
        vals = chi_l(l, b)
        assert abs(vals.mean()) < 4 / math.sqrt(len(vals))


def test_chi_is_a_character():
    space = lc.make_space(3, 2)
    (_, b1), (_, b2) = haar_k(space, rng(9)), haar_k(space, rng(10))
    for l in (-2, 1, 3):
        assert chi_l(l, b1 @ b2) == pytest.approx(chi_l(l, b1) * chi_l(l, b2))
        assert chi_l(l, b1) * chi_l(-l, b1) == pytest.approx(1)
    assert chi_l(0, b1) == 1
    assert abs(chi_l(2, b1)) == pytest.approx(1)


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_torus_element_matches_expm(space):
    for t in rng(11).uniform(-2, 2, (10, space.q)):
        np.testing.assert_allclose(torus_element(space, t), torus_element_expm(space, t), atol=1e-13)
    batch = torus_element(space, np.zeros((4, 2, space.q)))
    assert batch.shape == (4, 2, space.n, space.n)
    assert check_special_unitary(torus_element(space, rng(12).uniform(0, 3, (20, space.q))))


def test_torus_element_is_a_homomorphism():
    space = lc.make_space(3, 2)
    s, t = np.array([0.3, 1.1]), np.array([0.5, -0.2])
    np.testing.assert_allclose(torus_element(space, s) @ torus_element(space, t), torus_element(space, s + t), atol=1e-14)


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_kak_round_trip_and_bi_invariance(space):
    r = rng(13)
    t = -np.sort(-r.uniform(0, math.pi / 2, (200, space.q)), axis=1)
    g = torus_element(space, t)
    np.testing.assert_allclose(kak_coordinates(space, g), t, atol=1e-12)
    a1, b1 = haar_k(space, r, 200)
    a2, b2 = haar_k(space, r, 200)
    np.testing.assert_allclose(kak_coordinates(space, k_matrix(a1, b1) @ g @ k_matrix(a2, b2)), t, atol=1e-10)


def test_kak_canonicalizes_unordered_angles():
    space = lc.make_space(3, 2)
    g = torus_element(space, [-0.3, 2.0])
    np.testing.assert_allclose(kak_coordinates(space, g), [math.pi - 2.0, 0.3], atol=1e-13)


def test_kak_endpoints_keep_precision():
    space = lc.make_space(2, 2)
    for t in ([1e-9, 0.0], [math.pi / 2, math.pi / 2 - 1e-9]):
        np.testing.assert_allclose(kak_coordinates(space, torus_element(space, t)), t, atol=1e-15)


def test_kak_rejects_non_unitary():
    space = lc.make_space(2, 1)
    with pytest.raises(lc.ParameterError):
        kak_coordinates(space, 2 * np.eye(3))
    with pytest.raises(lc.ParameterError):
        kak_coordinates(space, np.eye(4))


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_spherical_on_torus_agrees_with_radial_formula(space):
    t = rng(14).uniform(0, 3, (25, space.q))
    for l in (-1, 0, 2):
        for w in lc.enumerate_weights(space, l, 2):
            np.testing.assert_allclose(spherical_on_group(space, w, torus_element(space, t)), spherical_values(space, w, t), atol=1e-11)


@pytest.mark.parametrize("space", SPACES, ids=str)
def test_spherical_on_group_chi_covariance(space):
    r = rng(15)
    g = haar_special_unitary(space.n, r, 50)
    a1, b1 = haar_k(space, r, 50)
    a2, b2 = haar_k(space, r, 50)
    for l in (-2, 1, 3):
        w = lc.enumerate_weights(space, l, 2)[1]
        left = spherical_on_group(space, w, k_matrix(a1, b1) @ g @ k_matrix(a2, b2))
        right = spherical_on_group(space, w, g) / (chi_l(l, b1) * chi_l(l, b2))
        np.testing.assert_allclose(left, right, atol=1e-10)


def test_spherical_on_k_is_inverse_character():
    space = lc.make_space(2, 2)
    a, b = haar_k(space, rng(16), 10)
    for l in (1, -2):
        for w in lc.enumerate_weights(space, l, 2):
            np.testing.assert_allclose(spherical_on_group(space, w, k_matrix(a, b)), 1 / chi_l(l, b), atol=1e-11)
