import numpy as np
import pytest

import hamflow as hf
from conftest import random_real_flat_poly

FLAT1 = hf.ModelDescriptor.flat(1)
FLAT2 = hf.ModelDescriptor.flat(2)
SPHERE = hf.ModelDescriptor.sphere()


def test_quadratic_oracle_rotation():
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(1.0, 1, 1),))
    spec = hf.QuadraticSpec.from_hamiltonian(h)
    y, jt = hf.oracle_quadratic(spec, hf.kahler_point(FLAT1, 1.0), np.pi / 2)
    np.testing.assert_allclose(y.z, [-1.0], atol=1e-13)
    np.testing.assert_allclose(jt, hf.j0_matrix(1), atol=1e-13)


def test_quadratic_oracle_scaling():
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(1j, 1, 1),))
    spec = hf.QuadraticSpec.from_hamiltonian(h)
    y, _ = hf.oracle_quadratic(spec, hf.kahler_point(FLAT1, 1.0), 0.5)
    np.testing.assert_allclose(y.z, [np.e], rtol=1e-13)


def test_quadratic_oracle_zero_hamiltonian():
    spec = hf.QuadraticSpec(np.zeros((2, 2)), np.zeros(2))
    x = hf.kahler_point(FLAT1, 0.3 - 0.7j)
    y, jt = hf.oracle_quadratic(spec, x, 0.4)
    np.testing.assert_allclose(y.z, x.z, atol=1e-15)
    np.testing.assert_allclose(jt, hf.j0_matrix(1), atol=1e-15)


def test_quadratic_oracle_affine_part():
    # h = i q: pure drift, y = z + t
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(0.5j, 1, 0), hf.term(0.5j, 0, 1)))
    spec = hf.QuadraticSpec.from_hamiltonian(h)
    x = hf.kahler_point(FLAT1, 0.2 + 0.3j)
    y, _ = hf.oracle_quadratic(spec, x, 0.7)
    np.testing.assert_allclose(y.z, [0.9 + 0.3j], atol=1e-13)


def test_quadratic_oracle_matches_real_reference(rng):
    for _ in range(5):
        h = random_real_flat_poly(FLAT1, rng, degree=2, scale=0.6)
        spec = hf.QuadraticSpec.from_hamiltonian(h)
        for _ in range(3):
            z = 0.7 * (rng.normal(size=1) + 1j * rng.normal(size=1))
            x = hf.KahlerPoint(0, z)
            t = rng.uniform(0.1, 0.5)
            y_lin, _ = hf.oracle_quadratic(spec, x, t)
            y_ref = hf.real_reference(h, x, t)
            assert hf.chart_distance(FLAT1, y_lin, y_ref) <= 1e-10


def test_quadratic_oracle_n2(rng):
    h = hf.PolynomialHamiltonian(FLAT2, 0, (
        hf.term(0.5j, (0, 0), (2, 0)), hf.term(1.0, (1, 0), (0, 1)),
        hf.term(1.0, (0, 1), (1, 0)), hf.term(0.3, (0, 2), (0, 0))))
    spec = hf.QuadraticSpec.from_hamiltonian(h)
    H = h.extend()
    x = hf.KahlerPoint(0, np.array([0.4 - 0.2j, 0.1 + 0.5j]))
    for t in (0.15, 0.4):
        y_ref, jt_ref = hf.oracle_quadratic(spec, x, t)
        sol = hf.phi(H, x, t)
        assert hf.chart_distance(FLAT2, sol.y, y_ref) <= 1e-8
        jt = hf.j_t(H, x, t)
        assert np.linalg.norm(jt - jt_ref, 2) <= 1e-8


def test_quadratic_spec_rejects_nonquadratic():
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(1.0, 2, 1),))
    with pytest.raises(hf.ConfigError):
        hf.QuadraticSpec.from_hamiltonian(h)


def test_mobius_rotation_about_x3():
    gen = hf.Sl2Generator.from_moment([0.0, 0.0, 1.0])
    y = hf.oracle_mobius(gen, hf.kahler_point(SPHERE, 1.0), np.pi)
    np.testing.assert_allclose(y.z, [-1.0], atol=1e-12)
    # quarter turn sends the x1 pole to the x2 pole
    y = hf.oracle_mobius(gen, hf.kahler_point(SPHERE, 1.0), np.pi / 2)
    np.testing.assert_allclose(y.z, [1j], atol=1e-12)


def test_mobius_gradient_toward_pole():
    # h = i x3 flows toward the x3 = +1 pole at z = 0
    gen = hf.Sl2Generator.from_moment([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    y = hf.oracle_mobius(gen, hf.kahler_point(SPHERE, 1.0), np.log(2.0))
    np.testing.assert_allclose(y.z, [0.5], atol=1e-13)


def test_mobius_identity_at_zero():
    gen = hf.Sl2Generator.from_moment([0.3, -0.4, 0.2], [0.1, 0.0, -0.5])
    x = hf.kahler_point(SPHERE, 0.3 - 0.6j)
    y = hf.oracle_mobius(gen, x, 0.0)
    np.testing.assert_allclose(y.z, x.z, atol=1e-15)


def test_mobius_one_parameter_group(rng):
    for _ in range(5):
        gen = hf.Sl2Generator.from_moment(rng.normal(size=3), rng.normal(size=3))
        x = hf.kahler_point(SPHERE, 0.4 * (rng.normal() + 1j * rng.normal()))
        t, s = rng.uniform(0.05, 0.4, size=2)
        once = hf.oracle_mobius(gen, x, t + s)
        twice = hf.oracle_mobius(gen, hf.oracle_mobius(gen, x, s), t)
        assert hf.chart_distance(SPHERE, once, twice) <= 1e-10


def test_mobius_x3_rotation_preserves_circles(rng):
    gen = hf.Sl2Generator.from_moment([0.0, 0.0, 0.7])
    for _ in range(10):
        r = rng.uniform(0.2, 0.9)
        x = hf.kahler_point(SPHERE, r * np.exp(2j * np.pi * rng.uniform()))
        y = hf.oracle_mobius(gen, x, rng.uniform(0.0, 2.0))
        assert abs(abs(y.z[0]) - r) < 1e-12


def test_mobius_agrees_with_real_reference(rng):
    # pins the moment-map normalization operationally
    for axis in range(3):
        a = np.eye(3)[axis]
        gen = hf.Sl2Generator.from_moment(a)
        h = hf.moment_hamiltonian(a)
        x = hf.kahler_point(SPHERE, 0.5 + 0.2j)
        for t in (0.3, 0.9):
            ref = hf.real_reference(h, x, t)
            mob = hf.oracle_mobius(gen, x, t)
            assert hf.chart_distance(SPHERE, mob, ref) <= 1e-9


def test_sl2_from_hamiltonian_roundtrip(rng):
    a = rng.normal(size=3)
    b = rng.normal(size=3)
    h = hf.moment_hamiltonian(a, b)
    gen = hf.sl2_from_hamiltonian(h)
    gen_direct = hf.Sl2Generator.from_moment(a, b)
    np.testing.assert_allclose(gen.zeta, gen_direct.zeta, atol=1e-13)
    hq = hf.moment_hamiltonian([1, 0, 0]).product(hf.moment_hamiltonian([0, 0, 1]))
    with pytest.raises(hf.ConfigError):
        hf.sl2_from_hamiltonian(hq)


def test_real_reference_examples():
    # h = z zbar = q^2 + p^2: clockwise rotation at frequency 2
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(1.0, 1, 1),))
    y = hf.real_reference(h, hf.kahler_point(FLAT1, 1.0), np.pi / 4)
    np.testing.assert_allclose(y.z, [-1j], atol=1e-11)

    # h = q: Xi_q = -d/dp
    hq = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(0.5, 1, 0), hf.term(0.5, 0, 1)))
    y = hf.real_reference(hq, hf.kahler_point(FLAT1, 0.0), 1.0)
    np.testing.assert_allclose(y.z, [-1j], atol=1e-12)

    x = hf.kahler_point(FLAT1, 0.3 + 0.2j)
    y0 = hf.real_reference(hq, x, 0.0)
    np.testing.assert_array_equal(y0.z, x.z)


def test_real_reference_rejects_complex_h():
    h = hf.PolynomialHamiltonian(FLAT1, 0, (hf.term(1j, 1, 1),))
    with pytest.raises(ValueError):
        hf.real_reference(h, hf.kahler_point(FLAT1, 1.0), 0.1)


def test_real_reference_sphere_chart_switch():
    # great-circle rotation through the antipodal pole
    h = hf.moment_hamiltonian([1.0, 0.0, 0.0])
    x = hf.kahler_point(SPHERE, 0.9j)
    gen = hf.Sl2Generator.from_moment([1.0, 0.0, 0.0])
    for t in (-0.8, -1.4):
        ref = hf.real_reference(h, x, t)
        mob = hf.oracle_mobius(gen, x, t)
        assert hf.chart_distance(SPHERE, ref, mob) <= 1e-9
