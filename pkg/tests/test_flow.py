import numpy as np
import pytest

import hamflow as hf
from hamflow._linalg import ambient_c2r
from hamflow.geometry import (ambient_basis, ambient_i_matrix,
                              ambient_omega_complex_matrix, omega1_matrix)
from conftest import random_complex_flat_poly, random_real_flat_poly

FLAT1 = hf.ModelDescriptor.flat(1)
SPHERE = hf.ModelDescriptor.sphere()
WIDE = hf.IntegratorConfig(horizon=4.0)


def _ham(model, terms):
    return hf.PolynomialHamiltonian(model, 0, terms).extend()


def test_xi_field_examples():
    H = _ham(FLAT1, (hf.term(1.0, 1, 1),))  # H = z u
    a, b = hf.xi_field(H, hf.AmbientPoint(0, np.array([2 + 1j]), np.array([-0.5 + 0j])))
    np.testing.assert_allclose(a, [-2j * (2 + 1j)])
    np.testing.assert_allclose(b, [2j * (-0.5)])

    Hq = _ham(FLAT1, (hf.term(0.5, 1, 0), hf.term(0.5, 0, 1)))  # H = (z+u)/2
    a, b = hf.xi_field(Hq, hf.AmbientPoint(0, np.array([1j]), np.array([3 + 0j])))
    np.testing.assert_allclose(a, [-1j])
    np.testing.assert_allclose(b, [1j])

    Hc = _ham(FLAT1, (hf.term(2.5 - 1j, 0, 0),))  # constant
    a, b = hf.xi_field(Hc, hf.AmbientPoint(0, np.array([1j]), np.array([3 + 0j])))
    np.testing.assert_allclose(a, [0])
    np.testing.assert_allclose(b, [0])


def test_flow_rotation_full_period():
    H = _ham(FLAT1, (hf.term(1.0, 1, 1),))
    x = hf.kahler_point(FLAT1, 1.0)
    st = hf.flow(H, hf.embed(FLAT1, x), np.pi, WIDE)
    np.testing.assert_allclose(st.point.z, [1.0], atol=1e-8)
    np.testing.assert_allclose(st.point.u, [1.0], atol=1e-8)


def test_flow_exponential_scaling():
    H = _ham(FLAT1, (hf.term(1j, 1, 1),))
    x = hf.kahler_point(FLAT1, 1.0)
    st = hf.flow(H, hf.embed(FLAT1, x), 0.5)
    np.testing.assert_allclose(st.point.z, [np.e], rtol=1e-9)
    np.testing.assert_allclose(st.point.u, [1 / np.e], rtol=1e-9)


def test_flow_zero_time_identity():
    H = _ham(FLAT1, (hf.term(0.3j, 2, 1),))
    p0 = hf.AmbientPoint(0, np.array([0.2 + 0.4j]), np.array([-0.1 + 0j]))
    st = hf.flow(H, p0, 0.0, with_jacobian=True)
    np.testing.assert_array_equal(st.point.z, p0.z)
    np.testing.assert_array_equal(st.point.u, p0.u)
    np.testing.assert_allclose(st.jacobian, np.eye(4))
    assert st.steps == 0


def test_holomorphy_defect_quadratic():
    H = _ham(FLAT1, (hf.term(0.7j, 1, 1), hf.term(0.2, 2, 0)))
    x = hf.kahler_point(FLAT1, 0.8 + 0.1j)
    st = hf.flow(H, hf.embed(FLAT1, x), 1.0, with_jacobian=True)
    assert hf.holomorphy_defect(st) <= 1e-9


def test_holomorphy_defect_cubic():
    H = _ham(FLAT1, (hf.term(1.0, 2, 1),))
    x = hf.kahler_point(FLAT1, 0.2 + 0.1j)
    st = hf.flow(H, hf.embed(FLAT1, x), 0.2, with_jacobian=True)
    assert hf.holomorphy_defect(st) <= 1e-8


def test_flow_symplecticity_random(rng):
    for k in range(20):
        model = FLAT1 if k % 2 == 0 else hf.ModelDescriptor.flat(2)
        H = random_complex_flat_poly(model, rng, degree=3, scale=0.25).extend()
        z = 0.5 * (rng.normal(size=model.n) + 1j * rng.normal(size=model.n))
        u = np.conj(z) + 0.1 * (rng.normal(size=model.n) + 1j * rng.normal(size=model.n))
        p0 = hf.AmbientPoint(0, z, u)
        t = rng.uniform(0.1, 0.5)
        st = hf.flow(H, p0, t, with_jacobian=True)
        assert hf.symplecticity_defect(model, p0, st) <= 1e-8


def test_hamilton_field_identities(rng):
    # omega1 | xi = d Re H ; omega1 | I xi = -d Im H ; Omega | (xi - i I xi) = 2 dH
    for model in (FLAT1, hf.ModelDescriptor.flat(2), SPHERE):
        n = model.n
        if model.kind == "sphere":
            H = hf.moment_hamiltonian(rng.normal(size=3), rng.normal(size=3)).extend()
        else:
            H = random_complex_flat_poly(model, rng).extend()
        imat = ambient_i_matrix(n)
        basis = ambient_basis(n)
        for _ in range(30):
            z = 0.5 * (rng.normal(size=n) + 1j * rng.normal(size=n))
            u = 0.5 * (rng.normal(size=n) + 1j * rng.normal(size=n))
            p = hf.AmbientPoint(0, z, u)
            a, b = hf.xi_field(H, p)
            xi = ambient_c2r(a, b)
            _, hz, hu = H.eval_with_partials(p)
            dh = np.array([hz @ dz + hu @ du for dz, du in basis])
            w1 = omega1_matrix(model, p)
            scale = max(1.0, float(np.linalg.norm(dh)))
            assert np.linalg.norm(w1.T @ xi - dh.real) <= 1e-10 * scale
            assert np.linalg.norm(w1.T @ (imat @ xi) + dh.imag) <= 1e-10 * scale
            oc = ambient_omega_complex_matrix(model, p)
            lhs = oc.T @ xi - 1j * (oc.T @ (imat @ xi))
            assert np.linalg.norm(lhs - 2 * dh) <= 1e-12 * scale


def test_real_h_trajectories_stay_on_real_locus(rng):
    for k in range(10):
        if k % 2 == 0:
            h = random_real_flat_poly(FLAT1, rng, degree=4, scale=0.3)
            model = FLAT1
        else:
            h = hf.moment_hamiltonian(rng.normal(size=3) * 0.5)
            model = SPHERE
        H = h.extend()
        z = 0.6 * (rng.normal(size=1) + 1j * rng.normal(size=1))
        st = hf.flow(H, hf.embed(model, hf.KahlerPoint(0, z)), 0.5)
        drift = np.max(np.abs(st.point.u - np.conj(st.point.z)))
        assert drift <= 1e-9


def test_time_reversal(rng):
    for _ in range(5):
        H = random_complex_flat_poly(FLAT1, rng, scale=0.25).extend()
        z = 0.5 * (rng.normal(size=1) + 1j * rng.normal(size=1))
        u = 0.5 * (rng.normal(size=1) + 1j * rng.normal(size=1))
        p0 = hf.AmbientPoint(0, z, u)
        t = 0.4
        mid = hf.flow(H, p0, t)
        back = hf.flow(H, mid.point, -t)
        assert np.max(np.abs(back.point.z - p0.z)) <= 1e-9
        assert np.max(np.abs(back.point.u - p0.u)) <= 1e-9


def test_flow_divergence_error_carries_last_good_time():
    # dz/dt = -2i H_u with H = i u^2 gives du/dt = 0, z' = 4u... pick a true
    # blow-up instead: H = i (zu)^2 -> dz/dt = 4 z^2 u, quadratic blow-up
    H = _ham(FLAT1, (hf.term(1j, 2, 2),))
    p0 = hf.AmbientPoint(0, np.array([3.0 + 0j]), np.array([3.0 + 0j]))
    with pytest.raises(hf.FlowDivergenceError) as err:
        hf.flow(H, p0, 1.5)
    assert np.isfinite(err.value.last_good_time)
    assert 0.0 <= err.value.last_good_time < 1.5


def test_flow_horizon_precondition():
    H = _ham(FLAT1, (hf.term(1.0, 1, 1),))
    with pytest.raises(ValueError):
        hf.flow(H, hf.AmbientPoint(0, np.array([1 + 0j]), np.array([1 + 0j])), 3.0)


def test_rk4_matches_rk45():
    H = _ham(FLAT1, (hf.term(1j, 1, 1), hf.term(0.1, 2, 1)))
    p0 = hf.AmbientPoint(0, np.array([0.4 + 0.2j]), np.array([0.4 - 0.2j]))
    st_a = hf.flow(H, p0, 0.5)
    st_f = hf.flow(H, p0, 0.5, hf.IntegratorConfig(method="rk4_fixed", step=1e-3))
    assert np.max(np.abs(st_a.point.z - st_f.point.z)) < 1e-9


def test_sphere_chart_switch_preserves_trajectory():
    # great-circle rotation about the x1 axis crosses the antipodal chart
    H = hf.moment_hamiltonian([1.0, 0.0, 0.0]).extend()
    x = hf.kahler_point(SPHERE, 0.9j)
    gen = hf.Sl2Generator.from_moment([1.0, 0.0, 0.0])
    st = hf.flow(H, hf.embed(SPHERE, x), -0.8, with_jacobian=True)
    assert st.point.chart == 1  # passed through the antipodal region
    ref = hf.oracle_mobius(gen, x, -0.8)
    y = hf.KahlerPoint(st.point.chart, st.point.z)
    assert hf.chart_distance(SPHERE, y, ref) <= 1e-9
    # Jacobian survives the switch: symplecticity still holds
    assert hf.symplecticity_defect(SPHERE, hf.embed(SPHERE, x), st) <= 1e-8


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        hf.IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        hf.IntegratorConfig(abs_tol=-1.0)
