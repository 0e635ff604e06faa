import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surfnav.errors import SeparationViolationError
from surfnav.field import (
    FieldGains,
    cgvf_control,
    higher_dim_gvf,
    original_gvf_3d,
    pairwise_repulsion,
    repulsion_potential,
    repulsion_terms,
    repulsion_weight,
    repulsion_weight_derivative,
)
from surfnav.surfaces import torus

SAFE, SENSE = 0.4, 0.6


def lifted_field_oracle(model, k, m_tail, x, omega):
    """Straight-line transcription of the lifted field, one scalar at a time."""
    n = model.dim_ambient
    f = model.eval(omega)
    jac = model.jacobian(omega)
    sgn = (-1.0) ** n
    m1, m2 = m_tail
    chi = []
    for j in range(n):
        phi_j = x[j] - f[j]
        chi.append(sgn * (m2 * jac[j, 0] - m1 * jac[j, 1]) - k[j] * phi_j)
    s1 = sum(k[j] * (x[j] - f[j]) * jac[j, 0] for j in range(n))
    s2 = sum(k[j] * (x[j] - f[j]) * jac[j, 1] for j in range(n))
    chi.append(sgn * m2 + s1)
    chi.append(-sgn * m1 + s2)
    return np.array(chi)


def control_oracle(model, gains, x, omega, omega_hat, neighbors):
    """Transcription of the coordinated control law, scalar arithmetic only."""
    chi = lifted_field_oracle(model, gains.k, gains.m_tail, x, omega)
    n = model.dim_ambient
    eta = [0.0, 0.0]
    for other in neighbors:
        gap = [omega[0] - other[0], omega[1] - other[1]]
        sep = math.hypot(gap[0], gap[1])
        w = (sep - SENSE) ** 2 / (sep - SAFE) ** 2 if sep <= SENSE else 0.0
        eta[0] += w * gap[0] / sep
        eta[1] += w * gap[1] / sep
    rate = [
        chi[n] - gains.c * (omega[0] - omega_hat[0]) + eta[0],
        chi[n + 1] - gains.c * (omega[1] - omega_hat[1]) + eta[1],
    ]
    return chi[:n], np.array(rate)


class TestRepulsionWeight:
    def test_zero_beyond_sensing_radius(self):
        assert repulsion_weight(0.7, SAFE, SENSE) == 0.0
        assert repulsion_weight(100.0, SAFE, SENSE) == 0.0

    def test_unity_at_band_midpoint(self):
        assert repulsion_weight(0.5, SAFE, SENSE) == 1.0

    def test_steep_near_safe_radius(self):
        assert repulsion_weight(0.41, SAFE, SENSE) == pytest.approx(361.0, rel=1e-9)

    def test_continuous_at_sensing_radius(self):
        assert repulsion_weight(SENSE, SAFE, SENSE) == 0.0
        assert repulsion_weight(SENSE - 1e-9, SAFE, SENSE) < 1e-12
        assert repulsion_weight(SENSE + 1e-9, SAFE, SENSE) == 0.0

    def test_rejects_separation_at_or_below_safe_radius(self):
        for s in (SAFE, 0.39, 0.0):
            with pytest.raises(SeparationViolationError):
                repulsion_weight(s, SAFE, SENSE)

    def test_elementwise_on_arrays(self):
        s = np.array([0.41, 0.5, 0.6, 0.7])
        got = repulsion_weight(s, SAFE, SENSE)
        assert np.array_equal(
            got, [repulsion_weight(v, SAFE, SENSE) for v in s]
        )

    @given(
        st.floats(min_value=0.401, max_value=0.6),
        st.floats(min_value=0.401, max_value=0.6),
    )
    def test_strictly_decreasing_inside_band(self, a, b):
        lo, hi = sorted((a, b))
        if lo < hi:
            assert repulsion_weight(lo, SAFE, SENSE) > repulsion_weight(hi, SAFE, SENSE)


class TestRepulsionWeightDerivative:
    def test_vanishes_at_sensing_radius_from_both_sides(self):
        assert repulsion_weight_derivative(SENSE, SAFE, SENSE) == 0.0
        assert abs(repulsion_weight_derivative(SENSE - 1e-9, SAFE, SENSE)) < 1e-6
        assert repulsion_weight_derivative(SENSE + 1e-9, SAFE, SENSE) == 0.0

    def test_value_at_band_midpoint(self):
        got = repulsion_weight_derivative(0.5, SAFE, SENSE)
        assert got == pytest.approx(-40.0, rel=1e-12)

    def test_zero_beyond_sensing_radius(self):
        assert repulsion_weight_derivative(1.0, SAFE, SENSE) == 0.0

    def test_rejects_breach(self):
        with pytest.raises(SeparationViolationError):
            repulsion_weight_derivative(0.4, SAFE, SENSE)


class TestRepulsionPotential:
    def test_zero_at_and_beyond_sensing_radius(self):
        assert repulsion_potential(SENSE, SAFE, SENSE) == 0.0
        assert repulsion_potential(0.9, SAFE, SENSE) == 0.0

    def test_matches_numeric_quadrature(self):
        quad = pytest.importorskip("scipy.integrate").quad

        def weight(s):
            return (s - SENSE) ** 2 / (s - SAFE) ** 2

        for s in (0.401, 0.45, 0.5, 0.55, 0.59, 0.5999):
            expected, _ = quad(weight, s, SENSE, epsabs=1e-13, epsrel=1e-13)
            assert repulsion_potential(s, SAFE, SENSE) == pytest.approx(
                expected, abs=1e-9
            )

    def test_diverges_toward_safe_radius(self):
        assert repulsion_potential(0.4001, SAFE, SENSE) > repulsion_potential(
            0.45, SAFE, SENSE
        )
        assert repulsion_potential(SAFE + 1e-9, SAFE, SENSE) > 1e5


class TestRepulsionTerms:
    def test_empty_neighborhood(self):
        assert np.array_equal(
            repulsion_terms([0.0, 0.0], [], SAFE, SENSE), [0.0, 0.0]
        )

    def test_single_neighbor_example(self):
        eta = repulsion_terms([0.0, 0.0], [[0.5, 0.0]], SAFE, SENSE)
        assert np.array_equal(eta, [-1.0, 0.0])

    def test_pair_contributions_cancel_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a = rng.uniform(-3, 3, 2)
            b = a + rng.uniform(0.41, 0.59) * _unit(rng)
            total = repulsion_terms(a, [b], SAFE, SENSE) + repulsion_terms(
                b, [a], SAFE, SENSE
            )
            assert np.array_equal(total, [0.0, 0.0])

    def test_rejects_breach_and_zero_separation(self):
        with pytest.raises(SeparationViolationError):
            repulsion_terms([0.0, 0.0], [[0.3, 0.0]], SAFE, SENSE)
        with pytest.raises(SeparationViolationError):
            repulsion_terms([1.0, 1.0], [[1.0, 1.0]], SAFE, SENSE)


def _unit(rng):
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([np.cos(angle), np.sin(angle)])


class TestPairwiseRepulsion:
    def _swarm(self, rng, count):
        while True:
            omega = rng.uniform(-2, 2, size=(count, 2))
            dist = np.linalg.norm(omega[:, None] - omega[None, :], axis=2)
            if dist[~np.eye(count, dtype=bool)].min() > 0.41:
                return omega

    def test_matches_per_robot_terms(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            omega = self._swarm(rng, 8)
            eta, dist = pairwise_repulsion(omega, SAFE, SENSE)
            for i in range(8):
                neighbors = [omega[k] for k in range(8)
                             if k != i and dist[i, k] < SENSE]
                expected = repulsion_terms(omega[i], neighbors, SAFE, SENSE)
                np.testing.assert_allclose(eta[i], expected, atol=1e-12)

    def test_swarm_total_cancels(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            omega = self._swarm(rng, 12)
            eta, _ = pairwise_repulsion(omega, SAFE, SENSE)
            assert np.abs(eta.sum(axis=0)).max() < 1e-12

    def test_breach_names_the_pair(self):
        omega = np.array([[0.0, 0.0], [5.0, 0.0], [0.35, 0.0]])
        with pytest.raises(SeparationViolationError) as info:
            pairwise_repulsion(omega, SAFE, SENSE)
        assert info.value.pair == (0, 2)
        assert info.value.separation == pytest.approx(0.35)


class TestHigherDimGvf:
    def setup_method(self):
        self.model = torus(6.0, 2.0)
        self.gains = FieldGains(k=np.full(3, 0.6), c=3.0, m_tail=(-1.0, 1.0))

    def test_on_surface_reduces_to_propagation(self):
        omega = np.array([0.7, -0.3])
        x = self.model.eval(omega)
        chi = higher_dim_gvf(self.model, self.gains, np.concatenate([x, omega]))
        jac = self.model.jacobian(omega)
        assert np.array_equal(chi[3:], [-1.0, -1.0])
        np.testing.assert_allclose(chi[:3], -(jac[:, 0] + jac[:, 1]), atol=1e-15)

    def test_frozen_off_surface_example(self):
        chi = higher_dim_gvf(
            self.model, self.gains, np.array([9.0, 0.0, 0.0, 0.0, 0.0])
        )
        assert np.array_equal(chi, [-0.6, -8.0, -2.0, -1.0, -1.0])

    def test_matches_transcription_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            x = rng.uniform(-9, 9, 3)
            omega = rng.uniform(-7, 7, 2)
            chi = higher_dim_gvf(self.model, self.gains,
                                 np.concatenate([x, omega]))
            expected = lifted_field_oracle(self.model, self.gains.k,
                                           self.gains.m_tail, x, omega)
            np.testing.assert_allclose(chi, expected, atol=1e-12)

    def test_sampled_nonvanishing(self):
        rng = np.random.default_rng(19)
        for _ in range(1000):
            p = np.concatenate([rng.uniform(-9, 9, 3), rng.uniform(-7, 7, 2)])
            assert np.linalg.norm(higher_dim_gvf(self.model, self.gains, p)) > 0.1

    def test_rejects_bad_state_length(self):
        with pytest.raises(ValueError, match="length"):
            higher_dim_gvf(self.model, self.gains, np.zeros(4))


class TestOriginalGvf3d:
    @staticmethod
    def sphere_phi(p):
        return p[0] ** 2 + p[1] ** 2 + p[2] ** 2 - 1.0

    @staticmethod
    def sphere_grad(p):
        return 2.0 * p

    def test_pole_is_singular(self):
        chi = original_gvf_3d(
            self.sphere_phi, self.sphere_grad, [0.0, 0.0, 1.0], 1.0,
            [0.0, 0.0, 1.0],
        )
        assert np.array_equal(chi, [0.0, 0.0, 0.0])

    def test_on_level_set_with_orthogonal_traversal(self):
        x = np.array([1.0, 0.0, 0.0])
        m = np.array([0.0, 0.0, 1.0])
        chi = original_gvf_3d(self.sphere_phi, self.sphere_grad, m, 1.0, x)
        assert np.array_equal(chi, np.cross(self.sphere_grad(x), m))

    def test_off_surface_adds_gradient_descent(self):
        x = np.array([0.0, 0.0, 2.0])
        chi = original_gvf_3d(
            self.sphere_phi, self.sphere_grad, [0.0, 0.0, 1.0], 0.5, x
        )
        # gradient parallel to traversal: pure convergence term remains
        assert np.array_equal(chi, -0.5 * 3.0 * np.array([0.0, 0.0, 4.0]))

    def test_rejects_zero_traversal_vector(self):
        with pytest.raises(ValueError):
            original_gvf_3d(self.sphere_phi, self.sphere_grad,
                            [0.0, 0.0, 0.0], 1.0, [1.0, 0.0, 0.0])


class TestCgvfControl:
    def setup_method(self):
        self.model = torus(6.0, 2.0)
        self.gains = FieldGains(k=np.full(3, 0.6), c=3.0, m_tail=(-1.0, 1.0))

    def test_on_surface_idle_swarm(self):
        omega = np.array([0.0, 0.0])
        out = cgvf_control(self.model, self.gains, self.model.eval(omega),
                           omega, omega, [], SAFE, SENSE)
        assert np.array_equal(out.u, [0.0, -8.0, -2.0])
        assert np.array_equal(out.omega_rate, [-1.0, -1.0])

    def test_perfect_tracking_moves_with_target(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            omega = rng.uniform(-5, 5, 2)
            out = cgvf_control(self.model, self.gains, self.model.eval(omega),
                               omega, omega, [], SAFE, SENSE)
            assert np.array_equal(out.omega_rate, [-1.0, -1.0])

    def test_frozen_example_with_neighbor(self):
        out = cgvf_control(
            self.model, self.gains, [9.0, 0.0, 0.0], [0.0, 0.0], [0.1, 0.0],
            [[0.5, 0.0]], SAFE, SENSE,
        )
        np.testing.assert_allclose(out.u, [-0.6, -8.0, -2.0], atol=1e-12)
        np.testing.assert_allclose(out.omega_rate, [-1.7, -1.0], atol=1e-12)

    def test_matches_transcription_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            omega = rng.uniform(-4, 4, 2)
            neighbors = [omega + rng.uniform(0.42, 0.58) * _unit(rng)
                         for _ in range(int(rng.integers(0, 4)))]
            x = rng.uniform(-9, 9, 3)
            omega_hat = rng.uniform(-4, 4, 2)
            out = cgvf_control(self.model, self.gains, x, omega, omega_hat,
                               neighbors, SAFE, SENSE)
            exp_u, exp_rate = control_oracle(self.model, self.gains, x, omega,
                                             omega_hat, neighbors)
            np.testing.assert_allclose(out.u, exp_u, atol=1e-12)
            np.testing.assert_allclose(out.omega_rate, exp_rate, atol=1e-12)

    def test_consistent_with_lifted_field(self):
        # with a perfect estimate and no neighbors the control law IS the
        # lifted field, block by block
        rng = np.random.default_rng(31)
        for _ in range(20):
            x = rng.uniform(-9, 9, 3)
            omega = rng.uniform(-5, 5, 2)
            chi = higher_dim_gvf(self.model, self.gains,
                                 np.concatenate([x, omega]))
            out = cgvf_control(self.model, self.gains, x, omega, omega, [],
                               SAFE, SENSE)
            assert np.array_equal(out.u, chi[:3])
            assert np.array_equal(out.omega_rate, chi[3:])

    def test_propagates_separation_violation(self):
        with pytest.raises(SeparationViolationError):
            cgvf_control(self.model, self.gains, [9.0, 0.0, 0.0], [0.0, 0.0],
                         [0.0, 0.0], [[0.2, 0.0]], SAFE, SENSE)


class TestFieldGains:
    def test_rejects_nonpositive_gains(self):
        with pytest.raises(ValueError):
            FieldGains(k=[0.6, -0.1, 0.6], c=3.0)
        with pytest.raises(ValueError):
            FieldGains(k=[0.6, 0.6, 0.6], c=0.0)

    def test_rejects_zero_traversal_entries(self):
        with pytest.raises(ValueError):
            FieldGains(k=[1.0], c=1.0, m_tail=(0.0, 1.0))
        with pytest.raises(ValueError):
            FieldGains(k=[1.0], c=1.0, m_tail=(-1.0, 0.0))
