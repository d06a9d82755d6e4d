"""Angular integrals A_beta, eps_q and their decay profiles."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import sici

from mlmom.errors import DivergenceError, DomainError
from mlmom.kernels import (
    CollisionKernel,
    GradBounded,
    PowerLawSingular,
    TruncatedSingular,
    a2_weight,
    a_beta,
    angular_kernel_from_name,
    angular_mass,
    ball_volume,
    beta_for_order,
    epsilon_decay_profile,
    epsilon_q,
    inner_time_integral,
    sphere_area,
)


def eps_double_quadrature(kernel, q):
    """Independent oracle: raw double quadrature of the defining integral."""
    d = kernel.d

    def outer(th):
        inner, _ = integrate.quad(
            lambda t: t * (1 - (math.sin(th) ** 2 / 2) * t) ** (q - 2), 0, 1
        )
        return inner * float(kernel.b(th)) * math.sin(th) ** d

    lo = max(kernel.theta_lo, 1e-12)
    pieces = 0.0
    for a, b in [(lo, 1e-6), (1e-6, 1e-2), (1e-2, math.pi / 2), (math.pi / 2, math.pi - 1e-9)]:
        if b > a:
            val, _ = integrate.quad(outer, a, b, limit=400)
            pieces += val
    return 2 * sphere_area(d - 2) * pieces / a2_weight(kernel)


class TestABeta:
    def test_bounded_elementary_integral(self, bounded_kernel):
        # V_1 * int sin^3 = 2 * 4/3
        val, err = a_beta(bounded_kernel, 2.0)
        assert val == pytest.approx(8.0 / 3.0, rel=1e-11)
        assert err < 1e-9 * val

    def test_singular_closed_form(self, singular_kernel):
        # b sin(t) = t^-2 model: 2 * int sin^2/t^2 = 2 Si(2 pi)
        val, _ = a_beta(singular_kernel, 2.0)
        assert val == pytest.approx(2.0 * sici(2 * math.pi)[0], rel=1e-9)

    def test_divergence_detected_analytically(self, singular_kernel):
        with pytest.raises(DivergenceError):
            a_beta(singular_kernel, 0.5)
        with pytest.raises(DivergenceError):
            a_beta(singular_kernel, 1.0)  # beta == nu also diverges

    def test_monotone_in_beta(self, kernel_matrix):
        for kern in kernel_matrix:
            lo = kern.nu + 0.05 if isinstance(kern, PowerLawSingular) else 0.1
            betas = np.linspace(lo, 2.0, 7)
            vals = [a_beta(kern, float(b))[0] for b in betas]
            assert all(v2 <= v1 * (1 + 1e-12) for v1, v2 in zip(vals, vals[1:]))

    def test_beta_domain(self, bounded_kernel):
        with pytest.raises(DomainError):
            a_beta(bounded_kernel, 0.0)
        with pytest.raises(DomainError):
            a_beta(bounded_kernel, 2.5)

    def test_d2_smoke(self):
        kern = GradBounded(b0=1.0, d=2)
        # V_0 * int_0^pi sin^2 = pi/2
        val, _ = a_beta(kern, 2.0)
        assert val == pytest.approx(math.pi / 2.0, rel=1e-11)


class TestA2AndMass:
    def test_bounded_value(self, bounded_kernel):
        assert a2_weight(bounded_kernel) == pytest.approx(8 * math.pi / 3, rel=1e-11)

    def test_angular_mass_cutoff_only(self, bounded_kernel, singular_kernel):
        assert angular_mass(bounded_kernel) == pytest.approx(4 * math.pi, rel=1e-11)
        with pytest.raises(DivergenceError):
            angular_mass(singular_kernel)


class TestInnerTimeIntegral:
    def test_against_quadrature(self, rng):
        for _ in range(60):
            c = float(rng.uniform(0, 0.5))
            m = float(rng.uniform(0, 900))
            ref, _ = integrate.quad(lambda t: t * (1 - c * t) ** m, 0, 1)
            assert inner_time_integral(c, m) == pytest.approx(ref, rel=1e-9, abs=1e-15)

    def test_small_c_branch(self):
        # series branch joins the closed form continuously
        m = 100.0
        for c in (1e-8, 1e-6, 1e-5):
            ref, _ = integrate.quad(lambda t: t * (1 - c * t) ** m, 0, 1)
            assert inner_time_integral(c, m) == pytest.approx(ref, rel=1e-10)


class TestEpsilonQ:
    def test_eps2_is_one_for_every_family(self, kernel_matrix):
        for kern in kernel_matrix:
            assert epsilon_q(kern, 2.0) == pytest.approx(1.0, rel=1e-10)

    def test_double_quadrature_oracle(self, kernel_matrix):
        for kern in kernel_matrix:
            for q in (2.0, 4.0, 7.3):
                assert epsilon_q(kern, q) == pytest.approx(
                    eps_double_quadrature(kern, q), rel=1e-7
                )

    def test_monotone_and_bounded(self, kernel_matrix):
        for kern in kernel_matrix:
            vals = [epsilon_q(kern, q) for q in (2, 4, 8, 16, 64, 256)]
            assert all(0.0 < v <= 1.0 + 1e-12 for v in vals)
            assert all(v2 <= v1 * (1 + 1e-12) for v1, v2 in zip(vals, vals[1:]))

    def test_vanishing_limit(self, kernel_matrix):
        # eps_q decays like q^(-(2-nu)/2); the 4 -> 1024 contraction factor is
        # therefore 256^(-(2-nu)/2): 0.05 is only attainable for mild
        # singularities (nu < ~0.9). Assert the family-specific contraction.
        for kern in kernel_matrix:
            ratio = epsilon_q(kern, 1024.0) / epsilon_q(kern, 4.0)
            predicted = 256.0 ** (-0.5 * (2.0 - kern.nu))
            assert ratio < max(0.05, 1.6 * predicted)
        assert epsilon_q(GradBounded(1.0, 3), 1024.0) < 0.05 * epsilon_q(
            GradBounded(1.0, 3), 4.0
        )
        mild = PowerLawSingular(nu=0.5, d=3)
        assert epsilon_q(mild, 1024.0) < 0.05 * epsilon_q(mild, 4.0)

    def test_domain(self, bounded_kernel):
        with pytest.raises(DomainError):
            epsilon_q(bounded_kernel, 1.5)


class TestDecayProfiles:
    Q_GRID = [4.0 * 2**i for i in range(9)]  # 4 .. 1024

    def test_powerlaw_nu1_beta2_profile(self, singular_kernel):
        prof = epsilon_decay_profile(singular_kernel, 2.0, self.Q_GRID)
        norm = prof.normalized
        # beta = 2: the normalized sequence is eps_q itself, decreasing to near 0
        assert np.allclose(norm, prof.values)
        assert prof.eventually_decreasing(4.0)
        assert norm[-1] < 0.1 * norm[0]

    def test_bounded_beta_01_profile(self, bounded_kernel):
        prof = epsilon_decay_profile(bounded_kernel, 0.1, self.Q_GRID)
        norm = prof.normalized
        assert prof.eventually_decreasing()
        assert norm[-1] < 0.1 * norm[0]

    def test_truncated_beta_16_profile(self, truncated_kernel):
        prof = epsilon_decay_profile(truncated_kernel, 1.6, self.Q_GRID)
        norm = prof.normalized
        assert np.all(np.isfinite(norm))
        assert prof.eventually_decreasing()
        assert norm[-1] < norm[0]

    def test_divergence_propagates(self, singular_kernel):
        with pytest.raises(DivergenceError):
            epsilon_decay_profile(singular_kernel, 0.5, self.Q_GRID)

    def test_workers_do_not_change_results(self, bounded_kernel):
        p1 = epsilon_decay_profile(bounded_kernel, 2.0, self.Q_GRID, workers=1)
        p4 = epsilon_decay_profile(bounded_kernel, 2.0, self.Q_GRID, workers=4)
        assert p1.values == p4.values


class TestConfigurationWiring:
    def test_beta_order_tradeoff_exact(self):
        # s in (1, 2): beta = 4/s - 2 as exact arithmetic
        for s in (1.25, 1.5, 1.6, 1.9):
            assert beta_for_order(s) == 4.0 / s - 2.0
        assert beta_for_order(0.7) == 2.0
        assert beta_for_order(1.0) == 2.0

    def test_factory_roundtrip(self):
        k = angular_kernel_from_name("truncated", d=3, nu=1.5, theta_min=1e-3)
        assert isinstance(k, TruncatedSingular)
        assert k.theta_lo == 1e-3
        with pytest.raises(DomainError):
            angular_kernel_from_name("nope")

    def test_collision_kernel_domain(self, bounded_kernel):
        with pytest.raises(DomainError):
            CollisionKernel(gamma=0.0, angular=bounded_kernel)
        with pytest.raises(DomainError):
            CollisionKernel(gamma=1.5, angular=bounded_kernel)
        assert CollisionKernel(gamma=0.5, angular=bounded_kernel).d == 3

    def test_geometry_constants(self):
        assert ball_volume(1) == pytest.approx(2.0, rel=1e-14)
        assert ball_volume(0) == 1.0
        assert sphere_area(0) == pytest.approx(2.0, rel=1e-14)
        assert sphere_area(1) == pytest.approx(2 * math.pi, rel=1e-14)
