"""Moment ODI right-hand sides, Bernoulli envelopes, constant ledger."""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mlmom.combinatoric_bounds import binomial
from mlmom.errors import DomainError, MissingMomentError
from mlmom.kernels import a2_weight
from mlmom.moment_bounds import (
    BoundConstants,
    b_rp_constant,
    bernoulli_envelope,
    bernoulli_upper_constant,
    c_q0_constant,
    jensen_lower,
    k_q_star,
    ode_rhs_generation,
    ode_rhs_propagation,
)
from mlmom.moments import (
    maxwellian_trajectory,
    point_mass_trajectory,
    synthetic_tail_trajectory,
)


class TestConstants:
    def test_formulas(self):
        bc = BoundConstants.from_parts(a2=2.0, gamma=0.5, m0=1.0, m2_0=1.6)
        c = min(1.0, 2.0**0.5)
        assert bc.c_gamma == c == 1.0
        assert bc.k1 == 2.0 * c * 1.0
        assert bc.k2 == 2.0 * (1 + 2 / c) * 1.6
        assert bc.k3 == 2.0 / c
        assert bc.k1 > 0 and bc.k2 > 0 and bc.k3 > 0 and 0 < bc.c_gamma <= 1

    def test_from_kernel_variants(self, hard_sphere):
        printed = BoundConstants.from_kernel(hard_sphere, 1.0, 4.0)
        derived = BoundConstants.from_kernel(hard_sphere, 1.0, 4.0, variant="derived")
        assert printed.a2 == pytest.approx(a2_weight(hard_sphere.angular), rel=1e-12)
        assert derived.a2 == pytest.approx(0.5 * printed.a2, rel=1e-12)

    def test_domains(self):
        with pytest.raises(DomainError):
            BoundConstants.from_parts(a2=-1.0, gamma=0.5, m0=1.0, m2_0=1.0)
        with pytest.raises(DomainError):
            BoundConstants.from_parts(a2=1.0, gamma=1.5, m0=1.0, m2_0=1.0)


BC = BoundConstants.from_parts(a2=2.0, gamma=1.0, m0=1.0, m2_0=4.0)


class TestPropagationRHS:
    def test_kq_arithmetic(self):
        # q = 5 has floor(6/2) = 3 terms in the sum
        traj = point_mass_trajectory([0.0], [float(p) for p in range(0, 14)], gamma=1.0)
        snap = traj.snapshot(0.0)
        # with all moments = 1, RHS = -K1 + K2 + K3 eps q(q-1) * 2 * sum C(q-2,k-1)
        val = ode_rhs_propagation(BC, 0.5, snap, 5, 1.0)
        expected = -BC.k1 + BC.k2 + BC.k3 * 0.5 * 20 * 2 * sum(
            math.comb(3, k - 1) for k in (1, 2, 3)
        )
        assert val == pytest.approx(expected, rel=1e-12)

    def test_point_mass_q2(self):
        traj = point_mass_trajectory([0.0], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0], gamma=1.0)
        snap = traj.snapshot(0.0)
        val = ode_rhs_propagation(BC, 0.7, snap, 2, 1.0)
        assert val == pytest.approx(-BC.k1 + BC.k2 + 4 * BC.k3 * 0.7, rel=1e-12)

    def test_maxwellian_rhs_finite_with_sign_report(self):
        orders = sorted(
            set(
                [2.0 * q for q in range(0, 9)]
                + [2.0 * q + 0.5 for q in range(0, 9)]
            )
        )
        traj = maxwellian_trajectory(1.0, [0.0], orders, gamma=0.5)
        bc = BoundConstants.from_parts(a2=2.0, gamma=0.5, m0=1.0, m2_0=4.0)
        snap = traj.snapshot(0.0)
        val = ode_rhs_propagation(bc, 0.3, snap, 4, 0.5)
        assert math.isfinite(val)  # sign is reported, not asserted

    def test_missing_moment_error(self):
        traj = point_mass_trajectory([0.0], [0.0, 1.0, 2.0], gamma=1.0)
        snap = traj.snapshot(0.0, allow_interpolation=False)
        with pytest.raises(MissingMomentError) as exc:
            ode_rhs_propagation(BC, 0.5, snap, 3, 1.0)
        assert len(exc.value.orders) > 0

    def test_domain(self):
        traj = point_mass_trajectory([0.0], [0.0, 2.0], gamma=1.0)
        with pytest.raises(DomainError):
            ode_rhs_propagation(BC, 0.5, traj.snapshot(0.0), 1, 1.0)


class TestGenerationRHS:
    def test_single_term_case(self):
        # gamma=1, q=4: upper limit 1 + k_0 = 1, binomial C(0,0) = 1
        traj = point_mass_trajectory([0.0], [float(p) for p in range(0, 8)], gamma=1.0)
        snap = traj.snapshot(0.0)
        val = ode_rhs_generation(BC, 0.4, snap, 4, 1.0)
        half = 2.0
        expected = -BC.k1 + BC.k2 + BC.k3 * 0.4 * half * (half - 1) * 1.0 * 2.0
        assert val == pytest.approx(expected, rel=1e-12)

    def test_real_binomial_anchor(self):
        assert binomial(2.5, 1) == 2.5
        assert binomial(2.5, 0) == 1.0

    def test_empty_sum_convention(self):
        traj = point_mass_trajectory([0.0], [0.0, 0.5, 1.0, 1.5], gamma=0.5)
        snap = traj.snapshot(0.0)
        # q/2 - 2/gamma = 1 - 4 < 0: first two terms only
        val = ode_rhs_generation(BC, 0.4, snap, 2, 0.5)
        assert val == pytest.approx(-BC.k1 + BC.k2, rel=1e-12)

    def test_gamma_ladder_oracle_resummation(self):
        # synthetic ladder m_p = Gamma(p/2 + 1), gamma = 0.5, q = 12, against
        # an independent extended-precision resummation
        gamma = 0.5
        q = 12

        def m(p):
            return float(mpmath.gamma(p / 2 + 1))

        orders = sorted(
            {q * gamma + gamma, q * gamma}
            | {2 * gamma * k + gamma for k in range(1, 5)}
            | {2 * gamma * k for k in range(1, 5)}
            | {gamma * q - 2 * gamma * k for k in range(1, 5)}
            | {gamma * q - 2 * gamma * k + gamma for k in range(1, 5)}
        )
        from mlmom.moments import MomentTrajectory, Provenance

        traj = MomentTrajectory(
            times=np.array([0.0]),
            orders=np.array(orders),
            log_values=np.array([[math.log(m(p)) for p in orders]]),
            provenance=Provenance.SYNTHETIC_TAIL,
        )
        val = ode_rhs_generation(BC, 0.25, traj.snapshot(0.0), q, gamma)
        with mpmath.workdps(40):
            p_arg = mpmath.mpf(q) / 2 - 2 / mpmath.mpf(gamma)
            k_max = 1 + int(mpmath.floor((p_arg + 1) / 2))
            total = mpmath.mpf(0)
            for k in range(1, k_max + 1):
                coef = mpmath.binomial(p_arg, k - 1)
                total += coef * (
                    mpmath.gamma((2 * gamma * k + gamma) / 2 + 1)
                    * mpmath.gamma((gamma * q - 2 * gamma * k) / 2 + 1)
                    + mpmath.gamma((2 * gamma * k) / 2 + 1)
                    * mpmath.gamma((gamma * q - 2 * gamma * k + gamma) / 2 + 1)
                )
            half = gamma * q / 2
            ref = float(
                -BC.k1 * mpmath.gamma((q * gamma + gamma) / 2 + 1)
                + BC.k2 * mpmath.gamma(q * gamma / 2 + 1)
                + BC.k3 * mpmath.mpf(0.25) * half * (half - 1) * total
            )
        assert val == pytest.approx(ref, rel=1e-12)

    def test_k_q_star_indexing(self):
        assert k_q_star(12, 1.0) == math.floor(12 / 4 - 1 + 1.5)
        assert k_q_star(9, 0.5) == math.floor(9 / 4 - 2 + 1.5)


class TestBernoulliEnvelope:
    def test_fixed_point_limit(self):
        bc = BoundConstants.from_parts(a2=1.0, gamma=1.0, m0=1.0, m2_0=1.0)
        a_const, b_const = bc.k1, 2.0
        rp = 2.0
        t_big = 1e3 / (b_const * 1.0 / rp)
        env = bernoulli_envelope(bc, b_const, rp, 1.0, 16.0, t_big)
        assert env == pytest.approx((b_const / a_const) ** (rp / 1.0), rel=1e-9)

    def test_equilibrium_initial_datum_constant(self):
        bc = BoundConstants.from_parts(a2=1.0, gamma=0.5, m0=1.0, m2_0=1.0)
        rp, gamma = 3.0, 0.5
        b_const = 1.7
        fixed = (b_const / bc.k1) ** (rp / gamma)
        vals = [bernoulli_envelope(bc, b_const, rp, gamma, fixed, t) for t in (0, 0.5, 2, 10)]
        assert all(v == pytest.approx(fixed, rel=1e-12) for v in vals)

    def test_against_adaptive_ode_integration(self):
        # A = 1, B = 1, rp = 2, gamma = 1, m(0) = 16 plus a parameter grid
        cases = [(1.0, 1.0, 2.0, 1.0, 16.0, 1.0)]
        rng = np.random.default_rng(11)
        for _ in range(19):
            cases.append(
                (
                    float(rng.uniform(0.5, 3)),    # A (K1 via a2)
                    float(rng.uniform(0.5, 4)),    # B
                    float(rng.uniform(1, 8)),      # rp
                    float(rng.uniform(0.25, 1.0)), # gamma
                    float(rng.uniform(0.5, 30)),   # m(0)
                    float(rng.uniform(0.2, 4)),    # t
                )
            )
        for a_const, b_const, rp, gamma, y0, t_end in cases:
            bc = BoundConstants.from_parts(
                a2=a_const / min(1.0, 2 ** (1 - gamma)), gamma=gamma, m0=1.0, m2_0=1.0
            )
            assert bc.k1 == pytest.approx(a_const, rel=1e-12)
            c = gamma / rp
            sol = solve_ivp(
                lambda t, y: b_const * y - a_const * y ** (1 + c),
                (0, t_end),
                [y0],
                rtol=1e-11,
                atol=1e-12,
                dense_output=True,
            )
            env = bernoulli_envelope(bc, b_const, rp, gamma, y0, t_end)
            assert env == pytest.approx(float(sol.y[0, -1]), rel=1e-8)

    def test_generation_mode_sentinel_and_shape(self):
        bc = BoundConstants.from_parts(a2=1.0, gamma=1.0, m0=1.0, m2_0=1.0)
        b4 = b_rp_constant(bc, 4.0)
        assert bernoulli_envelope(bc, b4, 4.0, 1.0, None, 0.0) == math.inf
        e_small = bernoulli_envelope(bc, b4, 4.0, 1.0, None, 0.25)
        e_one = bernoulli_envelope(bc, b4, 4.0, 1.0, None, 1.0)
        e_late = bernoulli_envelope(bc, b4, 4.0, 1.0, None, 7.0)
        assert e_small == pytest.approx(e_one * 0.25 ** (-4.0), rel=1e-12)
        assert e_late == e_one  # max{1, t^-rp/gamma} saturates

    def test_corrected_small_time_coefficient_dominates_printed(self):
        bc = BoundConstants.from_parts(a2=1.0, gamma=1.0, m0=1.0, m2_0=1.0)
        b4 = b_rp_constant(bc, 4.0)
        corrected = bernoulli_upper_constant(bc, b4, 4.0, 1.0)
        printed = bernoulli_upper_constant(bc, b4, 4.0, 1.0, variant="printed")
        assert corrected >= printed
        # validity: the exact Bernoulli solution from any finite start stays
        # below the corrected generation envelope for t <= 1
        for y0 in (0.5, 5.0, 500.0):
            for t in (0.05, 0.3, 1.0):
                exact = bernoulli_envelope(bc, b4, 4.0, 1.0, y0, t)
                env = bernoulli_envelope(bc, b4, 4.0, 1.0, None, t)
                assert exact <= env * (1 + 1e-12)

    def test_b_rp_constant(self):
        bc = BoundConstants.from_parts(a2=2.0, gamma=1.0, m0=1.0, m2_0=4.0)
        assert b_rp_constant(bc, 4.0) == pytest.approx(bc.k2 + 16 * bc.k3, rel=1e-14)

    def test_c_q0_ledger(self):
        traj = maxwellian_trajectory(1.0, [0.0], [float(p) for p in range(0, 8)])
        rec = c_q0_constant(BC, 3, 1.0, traj.snapshot(0.0))
        assert rec["value"] >= max(v["bold_B"] for v in rec["per_order"].values())
        assert set(rec["per_order"]) == set(range(0, 8))


class TestJensenLower:
    def test_point_mass_equality(self):
        assert jensen_lower(1.0, 1.0, 2.0, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_maxwellian_strict_inequality(self):
        traj = maxwellian_trajectory(1.0, [0.0], [0.0, 2.0, 3.0])
        m0, m2, m3 = (traj.moment(0.0, p) for p in (0.0, 2.0, 3.0))
        bound = jensen_lower(m0, m2, 2.0, 1.0)
        assert bound < m3

    def test_degree_one_homogeneity(self):
        base = jensen_lower(1.0, 5.0, 2.0, 1.0)
        assert jensen_lower(2.0, 10.0, 2.0, 1.0) == pytest.approx(2 * base, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            jensen_lower(0.0, 1.0, 2.0, 1.0)


class TestElementaryInequalities:
    def test_triangle_bounds_sweep(self, rng):
        n = 1_000_000
        d = 3
        v = rng.standard_normal((n, d)) * rng.uniform(0.2, 3.0, (n, 1))
        w = rng.standard_normal((n, d)) * rng.uniform(0.2, 3.0, (n, 1))
        gam = rng.uniform(0.05, 1.0, n)
        bv = np.sqrt(1 + (v**2).sum(1))
        bw = np.sqrt(1 + (w**2).sum(1))
        u = np.linalg.norm(v - w, axis=1) ** gam
        c_g = np.minimum(1.0, 2 ** (1 - gam))
        upper = (bv**gam + bw**gam) / c_g
        lower = c_g * bv**gam - bw**gam
        assert np.all(u <= upper * (1 + 1e-12))
        assert np.all(u >= lower - 1e-12 * np.abs(lower) - 1e-12)

    def test_two_to_s_inequality(self, rng):
        n = 200_000
        gam = rng.uniform(0.1, 1.0, n)
        q = 4.0 / gam + rng.uniform(0.0, 30.0, n)
        a = 1.0 + rng.uniform(0.0, 20.0, n)  # <v>^2 >= 1
        b = 1.0 + rng.uniform(0.0, 20.0, n)
        lhs = (gam * q / 2 - 2) * np.log(a + b)
        rhs = (q / 2 - 2 / gam) * np.log(a**gam + b**gam)
        assert np.all(lhs <= rhs + 1e-10 * np.maximum(1, np.abs(rhs)))

    def test_negative_leading_term_threshold(self):
        # on a Gaussian ladder the moment ratio grows like (2qT)^(gamma/2),
        # so K1 m_{2q+g} dominates K2 m_{2q} beyond the computed threshold
        # q* ~ ((K2/K1)^(2/gamma))/(2T); gamma = 1 keeps it reachable
        gamma = 1.0
        orders = sorted(
            set([2.0 * q for q in range(0, 101)] + [2.0 * q + gamma for q in range(0, 101)])
        )
        traj = maxwellian_trajectory(1.0, [0.0], orders, gamma=gamma)
        bc = BoundConstants.from_parts(a2=1.0, gamma=gamma, m0=1.0, m2_0=4.0)
        snap = traj.snapshot(0.0)
        ratio = [
            bc.k1 * snap.moment(2 * q + gamma) / (bc.k2 * snap.moment(2.0 * q))
            for q in range(1, 101)
        ]
        crossed = [q for q, r in zip(range(1, 101), ratio) if r > 1.0]
        assert crossed, "no crossing found on the tested ladder"
        q_star = crossed[0]
        predicted = (bc.k2 / bc.k1) ** (2.0 / gamma) / 2.0
        assert q_star == pytest.approx(predicted, rel=0.25)
        assert all(r > 1.0 for r in ratio[q_star - 1 :])
