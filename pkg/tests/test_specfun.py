"""Gamma / Beta / Mittag-Leffler: anchors, oracles, invariants."""

import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from mlmom.errors import DomainError, OverflowRangeError
from mlmom.specfun import (
    MLSpec,
    beta_fn,
    gamma_fn,
    log_beta_fn,
    log_gamma_fn,
    mittag_leffler,
)


class TestGamma:
    def test_factorial_anchor(self):
        assert abs(gamma_fn(5.0) - 24.0) <= 1e-13 * 24.0

    def test_half_integer_anchor(self):
        assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) <= 1e-13 * math.sqrt(math.pi)

    def test_quadrature_oracle_at_3_7(self):
        # seed Gamma(0.7) by integrating the defining integral, climb the
        # recurrence to 3.7
        seed, err = integrate.quad(
            lambda t: t ** (0.7 - 1.0) * math.exp(-t), 0.0, 60.0, limit=300
        )
        expected = seed * 0.7 * 1.7 * 2.7
        assert abs(gamma_fn(3.7) - expected) <= 1e-9 * expected

    def test_recurrence_sampled(self, rng):
        xs = rng.uniform(1e-3, 50.0, size=1000)
        for x in xs:
            lhs = gamma_fn(x + 1.0)
            assert abs(lhs - x * gamma_fn(x)) <= 1e-12 * lhs

    def test_domain_and_overflow(self):
        with pytest.raises(DomainError):
            gamma_fn(0.0)
        with pytest.raises(DomainError):
            gamma_fn(-1.5)
        with pytest.raises(OverflowRangeError) as exc:
            gamma_fn(180.0)
        assert exc.value.threshold is not None

    def test_against_mpmath_reference(self):
        for x in (0.1, 0.5, 1.3, 3.7, 11.0, 47.2, 101.5, 160.0):
            ref = float(mpmath.gamma(x))
            assert abs(gamma_fn(x) - ref) <= 1e-13 * ref


class TestLogGamma:
    def test_trivial_one(self):
        assert log_gamma_fn(1.0) == pytest.approx(0.0, abs=1e-14)

    def test_ten_factorial(self):
        assert abs(log_gamma_fn(11.0) - math.log(3628800)) <= 1e-12 * math.log(3628800)

    def test_exact_log_factorial_sum(self):
        # ln Gamma(101) = sum_{k=1}^{100} ln k
        expected = math.fsum(math.log(k) for k in range(1, 101))
        assert abs(log_gamma_fn(101.0) - expected) <= 1e-12 * expected

    def test_large_arguments(self):
        for x in (500.0, 5e3, 1e6):
            ref = float(mpmath.loggamma(x))
            assert abs(log_gamma_fn(x) - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_domain(self):
        with pytest.raises(DomainError):
            log_gamma_fn(-3.0)


class TestBeta:
    def test_integer_anchor(self):
        assert beta_fn(2.0, 3.0) == pytest.approx(1.0 / 12.0, rel=1e-12)

    def test_uniform_anchor(self):
        assert beta_fn(1.0, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_quadrature_oracle(self):
        val, _ = integrate.quad(lambda t: t**1.5 * (1 - t) ** 3.2, 0.0, 1.0)
        assert beta_fn(2.5, 4.2) == pytest.approx(val, rel=1e-9)

    def test_symmetry_and_gamma_identity(self, rng):
        for _ in range(200):
            x, y = rng.uniform(0.1, 40.0, size=2)
            assert beta_fn(x, y) == pytest.approx(beta_fn(y, x), rel=1e-12)
            lhs = log_beta_fn(x, y) + log_gamma_fn(x + y)
            rhs = log_gamma_fn(x) + log_gamma_fn(y)
            assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(rhs))

    def test_domain(self):
        with pytest.raises(DomainError):
            beta_fn(0.0, 1.0)


class TestMittagLeffler:
    def test_exp_anchor(self):
        assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-12)

    def test_cosh_anchor(self):
        assert mittag_leffler(2.0, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-12)

    def test_series_oracle_extended_precision(self):
        # 200-term partial summation at 50 digits
        with mpmath.workdps(50):
            ref = float(
                mpmath.fsum(
                    mpmath.mpf(2.0) ** q / mpmath.gamma(1.5 * q + 1)
                    for q in range(200)
                )
            )
        assert mittag_leffler(1.5, 2.0) == pytest.approx(ref, rel=1e-12)

    def test_exp_identity_range(self):
        for x in np.linspace(0.0, 30.0, 61):
            assert mittag_leffler(1.0, float(x)) == pytest.approx(
                math.exp(x), rel=1e-10
            )

    def test_cosh_identity_range(self):
        for x in np.linspace(0.0, 6.0, 61):
            assert mittag_leffler(2.0, float(x * x)) == pytest.approx(
                math.cosh(x), rel=1e-10
            )

    def test_monotone_in_x_and_a(self):
        xs = np.linspace(0.1, 50.0, 25)
        for a in (1.0, 1.25, 1.5, 2.0, 3.0, 4.0):
            vals = [mittag_leffler(a, float(x)) for x in xs]
            assert all(v2 > v1 for v1, v2 in zip(vals, vals[1:]))
        for x in (0.5, 2.0, 10.0, 50.0):
            vals = [mittag_leffler(a, x) for a in (1.0, 1.25, 1.5, 2.0, 3.0, 4.0)]
            assert all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))

    def test_exponential_sandwich(self):
        # E_a(x) / exp(x^(1/a)) stays within a bounded band on x in [5, 50]
        for a in (1.25, 1.5, 2.0):
            ratios = [
                mittag_leffler(a, float(x)) / math.exp(x ** (1.0 / a))
                for x in np.linspace(5.0, 50.0, 46)
            ]
            c_low, c_high = min(ratios), max(ratios)
            assert c_low > 0.0
            assert c_high / c_low < 5.0

    def test_domain_and_overflow(self):
        with pytest.raises(DomainError):
            mittag_leffler(0.5, 1.0)
        with pytest.raises(DomainError):
            mittag_leffler(1.5, -1.0)
        with pytest.raises(OverflowRangeError) as exc:
            mittag_leffler(1.0, 1000.0)
        assert exc.value.threshold is not None


class TestMLSpec:
    def test_consistency_enforced(self):
        spec = MLSpec.from_order(1.0, 0.5)
        assert spec.a == 2.0
        with pytest.raises(DomainError):
            MLSpec(s=1.0, a=3.0, alpha=0.5)

    def test_domains(self):
        with pytest.raises(DomainError):
            MLSpec.from_order(2.5, 0.5)
        with pytest.raises(DomainError):
            MLSpec.from_order(1.0, -1.0)
        assert MLSpec.from_parameter(4.0, 0.25).s == pytest.approx(0.5)
