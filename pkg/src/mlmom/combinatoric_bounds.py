"""Combinatoric Beta-function sums and the elementary polynomial inequalities
behind the summability estimates.

The two Beta sums are computed in the log domain (their terms span hundreds
of orders of magnitude by q ~ 300) with compensated accumulation of the
exponentiated terms. Small integer cases have exact rational anchors in the
test suite.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .specfun import log_beta_fn, gamma_fn

__all__ = [
    "binomial",
    "BetaSumRecord",
    "beta_sum_A4",
    "beta_sum_A5",
    "proof_integral_A4",
    "laplace_asymptotic_check",
    "poly_inequality_A1",
    "poly_inequality_A2",
    "poly_sum_rough_bound",
]


def binomial(a: float, k: int) -> float:
    """C(a, k) for real upper argument via the falling product a(a-1)...(a-k+1)/k!."""
    if k < 0:
        raise DomainError(f"binomial lower index must be >= 0, got {k}")
    out = 1.0
    for i in range(k):
        out *= (a - i) / (i + 1.0)
    return out


def _k_index(p: float) -> int:
    return math.floor((p + 1.0) / 2.0)


@dataclass(frozen=True)
class BetaSumRecord:
    """One combinatoric Beta sum and its normalized (rate-free) ratio."""

    q: float
    a: float
    total: float
    bound_ratio: float


def beta_sum_A4(q: int, a: float) -> BetaSumRecord:
    """sum_{k=1}^{k_q} C(q-2, k-1) B(a k+1, a(q-k)+1), with ratio * (aq)^(1+a).

    Bounded ratios over q certify the (aq)^-(1+a) decay used to tame the
    q^2 growth of the bilinear moment sums.
    """
    q = int(q)
    if q < 3:
        raise DomainError(f"beta_sum_A4 requires q >= 3, got {q}")
    if a <= 0.0:
        # the sum itself is defined for any positive a; the decay claim
        # behind bound_ratio needs a > 1
        raise DomainError(f"beta_sum_A4 requires a > 0, got {a}")
    terms = []
    for k in range(1, _k_index(q) + 1):
        log_c = (
            math.lgamma(q - 1.0) - math.lgamma(k) - math.lgamma(q - k)
        )  # log C(q-2, k-1)
        terms.append(math.exp(log_c + log_beta_fn(a * k + 1.0, a * (q - k) + 1.0)))
    total = math.fsum(terms)
    return BetaSumRecord(q=q, a=a, total=total, bound_ratio=total * (a * q) ** (1.0 + a))


def beta_sum_A5(q: int, s: float):
    """sum_{k=1}^{1+k_{q/2-2/s}} C(q/2-2/s, k-1) B(2k+1, q-2k+1), ratio * q^3.

    Returns a record whose bound_ratio is total * q^3; the empty-sum
    convention returns a zero record when q/2 - 2/s < 0.
    """
    q = int(q)
    if q < 3:
        raise DomainError(f"beta_sum_A5 requires q >= 3, got {q}")
    if not (0.0 < s <= 1.0):
        raise DomainError(f"beta_sum_A5 requires s in (0, 1], got {s}")
    p_arg = 0.5 * q - 2.0 / s
    if p_arg < 0.0:
        return BetaSumRecord(q=q, a=s, total=0.0, bound_ratio=0.0)
    terms = []
    for k in range(1, 1 + _k_index(p_arg) + 1):
        coef = binomial(p_arg, k - 1)
        terms.append(coef * math.exp(log_beta_fn(2.0 * k + 1.0, q - 2.0 * k + 1.0)))
    total = math.fsum(terms)
    return BetaSumRecord(q=q, a=s, total=total, bound_ratio=total * q**3)


def proof_integral_A4(q: int, a: float) -> float:
    """int_0^1 x^a (1-x)^a (x^a + (1-x)^a)^(q-2) dx.

    The single-integral rearrangement that upper-bounds the A4 sum (up to
    the rough polynomial-sum estimate); used as an inequality cross-check.
    """

    def f(x):
        if x <= 0.0 or x >= 1.0:
            return 0.0
        return (x * (1.0 - x)) ** a * (x**a + (1.0 - x) ** a) ** (q - 2.0)

    val, _ = integrate.quad(f, 0.0, 1.0, limit=200)
    return val


def laplace_asymptotic_check(a: float, q_grid) -> dict:
    """Laplace-method check: the proof integral obeys Gamma(a+1) (aq)^-(a+1).

    Evaluates J(q) = int_0^(1/2) x^a g(x) e^(q S(x)) dx with
    g = (1-x)^a (x^a + (1-x)^a)^(-2) and S = log(x^a + (1-x)^a), reports the
    ratio against Gamma(a+1) (aq)^-(a+1) (which must converge to g(0) = 1
    with shrinking Cauchy differences) and a finite-difference check of
    S'(0) = -a.
    """
    if a <= 1.0:
        raise DomainError(f"laplace_asymptotic_check requires a > 1, got {a}")
    q_grid = sorted(int(q) for q in q_grid)
    if q_grid[-1] < 100:
        raise DomainError("q grid must reach at least 100")

    def integrand(x, q):
        g = (1.0 - x) ** a / (x**a + (1.0 - x) ** a) ** 2
        s_val = math.log(x**a + (1.0 - x) ** a)
        return x**a * g * math.exp(q * s_val)

    ratios = []
    for q in q_grid:
        # substitute y = q*x so the integral keeps O(1) magnitude at large q
        # (otherwise quad's absolute tolerance swamps the (aq)^-(a+1) value)
        val, _ = integrate.quad(
            lambda y: integrand(y / q, q) / q,
            0.0,
            0.5 * q,
            limit=300,
            epsabs=1e-300,
            epsrel=1e-11,
        )
        ratios.append(val / (gamma_fn(a + 1.0) * (a * q) ** (-(a + 1.0))))
    diffs = [abs(r2 - r1) for r1, r2 in zip(ratios, ratios[1:])]
    x_fd = 1e-6
    s_prime = (math.log(x_fd**a + (1 - x_fd) ** a) - 0.0) / x_fd
    return {
        "a": a,
        "q_grid": q_grid,
        "ratios": ratios,
        "cauchy_diffs": diffs,
        "cauchy_decreasing": all(d2 <= d1 * (1 + 1e-9) for d1, d2 in zip(diffs, diffs[1:])),
        "s_prime_at_zero": s_prime,
        "limit_target": 1.0,
    }


def poly_inequality_A1(x: float, y: float, a: float, b: float, s: float) -> bool:
    """x^a y^(s-a) + x^(s-a) y^a <= x^b y^(s-b) + x^(s-b) y^b for b <= a <= s/2."""
    if not (b <= a <= 0.5 * s):
        raise DomainError(f"ordering b <= a <= s/2 violated: b={b}, a={a}, s={s}")
    if x < 0.0 or y < 0.0:
        raise DomainError("x, y must be nonnegative")
    lhs = _sym_power(x, y, a, s)
    rhs = _sym_power(x, y, b, s)
    scale = max(1.0, abs(rhs))
    return lhs <= rhs + 1e-12 * scale


def _sym_power(x, y, e, s):
    def p(base, expo):
        if base == 0.0:
            return 1.0 if expo == 0.0 else 0.0
        return base**expo

    return p(x, e) * p(y, s - e) + p(x, s - e) * p(y, e)


def poly_inequality_A2(x: float, y: float, p: float):
    """(lower, mid, upper) of the binomial-theorem sandwich for p > 1.

    lower = sum_{k=1}^{k_p - 1} C(p,k)(x^k y^(p-k) + x^(p-k) y^k)
    mid   = (x+y)^p - x^p - y^p
    upper = the same sum up to k_p; contract lower <= mid <= upper.
    """
    if p <= 1.0:
        raise DomainError(f"poly_inequality_A2 requires p > 1, got {p}")
    if x <= 0.0 or y <= 0.0:
        raise DomainError("x, y must be positive")
    kp = _k_index(p)

    def partial(upto):
        return math.fsum(
            binomial(p, k) * (x**k * y ** (p - k) + x ** (p - k) * y**k)
            for k in range(1, upto + 1)
        )

    mid = (x + y) ** p - x**p - y**p
    return partial(kp - 1), mid, partial(kp)


def poly_sum_rough_bound(x: float, y: float, p: float):
    """(sum_{k=0}^{k_p} C(p,k)(x^k y^(p-k)+x^(p-k) y^k), 2 (x+y)^p)."""
    kp = _k_index(p)
    total = math.fsum(
        binomial(p, k) * (x**k * y ** (p - k) + x ** (p - k) * y**k)
        for k in range(0, kp + 1)
    )
    return total, 2.0 * (x + y) ** p
