"""Moment differential-inequality right-hand sides, Bernoulli envelopes and
the shared constant ledger.

The two evaluable right-hand sides mirror the angular-averaged estimate: a
negative highest-order term, a linear term, and a bilinear combinatoric sum
whose prefactor carries the decaying eps constant. Neither is integrated as
dynamics; they are upper bounds to be evaluated and compared.

Constant variants: ``printed`` uses the full angular constant A2 in
K1, K2, K3; ``derived`` halves it, matching the constants the decomposition
in :mod:`mlmom.povzner` actually proves (and hence the envelope that is a
theorem for the simulated dynamics).
"""

import math
from dataclasses import dataclass

from .errors import DomainError
from .kernels import a2_weight
from .combinatoric_bounds import binomial
from .specfun import log_gamma_fn

__all__ = [
    "BoundConstants",
    "ode_rhs_propagation",
    "ode_rhs_generation",
    "bernoulli_envelope",
    "bernoulli_upper_constant",
    "b_rp_constant",
    "c_q0_constant",
    "jensen_lower",
    "k_q_star",
]


@dataclass(frozen=True)
class BoundConstants:
    """A2, C_gamma and the K1/K2/K3 ledger every inequality check shares."""

    a2: float
    gamma: float
    c_gamma: float
    k1: float
    k2: float
    k3: float
    m0: float
    m2_0: float

    @classmethod
    def from_parts(cls, a2: float, gamma: float, m0: float, m2_0: float):
        if a2 <= 0.0 or m0 <= 0.0 or m2_0 <= 0.0:
            raise DomainError("a2, m0 and m2_0 must be positive")
        if not (0.0 < gamma <= 1.0):
            raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
        c_gamma = min(1.0, 2.0 ** (1.0 - gamma))
        return cls(
            a2=a2,
            gamma=gamma,
            c_gamma=c_gamma,
            k1=a2 * c_gamma * m0,
            k2=a2 * (1.0 + 2.0 / c_gamma) * m2_0,
            k3=a2 / c_gamma,
            m0=m0,
            m2_0=m2_0,
        )

    @classmethod
    def from_kernel(cls, kernel, m0: float, m2_0: float, variant: str = "printed"):
        a2 = a2_weight(kernel.angular)
        if variant == "derived":
            a2 *= 0.5
        elif variant != "printed":
            raise DomainError(f"unknown constants variant {variant!r}")
        return cls.from_parts(a2, kernel.gamma, m0, m2_0)


def _k_index(p: float) -> int:
    return math.floor((p + 1.0) / 2.0)


def ode_rhs_propagation(bc: BoundConstants, eps_q: float, snapshot, q: int, gamma: float) -> float:
    """Right side of the even-order moment inequality (propagation form).

    -K1 m_{2q+g} + K2 m_{2q}
        + K3 eps_q q(q-1) sum_{k=1}^{k_q} C(q-2, k-1)
          (m_{2k+g} m_{2(q-k)} + m_{2k} m_{2(q-k)+g})
    """
    q = int(q)
    if q < 2:
        raise DomainError(f"propagation RHS needs integer q >= 2, got {q}")
    kq = _k_index(q)
    needed = {2 * q + gamma, 2.0 * q}
    for k in range(1, kq + 1):
        needed.update(
            (2 * k + gamma, 2.0 * (q - k), 2.0 * k, 2 * (q - k) + gamma)
        )
    snapshot.check_orders(needed)
    total = 0.0
    for k in range(1, kq + 1):
        total += math.comb(q - 2, k - 1) * (
            snapshot.moment(2 * k + gamma) * snapshot.moment(2 * (q - k))
            + snapshot.moment(2 * k) * snapshot.moment(2 * (q - k) + gamma)
        )
    return (
        -bc.k1 * snapshot.moment(2 * q + gamma)
        + bc.k2 * snapshot.moment(2 * q)
        + bc.k3 * eps_q * q * (q - 1.0) * total
    )


def ode_rhs_generation(bc: BoundConstants, eps_value: float, snapshot, q: int, gamma: float) -> float:
    """Right side of the gamma-ladder moment inequality (generation form).

    The combinatoric sum runs to 1 + k_{q/2 - 2/gamma} with real-argument
    binomials; when q/2 - 2/gamma < 0 the sum is empty by convention and
    only the first two terms are returned.
    """
    q = int(q)
    if q < 1:
        raise DomainError(f"generation RHS needs integer q >= 1, got {q}")
    p_arg = 0.5 * q - 2.0 / gamma
    head = [q * gamma + gamma, q * gamma]
    if p_arg < 0.0:
        snapshot.check_orders(head)
        return -bc.k1 * snapshot.moment(head[0]) + bc.k2 * snapshot.moment(head[1])
    k_max = 1 + _k_index(p_arg)
    needed = set(head)
    for k in range(1, k_max + 1):
        lo_order = gamma * q - 2.0 * gamma * k
        if lo_order < -1e-12:
            raise DomainError(
                f"generation sum underflows order zero at q={q}, k={k}; "
                "q is too small for this expansion"
            )
        needed.update(
            (2 * gamma * k + gamma, max(lo_order, 0.0), 2.0 * gamma * k, lo_order + gamma)
        )
    snapshot.check_orders(needed)
    total = 0.0
    for k in range(1, k_max + 1):
        lo_order = max(gamma * q - 2.0 * gamma * k, 0.0)
        total += binomial(p_arg, k - 1) * (
            snapshot.moment(2 * gamma * k + gamma) * snapshot.moment(lo_order)
            + snapshot.moment(2 * gamma * k) * snapshot.moment(lo_order + gamma)
        )
    half = 0.5 * q * gamma
    return (
        -bc.k1 * snapshot.moment(head[0])
        + bc.k2 * snapshot.moment(head[1])
        + bc.k3 * eps_value * half * (half - 1.0) * total
    )


def b_rp_constant(bc: BoundConstants, rp: float) -> float:
    """Coarse linear-term constant B_rp = K2 + 2^rp K3 (uses eps_p <= 1)."""
    try:
        two_rp = 2.0**rp
    except OverflowError:
        return math.inf
    return bc.k2 + two_rp * bc.k3


def bernoulli_upper_constant(
    bc: BoundConstants, b_rp: float, rp: float, gamma: float, variant: str = "corrected"
) -> float:
    """Envelope amplitude for the generation bound m_rp <= B max(1, t^(-rp/gamma)).

    ``corrected`` uses the small-time coefficient (c e^{-c})^{-rp/gamma}
    coming out of 1 - e^{-tc} >= t c e^{-c}; ``printed`` flips that exponent
    (which makes the coefficient < 1 and the envelope invalid near t = 0; it
    is kept only as a diagnostic of the printed constant).
    """
    if variant not in ("corrected", "printed"):
        raise DomainError(f"unknown envelope variant {variant!r}")
    a_const = bc.k1
    c_exp = gamma * b_rp / rp
    power = rp / gamma
    log_fix = math.log(b_rp / a_const) * power
    log_small_t = -power * (math.log(c_exp) - c_exp)
    if variant == "printed":
        log_small_t = -log_small_t
    log_large_t = -power * math.log(-math.expm1(-c_exp))
    log_total = log_fix + max(log_small_t, log_large_t)
    if log_total > 700.0:
        return math.inf
    return math.exp(log_total)


def bernoulli_envelope(
    bc: BoundConstants,
    b_rp: float,
    rp: float,
    gamma: float,
    m_rp_0,
    t: float,
) -> float:
    """Upper solution of y' = B y - A y^(1+gamma/rp) with A = K1, B = B_rp.

    Propagation mode (finite ``m_rp_0``): the exact Bernoulli solution
    through the initial value. Generation mode (``m_rp_0 is None``): the
    amplitude-constant envelope B_rp_bold * max(1, t^(-rp/gamma)), +inf at
    t = 0 by convention.
    """
    if rp <= 0.0 or b_rp <= 0.0:
        raise DomainError("rp and b_rp must be positive")
    a_const = bc.k1
    c = gamma / rp
    if m_rp_0 is None:
        if t == 0.0:
            return math.inf
        amp = bernoulli_upper_constant(bc, b_rp, rp, gamma)
        return amp * max(1.0, t ** (-rp / gamma))
    if m_rp_0 <= 0.0:
        raise DomainError("initial moment must be positive in propagation mode")
    decay = math.exp(-t * b_rp * c)
    z = m_rp_0 ** (-c) * decay + (a_const / b_rp) * (1.0 - decay)
    return z ** (-1.0 / c)


def k_q_star(q: float, gamma: float) -> int:
    """floor(q/4 - 1/gamma + 3/2), the generation-side summation index.

    Exposed alongside the Beta-sum indexing 1 + k_{q/2 - 2/s} (see
    combinatoric_bounds.beta_sum_A5), which differs by bookkeeping; checks
    against the second Beta-sum estimate use the latter verbatim.
    """
    return math.floor(0.25 * q - 1.0 / gamma + 1.5)


def c_q0_constant(bc: BoundConstants, q0: int, gamma: float, snapshot0) -> dict:
    """Low-order moment cap c_q0 = max_{p <= 2 q0 + 1} {bold_B_p, B_p bold_B_p}.

    bold_B_p here is the provable propagation cap max(m_p(0), (B_p/K1)^(p/gamma))
    (a Bernoulli upper solution never exceeds the larger of the initial value
    and the fixed point). Both the plain and the B_p-multiplied variants are
    recorded and the max of everything is returned, as printed.
    """
    per_p = {}
    for p in range(0, 2 * int(q0) + 2):
        b_p = b_rp_constant(bc, p)
        m_p0 = snapshot0.moment(float(p))
        if p == 0:
            bold = m_p0
        else:
            bold = max(m_p0, (b_p / bc.k1) ** (p / gamma))
        per_p[p] = {"bold_B": bold, "B_bold_B": b_p * bold}
    value = max(max(rec.values()) for rec in per_p.values())
    return {"q0": int(q0), "value": value, "per_order": per_p}


def jensen_lower(m0: float, m_rp: float, rp: float, gamma: float) -> float:
    """Certified lower bound m0^(-g/rp) m_rp^(1+g/rp) <= m_{rp+g} (Jensen)."""
    if m0 <= 0.0 or m_rp <= 0.0:
        raise DomainError("masses and moments must be positive")
    if rp <= 0.0 or not (0.0 < gamma <= 1.0):
        raise DomainError("rp > 0 and gamma in (0, 1] required")
    c = gamma / rp
    return m0 ** (-c) * m_rp ** (1.0 + c)
