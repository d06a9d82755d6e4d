"""Moment trajectories and analytic moment ladders.

A MomentTrajectory stores log-moments (synthetic ladders reach orders of
several hundred, far past the double range), indexed by time and by order.
Ladders for Maxwellian, stretched-exponential tail and compact-support
densities are produced by log-stable radial quadrature; the Maxwellian
integer ladder also has an exact combinatorial form used as an oracle.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from .errors import DomainError, MissingMomentError
from .specfun import log_gamma_fn

__all__ = [
    "Provenance",
    "MomentTrajectory",
    "MomentSnapshot",
    "maxwellian_trajectory",
    "synthetic_tail_trajectory",
    "point_mass_trajectory",
    "log_radial_moment",
    "maxwellian_moment_exact",
    "gaussian_ml_integral",
]


class Provenance(str, Enum):
    SIMULATED = "simulated"
    ANALYTIC_MAXWELLIAN = "analytic_maxwellian"
    SYNTHETIC_TAIL = "synthetic_tail"
    POINT_MASS = "point_mass"


@dataclass
class MomentSnapshot:
    """Moments of one time slice, keyed by order, with interpolation fallback.

    Orders not on the stored grid are filled by log-linear interpolation in
    the order variable and recorded in ``interpolated``; orders outside the
    grid raise MissingMomentError.
    """

    orders: np.ndarray
    log_values: np.ndarray
    t: float
    interpolated: set = field(default_factory=set)
    allow_interpolation: bool = True

    def check_orders(self, needed):
        missing = [
            float(p)
            for p in needed
            if not self._on_grid(p)
            and not (self.allow_interpolation and self._in_range(p))
        ]
        if missing:
            raise MissingMomentError(missing)

    def _on_grid(self, p):
        return bool(np.any(np.abs(self.orders - p) < 1e-9))

    def _in_range(self, p):
        return self.orders[0] - 1e-9 <= p <= self.orders[-1] + 1e-9

    def log_moment(self, p: float) -> float:
        p = float(p)
        idx = np.where(np.abs(self.orders - p) < 1e-9)[0]
        if idx.size:
            return float(self.log_values[idx[0]])
        if not (self.allow_interpolation and self._in_range(p)):
            raise MissingMomentError([p])
        self.interpolated.add(p)
        return float(np.interp(p, self.orders, self.log_values))

    def moment(self, p: float) -> float:
        return math.exp(self.log_moment(p))


@dataclass
class MomentTrajectory:
    """Time-indexed log-moments m_q(t) with provenance and optional errors."""

    times: np.ndarray
    orders: np.ndarray
    log_values: np.ndarray  # shape (n_times, n_orders)
    provenance: Provenance
    rel_stderr: np.ndarray = None  # relative standard errors, same shape
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.orders = np.asarray(self.orders, dtype=float)
        self.log_values = np.asarray(self.log_values, dtype=float)
        if self.log_values.shape != (self.times.size, self.orders.size):
            raise DomainError("log_values must have shape (n_times, n_orders)")
        if np.any(np.diff(self.times) < 0):
            raise DomainError("times must be nondecreasing")
        if np.any(np.diff(self.orders) <= 0):
            raise DomainError("orders must be strictly increasing")

    @property
    def values(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    def time_index(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"t = {t} is not on the trajectory grid")
        return idx

    def snapshot(self, t: float, allow_interpolation: bool = True) -> MomentSnapshot:
        i = self.time_index(t)
        return MomentSnapshot(
            orders=self.orders,
            log_values=self.log_values[i],
            t=float(self.times[i]),
            allow_interpolation=allow_interpolation,
        )

    def log_moment(self, t: float, p: float) -> float:
        return self.snapshot(t).log_moment(p)

    def moment(self, t: float, p: float) -> float:
        return math.exp(self.log_moment(t, p))


# ---------------------------------------------------------------------------
# log-stable radial moments
# ---------------------------------------------------------------------------


def _log_integral(log_f, lo: float, hi: float) -> float:
    """log of int_lo^hi exp(log_f(r)) dr, peak-shifted for stability."""
    grid = np.linspace(lo, hi, 2001) if hi < np.inf else None
    if grid is None:
        # unbounded: scan in log-space out to where any admitted profile died
        grid = np.concatenate([[lo], np.logspace(-6, 9, 3001) + lo])
    vals = np.array([log_f(r) for r in grid])
    vals[~np.isfinite(vals)] = -np.inf
    i_max = int(np.argmax(vals))
    m_val = vals[i_max]
    if not np.isfinite(m_val):
        raise DomainError("radial integrand vanished everywhere")
    # integration window: where log f >= m - 60
    above = vals >= m_val - 60.0
    lo_w = grid[max(0, np.argmax(above) - 1)]
    hi_w = grid[min(len(grid) - 1, len(above) - 1 - np.argmax(above[::-1]) + 1)]

    def g(r):
        lf = log_f(r)
        return math.exp(lf - m_val) if np.isfinite(lf) else 0.0

    val, _ = integrate.quad(g, lo_w, hi_w, limit=300)
    return m_val + math.log(val)


def log_radial_moment(p: float, log_density, d: int, r_max: float = np.inf) -> float:
    """log of int <v>^p f(|v|) dv over R^d given the radial log-density.

    ``log_density`` maps r to log f(r) (unnormalized); normalization cancels
    only if the caller divides by the p = 0 value.
    """

    def log_f(r):
        if r <= 0.0:
            return -np.inf
        if r >= r_max:
            return -np.inf
        return (
            log_density(r)
            + 0.5 * p * math.log1p(r * r)
            + (d - 1) * math.log(r)
        )

    return _log_integral(log_f, 0.0, r_max if np.isfinite(r_max) else np.inf)


def _ladder(orders, log_density, d, r_max=np.inf):
    log0 = log_radial_moment(0.0, log_density, d, r_max)
    return np.array(
        [log_radial_moment(p, log_density, d, r_max) - log0 for p in orders]
    )


def maxwellian_moment_exact(q: int, temperature: float, d: int = 3) -> float:
    """m_2q of the centered Maxwellian, exact combinatorial form (d = 3).

    E <v>^(2q) = sum_j C(q, j) T^j (2j+1)!! using E|Z|^(2j) = (2j+1)!! for
    the standard 3-d Gaussian.
    """
    if d != 3:
        raise DomainError("exact Maxwellian ladder implemented for d = 3")
    total = 0.0
    for j in range(q + 1):
        total += (
            math.comb(q, j)
            * temperature**j
            * math.prod(range(2 * j + 1, 0, -2))
        )
    return total


def maxwellian_trajectory(
    temperature: float, times, orders, d: int = 3, gamma: float = None
) -> MomentTrajectory:
    """Stationary Maxwellian ladder (moments constant in time)."""

    def log_density(r):
        return -0.5 * r * r / temperature

    orders = np.asarray(sorted(set(float(p) for p in orders)))
    row = _ladder(orders, log_density, d)
    times = np.asarray(times, dtype=float)
    meta = {"temperature": temperature, "d": d}
    if gamma is not None:
        meta["gamma"] = gamma
    return MomentTrajectory(
        times=times,
        orders=orders,
        log_values=np.tile(row, (times.size, 1)),
        provenance=Provenance.ANALYTIC_MAXWELLIAN,
        meta=meta,
    )


def synthetic_tail_trajectory(
    s0: float, alpha0: float, times, orders, d: int = 3, gamma: float = None
) -> MomentTrajectory:
    """Ladder of the stretched-exponential tail density f ~ exp(-alpha0 <v>^s0)."""
    if not (0.0 < s0 <= 2.0):
        raise DomainError(f"tail order s0 must lie in (0, 2], got {s0}")
    if alpha0 <= 0.0:
        raise DomainError("alpha0 must be positive")

    def log_density(r):
        return -alpha0 * math.exp(0.5 * s0 * math.log1p(r * r))

    orders = np.asarray(sorted(set(float(p) for p in orders)))
    row = _ladder(orders, log_density, d)
    times = np.asarray(times, dtype=float)
    meta = {"s0": s0, "alpha0": alpha0, "d": d}
    if gamma is not None:
        meta["gamma"] = gamma
    return MomentTrajectory(
        times=times,
        orders=orders,
        log_values=np.tile(row, (times.size, 1)),
        provenance=Provenance.SYNTHETIC_TAIL,
        meta=meta,
    )


def point_mass_trajectory(times, orders, gamma: float = None) -> MomentTrajectory:
    """Unit mass at v = 0: m_p == 1 for every order."""
    orders = np.asarray(sorted(set(float(p) for p in orders)))
    times = np.asarray(times, dtype=float)
    meta = {} if gamma is None else {"gamma": gamma}
    return MomentTrajectory(
        times=times,
        orders=orders,
        log_values=np.zeros((times.size, orders.size)),
        provenance=Provenance.POINT_MASS,
        meta=meta,
    )


def gaussian_ml_integral(temperature: float, alpha: float, d: int = 3) -> float:
    """Closed form of int f exp(alpha <v>^2) dv for the Maxwellian, alpha < 1/(2T)."""
    if alpha >= 1.0 / (2.0 * temperature):
        raise DomainError(
            f"Gaussian exponential moment diverges for alpha >= 1/(2T) = "
            f"{1.0 / (2.0 * temperature)}"
        )
    return math.exp(alpha) * (1.0 - 2.0 * alpha * temperature) ** (-0.5 * d)
