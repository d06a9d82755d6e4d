"""Direct-simulation Monte Carlo solver for the space-homogeneous equation.

No-time-counter scheme: candidate pairs are drawn from a Poisson clock built
on the majorant pair rate m_b * g_max^gamma / N (m_b the truncated angular
mass, g_max twice the current top speed), thinned by the exact relative-speed
factor, and scattered with the polar angle drawn from the truncated angular
density via an inverse-CDF table. Pairwise center-of-mass updates conserve
momentum exactly and energy to rounding.

All randomness for a step is drawn up front from a counter-based (Philox)
generator; the collision loop itself is deterministic, so trajectories are
reproducible bit-for-bit for a given seed at any worker count, on either the
numba or the numpy backend.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from ._accel import maybe_njit
from .errors import BudgetExceededError, DomainError, DtTooLargeError
from .kernels import (
    CollisionKernel,
    TruncatedSingular,
    angular_mass,
    ball_volume,
)
from .moments import MomentTrajectory, Provenance

__all__ = [
    "Maxwellian",
    "ShiftedBiMaxwellian",
    "CompactSupport",
    "HeavyTail",
    "ParticleEnsemble",
    "make_ensemble",
    "step",
    "run",
    "truncation_study",
    "knn_entropy",
    "initial_condition_from_name",
]


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Maxwellian:
    temperature: float = 1.0

    def sample(self, n, d, rng):
        return rng.standard_normal((n, d)) * math.sqrt(self.temperature)

    def describe(self):
        return {"family": "maxwellian", "temperature": self.temperature}


@dataclass(frozen=True)
class ShiftedBiMaxwellian:
    t1: float
    t2: float
    dv: float  # separation along the first axis

    def sample(self, n, d, rng):
        n1 = n // 2
        v = np.empty((n, d))
        v[:n1] = rng.standard_normal((n1, d)) * math.sqrt(self.t1)
        v[:n1, 0] += 0.5 * self.dv
        v[n1:] = rng.standard_normal((n - n1, d)) * math.sqrt(self.t2)
        v[n1:, 0] -= 0.5 * self.dv
        return v

    def describe(self):
        return {"family": "shifted_bimaxwellian", "t1": self.t1, "t2": self.t2, "dv": self.dv}


@dataclass(frozen=True)
class CompactSupport:
    radius: float = 1.0

    def sample(self, n, d, rng):
        dirs = rng.standard_normal((n, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / d)
        return dirs * radii[:, None]

    def describe(self):
        return {"family": "compact_support", "radius": self.radius}


@dataclass(frozen=True)
class HeavyTail:
    """Radial density ~ exp(-alpha0 <v>^s0): a stretched-exponential tail."""

    s0: float
    alpha0: float

    def sample(self, n, d, rng):
        # inverse-CDF table for the radial law r^(d-1) exp(-alpha0 <r>^s0)
        r_hi = 2.0
        while self.alpha0 * (1 + r_hi * r_hi) ** (0.5 * self.s0) < 40.0 + 2 * d * math.log(1 + r_hi):
            r_hi *= 2.0
        r = np.linspace(0.0, r_hi, 16385)
        with np.errstate(divide="ignore"):
            log_w = (d - 1) * np.log(np.maximum(r, 1e-300)) - self.alpha0 * (
                1.0 + r * r
            ) ** (0.5 * self.s0)
        w = np.exp(log_w - log_w.max())
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(r))])
        cdf /= cdf[-1]
        radii = np.interp(rng.random(n), cdf, r)
        dirs = rng.standard_normal((n, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return dirs * radii[:, None]

    def describe(self):
        return {"family": "heavy_tail", "s0": self.s0, "alpha0": self.alpha0}


def initial_condition_from_name(family: str, **params):
    family = family.strip().lower().replace("-", "_")
    if family == "maxwellian":
        return Maxwellian(temperature=float(params.get("temperature", 1.0)))
    if family in ("shifted_bimaxwellian", "bimaxwellian"):
        return ShiftedBiMaxwellian(
            t1=float(params.get("t1", 1.0)),
            t2=float(params.get("t2", 1.0)),
            dv=float(params.get("dv", 2.0)),
        )
    if family == "compact_support":
        return CompactSupport(radius=float(params.get("radius", 1.0)))
    if family == "heavy_tail":
        return HeavyTail(s0=float(params["s0"]), alpha0=float(params["alpha0"]))
    raise DomainError(f"unknown initial condition family: {family!r}")


# ---------------------------------------------------------------------------
# angular sampling table
# ---------------------------------------------------------------------------


def _theta_table(angular, n: int = 4096):
    """Inverse-CDF table (u = log theta grid, cdf) for b(cos t) sin^(d-2)(t)."""
    lo = angular.theta_lo if angular.theta_lo > 0.0 else 1e-6
    u = np.linspace(math.log(lo), math.log(math.pi - 1e-12), n)
    th = np.exp(u)
    w = np.asarray(angular.b(th), dtype=float) * np.sin(th) ** (angular.d - 2) * th
    w[~np.isfinite(w)] = 0.0
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(u))])
    cdf /= cdf[-1]
    return u, cdf


@maybe_njit(nogil=True)
def _collide(vel, ii, jj, acc_u, th_u, phi_u, u_grid, cdf, g_max, gamma):
    """Process candidate pairs sequentially in draw order. Returns collisions."""
    n_pairs = ii.shape[0]
    d = vel.shape[1]
    done = 0
    g_max_gamma = g_max**gamma
    for m in range(n_pairs):
        i = ii[m]
        j = jj[m]
        if i == j:
            continue
        g2 = 0.0
        for c in range(d):
            dv = vel[i, c] - vel[j, c]
            g2 += dv * dv
        g = math.sqrt(g2)
        if g == 0.0:
            continue
        if acc_u[m] * g_max_gamma > g**gamma:
            continue
        # polar angle from the table
        k = np.searchsorted(cdf, th_u[m])
        if k < 1:
            k = 1
        if k > cdf.shape[0] - 1:
            k = cdf.shape[0] - 1
        frac = (th_u[m] - cdf[k - 1]) / (cdf[k] - cdf[k - 1] + 1e-300)
        theta = math.exp(u_grid[k - 1] + frac * (u_grid[k] - u_grid[k - 1]))
        ct = math.cos(theta)
        st = math.sin(theta)
        if d == 3:
            u0 = (vel[i, 0] - vel[j, 0]) / g
            u1 = (vel[i, 1] - vel[j, 1]) / g
            u2 = (vel[i, 2] - vel[j, 2]) / g
            # orthonormal basis of the plane orthogonal to uhat
            a0, a1, a2 = 0.0, 0.0, 0.0
            if abs(u0) <= abs(u1) and abs(u0) <= abs(u2):
                a0 = 1.0
            elif abs(u1) <= abs(u2):
                a1 = 1.0
            else:
                a2 = 1.0
            dot = a0 * u0 + a1 * u1 + a2 * u2
            e0 = a0 - dot * u0
            e1 = a1 - dot * u1
            e2 = a2 - dot * u2
            en = math.sqrt(e0 * e0 + e1 * e1 + e2 * e2)
            e0 /= en
            e1 /= en
            e2 /= en
            f0 = u1 * e2 - u2 * e1
            f1 = u2 * e0 - u0 * e2
            f2 = u0 * e1 - u1 * e0
            phi = 2.0 * math.pi * phi_u[m]
            cp = math.cos(phi)
            sp = math.sin(phi)
            s0 = ct * u0 + st * (cp * e0 + sp * f0)
            s1 = ct * u1 + st * (cp * e1 + sp * f1)
            s2 = ct * u2 + st * (cp * e2 + sp * f2)
            c0 = 0.5 * (vel[i, 0] + vel[j, 0])
            c1 = 0.5 * (vel[i, 1] + vel[j, 1])
            c2 = 0.5 * (vel[i, 2] + vel[j, 2])
            half = 0.5 * g
            vel[i, 0] = c0 + half * s0
            vel[i, 1] = c1 + half * s1
            vel[i, 2] = c2 + half * s2
            vel[j, 0] = c0 - half * s0
            vel[j, 1] = c1 - half * s1
            vel[j, 2] = c2 - half * s2
        else:  # d == 2
            u0 = (vel[i, 0] - vel[j, 0]) / g
            u1 = (vel[i, 1] - vel[j, 1]) / g
            sign = 1.0 if phi_u[m] < 0.5 else -1.0
            s0 = ct * u0 + st * sign * (-u1)
            s1 = ct * u1 + st * sign * u0
            c0 = 0.5 * (vel[i, 0] + vel[j, 0])
            c1 = 0.5 * (vel[i, 1] + vel[j, 1])
            half = 0.5 * g
            vel[i, 0] = c0 + half * s0
            vel[i, 1] = c1 + half * s1
            vel[j, 0] = c0 - half * s0
            vel[j, 1] = c1 - half * s1
        done += 1
    return done


class ParticleEnsemble:
    """Equal-weight particle system with its kernel, clock and RNG."""

    def __init__(self, velocities, kernel: CollisionKernel, seed: int):
        self.velocities = np.ascontiguousarray(velocities, dtype=np.float64)
        if self.velocities.ndim != 2 or self.velocities.shape[0] < 2:
            raise DomainError("need at least two particles")
        if self.velocities.shape[1] != kernel.d:
            raise DomainError("velocity dimension does not match the kernel")
        if kernel.angular.singular:
            raise DomainError(
                "DSMC needs an integrable angular kernel; use TruncatedSingular "
                "or GradBounded"
            )
        self.kernel = kernel
        self.seed = int(seed)
        self.rng = np.random.Generator(np.random.Philox(self.seed))
        self.t = 0.0
        self.n_candidates = 0
        self.n_collisions = 0
        self.angular_mass = angular_mass(kernel.angular)
        self._u_grid, self._cdf = _theta_table(kernel.angular)

    @property
    def n(self):
        return self.velocities.shape[0]

    def majorant_rate(self) -> float:
        """Per-particle collision-rate majorant m_b * g_max^gamma."""
        g_max = 2.0 * float(np.sqrt((self.velocities**2).sum(axis=1).max()))
        return self.angular_mass * g_max**self.kernel.gamma

    def moments(self, orders, bootstrap: int = 0):
        """(values, rel_stderr) of the <v>-moments at the current state."""
        orders = np.asarray(orders, dtype=float)
        log_h = 0.5 * np.log1p((self.velocities**2).sum(axis=1))
        powers = np.exp(np.outer(log_h, orders))  # (N, K)
        vals = powers.mean(axis=0)
        if bootstrap > 0:
            boots = np.empty((bootstrap, orders.size))
            for b in range(bootstrap):
                idx = self.rng.integers(0, self.n, self.n)
                boots[b] = powers[idx].mean(axis=0)
            stderr = boots.std(axis=0, ddof=1)
        else:
            stderr = powers.std(axis=0, ddof=1) / math.sqrt(self.n)
        rel = np.where(vals > 0, stderr / vals, 0.0)
        return vals, rel


def make_ensemble(ic, kernel: CollisionKernel, n: int, seed: int) -> ParticleEnsemble:
    rng = np.random.Generator(np.random.Philox(int(seed)))
    vel = ic.sample(int(n), kernel.d, rng)
    ens = ParticleEnsemble(vel, kernel, seed=int(seed) + 1)
    return ens


def step(ens: ParticleEnsemble, dt: float) -> ParticleEnsemble:
    """Advance one collision step of length dt (in place; returns the ensemble).

    Rejects the step if the per-particle collision probability majorant
    exceeds 0.1.
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    g_max = 2.0 * float(np.sqrt((ens.velocities**2).sum(axis=1).max()))
    rate1 = ens.angular_mass * g_max**ens.kernel.gamma
    if rate1 * dt > 0.1 + 1e-12:
        raise DtTooLargeError(
            f"per-particle collision probability {rate1 * dt:.3g} exceeds 0.1; "
            f"majorant rate = {rate1:.6g}",
            majorant=rate1,
        )
    n = ens.n
    if g_max > 0.0:
        total_rate = 0.5 * (n - 1) * ens.angular_mass * g_max**ens.kernel.gamma
        m_cand = int(ens.rng.poisson(total_rate * dt))
        if m_cand > 0:
            ii = ens.rng.integers(0, n, m_cand)
            jj = ens.rng.integers(0, n - 1, m_cand)
            jj = np.where(jj >= ii, jj + 1, jj)
            acc_u = ens.rng.random(m_cand)
            th_u = ens.rng.random(m_cand)
            phi_u = ens.rng.random(m_cand)
            done = _collide(
                ens.velocities,
                ii.astype(np.int64),
                jj.astype(np.int64),
                acc_u,
                th_u,
                phi_u,
                ens._u_grid,
                ens._cdf,
                g_max,
                ens.kernel.gamma,
            )
            ens.n_candidates += m_cand
            ens.n_collisions += int(done)
    ens.t += dt
    return ens


def run(
    ic,
    kernel: CollisionKernel,
    t_final: float,
    snapshots,
    orders,
    n_particles: int,
    seed: int,
    bootstrap: int = 16,
    dt_max: float = None,
    min_particles: int = 1000,
):
    """Simulate and record the moment trajectory.

    Returns (MomentTrajectory, manifest). ``min_particles`` guards the
    production contract (N >= 1000); lower it explicitly for smoke tests.
    """
    if n_particles < min_particles:
        raise DomainError(
            f"n_particles = {n_particles} below the contract minimum "
            f"{min_particles}; pass min_particles explicitly for smoke runs"
        )
    snapshots = np.asarray(sorted(set([0.0] + [float(t) for t in snapshots])))
    if snapshots[-1] > t_final + 1e-12:
        raise DomainError("snapshot grid exceeds the horizon")
    orders = np.asarray(sorted(set(float(p) for p in orders)))
    ens = make_ensemble(ic, kernel, n_particles, seed)
    values = np.empty((snapshots.size, orders.size))
    stderr = np.empty_like(values)
    values[0], stderr[0] = ens.moments(orders, bootstrap=bootstrap)
    n_steps = 0
    for k in range(1, snapshots.size):
        target = snapshots[k]
        while ens.t < target - 1e-12:
            rate1 = ens.majorant_rate()
            dt = target - ens.t
            if rate1 > 0.0:
                dt = min(dt, 0.1 / rate1)
            if dt_max is not None:
                dt = min(dt, dt_max)
            step(ens, dt)
            n_steps += 1
        values[k], stderr[k] = ens.moments(orders, bootstrap=bootstrap)
    with np.errstate(divide="ignore"):
        log_values = np.log(values)
    manifest = {
        "schema_version": 1,
        "kernel": {
            "gamma": kernel.gamma,
            "d": kernel.d,
            "angular": _describe_angular(kernel.angular),
        },
        "initial_condition": ic.describe(),
        "n_particles": int(n_particles),
        "seed": int(seed),
        "t_final": float(t_final),
        "snapshots": [float(t) for t in snapshots],
        "orders": [float(p) for p in orders],
        "bootstrap": int(bootstrap),
        "dt_policy": {"collision_probability_cap": 0.1, "dt_max": dt_max},
        "n_steps": n_steps,
        "n_candidates": int(ens.n_candidates),
        "n_collisions": int(ens.n_collisions),
    }
    traj = MomentTrajectory(
        times=snapshots,
        orders=orders,
        log_values=log_values,
        provenance=Provenance.SIMULATED,
        rel_stderr=stderr,
        meta={"manifest": manifest, "gamma": kernel.gamma},
    )
    return traj, manifest


def truncation_study(
    ic,
    gamma: float,
    nu: float,
    theta_min_grid,
    t_final: float,
    orders,
    n_particles: int,
    seed: int,
    budget_candidates: float = 2e8,
    d: int = 3,
    min_particles: int = 1000,
):
    """Grazing-limit probe: moment trajectories as theta_min shrinks.

    The collision rate grows as theta_min decreases; the projected candidate
    count is estimated up front and the study aborts (BudgetExceededError)
    rather than start an over-budget run.
    """
    theta_min_grid = sorted((float(x) for x in theta_min_grid), reverse=True)
    pilot_rng = np.random.Generator(np.random.Philox(seed))
    pilot = ic.sample(min(2048, n_particles), d, pilot_rng)
    g_est = 2.0 * float(np.sqrt((pilot**2).sum(axis=1).max())) * 1.5
    projections = {}
    total = 0.0
    for tm in theta_min_grid:
        ang = TruncatedSingular(nu=nu, theta_min=tm, d=d)
        proj = 0.5 * n_particles * angular_mass(ang) * g_est**gamma * t_final
        projections[tm] = proj
        total += proj
    if total > budget_candidates:
        raise BudgetExceededError(
            f"projected candidate count {total:.3g} exceeds budget {budget_candidates:.3g}",
            diagnostics={"projected_per_level": projections, "budget": budget_candidates},
        )
    snapshots = np.linspace(0.0, t_final, 5)[1:]
    levels = {}
    for tm in theta_min_grid:
        kern = CollisionKernel(gamma=gamma, angular=TruncatedSingular(nu=nu, theta_min=tm, d=d))
        traj, man = run(
            ic,
            kern,
            t_final,
            snapshots,
            orders,
            n_particles,
            seed,
            bootstrap=0,
            min_particles=min_particles,
        )
        levels[tm] = {
            "trajectory": traj,
            "n_collisions": man["n_collisions"],
            "n_candidates": man["n_candidates"],
        }
    diffs = []
    grid = list(levels)
    for tm1, tm2 in zip(grid, grid[1:]):
        v1 = levels[tm1]["trajectory"].values
        v2 = levels[tm2]["trajectory"].values
        diffs.append(
            {
                "theta_min_pair": (tm1, tm2),
                "max_rel_diff": float(
                    np.max(np.abs(v2 - v1) / np.maximum(np.abs(v1), 1e-300))
                ),
            }
        )
    return {
        "theta_min_grid": grid,
        "projections": projections,
        "levels": levels,
        "cauchy_differences": diffs,
    }


def knn_entropy(velocities, k: int = 4) -> float:
    """Kozachenko-Leonenko k-NN differential entropy estimate."""
    vel = np.asarray(velocities, dtype=float)
    n, d = vel.shape
    dist, _ = cKDTree(vel).query(vel, k=k + 1)
    r = dist[:, k]
    r = np.maximum(r, 1e-300)
    return (
        float(digamma(n))
        - float(digamma(k))
        + math.log(ball_volume(d))
        + d * float(np.mean(np.log(r)))
    )


def _describe_angular(angular):
    out = {"family": type(angular).__name__, "d": angular.d}
    for name in ("b0", "nu", "theta_min", "c"):
        if hasattr(angular, name):
            out[name] = getattr(angular, name)
    return out
