"""Mittag-Leffler moment machinery for the space-homogeneous Boltzmann
equation with variable-hard-potential, non-cutoff collision kernels.

Modules:

* :mod:`mlmom.specfun`             Gamma / Beta / Mittag-Leffler evaluation
* :mod:`mlmom.kernels`             collision-kernel families, A_beta, eps_q
* :mod:`mlmom.povzner`             geometry, angular-averaged weights, bounds
* :mod:`mlmom.moments`             moment trajectories and analytic ladders
* :mod:`mlmom.moment_bounds`       moment ODI right-hand sides, envelopes
* :mod:`mlmom.partial_sums`        renormalized partial sums, scans, tail fits
* :mod:`mlmom.combinatoric_bounds` Beta-sum estimates and polynomial lemmas
* :mod:`mlmom.dsmc`                particle solver
* :mod:`mlmom.cli`                 command-line surface
"""

__version__ = "0.1.0"

from ._accel import USING_NUMBA, backend_name
from .specfun import MLSpec, beta_fn, gamma_fn, log_gamma_fn, mittag_leffler
from .kernels import (
    CollisionKernel,
    GradBounded,
    PowerLawSingular,
    TruncatedSingular,
    a_beta,
    a2_weight,
    epsilon_decay_profile,
    epsilon_q,
)
from .moments import (
    MomentTrajectory,
    Provenance,
    maxwellian_trajectory,
    point_mass_trajectory,
    synthetic_tail_trajectory,
)
from .moment_bounds import BoundConstants, bernoulli_envelope, jensen_lower
from .partial_sums import (
    bootstrap_scan,
    estimate_tail_order,
    estimate_tail_order_empirical,
    generation_sum_E,
    generation_sum_I,
    lower_bound_check,
    partial_sum_E,
    partial_sum_I,
)
from .povzner import (
    CollisionGeometry,
    convex_binomial_gap,
    energy_split,
    g_weight_bound,
    g_weight_direct,
    make_geometry,
    post_collision,
    povzner_sweep,
)
