import numpy as np
import pytest

from mlmom.kernels import (
    CollisionKernel,
    GradBounded,
    PowerLawSingular,
    TruncatedSingular,
)


@pytest.fixture(scope="session")
def bounded_kernel():
    return GradBounded(b0=1.0, d=3)


@pytest.fixture(scope="session")
def singular_kernel():
    return PowerLawSingular(nu=1.0, d=3)


@pytest.fixture(scope="session")
def truncated_kernel():
    return TruncatedSingular(nu=1.5, theta_min=1e-3, d=3)


@pytest.fixture(scope="session")
def kernel_matrix(bounded_kernel, singular_kernel, truncated_kernel):
    return [bounded_kernel, singular_kernel, truncated_kernel]


@pytest.fixture(scope="session")
def hard_sphere():
    return CollisionKernel(gamma=1.0, angular=GradBounded(b0=1.0, d=3))


def rel_err(x, ref):
    return abs(x - ref) / max(abs(ref), 1e-300)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.Philox(20240817))
