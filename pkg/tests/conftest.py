import numpy as np
import pytest

from riemann_bci.spd import SpdMatrix


def random_orthogonal(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_spd(rng, dim, cond=100.0):
    """Random SPD matrix with condition number exactly ``cond`` (dim >= 2)."""
    u = random_orthogonal(rng, dim)
    exponents = rng.uniform(0.0, 1.0, size=dim)
    if dim >= 2:
        exponents[0], exponents[-1] = 0.0, 1.0
    eigvals = cond ** (-exponents) * np.exp(rng.uniform(-1.0, 1.0))
    return SpdMatrix((u * eigvals) @ u.T)


def random_invertible(rng, dim, cond=100.0):
    """Random invertible matrix with singular-value spread ``cond``."""
    u = random_orthogonal(rng, dim)
    v = random_orthogonal(rng, dim)
    exponents = rng.uniform(0.0, 1.0, size=dim)
    if dim >= 2:
        exponents[0], exponents[-1] = 0.0, 1.0
    svals = cond ** (-exponents)
    return (u * svals) @ v.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
