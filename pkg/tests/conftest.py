import functools

import numpy as np
import pytest

from diwed.core import DEFAULT_INEQUALITY, SIGMA_X, SIGMA_Z, PibiCoefficients


@pytest.fixture
def coeffs():
    return DEFAULT_INEQUALITY


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_coeffs(rng) -> PibiCoefficients:
    return PibiCoefficients(*rng.normal(size=5))


def kron_all(mats):
    return functools.reduce(np.kron, mats, np.eye(1))


def site_op(op, i, n):
    return kron_all([op if j == i else np.eye(2) for j in range(n)])


def explicit_bell_operator(coeffs, angles):
    """Term-by-term construction over ordered pairs, independent of the library's tricks."""
    angles = np.asarray(angles, dtype=float).reshape(-1, 2)
    n = angles.shape[0]
    a = coeffs.as_array()
    M = [[site_op(np.cos(t) * SIGMA_X + np.sin(t) * SIGMA_Z, i, n) for t in angles[i]] for i in range(n)]
    out = sum(a[0] * M[i][0] + a[1] * M[i][1] for i in range(n))
    for i in range(n):
        for j in range(n):
            if i != j:
                out = out + a[2] * M[i][0] @ M[j][0] + a[3] * M[i][0] @ M[j][1] + a[4] * M[i][1] @ M[j][1]
    return out
