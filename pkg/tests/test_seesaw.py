import functools

import numpy as np
import pytest
import scipy.linalg as la

from conftest import explicit_bell_operator, random_coeffs
from diwed.core import InvalidInputError, MeasurementSettings, Partition, build_bell_operator
from diwed.seesaw import (
    SeesawOptions,
    dressed_block_operator,
    optimize_partition,
    product_value,
    random_product_state,
    run_seesaw,
    upper_bound,
)

FAST = SeesawOptions(restarts=3, structured=4)


def dense_value(coeffs, settings, partition, states):
    psi = functools.reduce(np.kron, states)
    op = build_bell_operator(coeffs, settings.expand(partition), partition.n).matrix
    return psi @ op @ psi


def test_product_value_matches_dense(rng):
    for sizes in [(1,), (2, 1), (2, 2), (3, 1, 1)]:
        part = Partition(sizes, max(sizes))
        c = random_coeffs(rng)
        settings = MeasurementSettings(rng.uniform(0, 2 * np.pi, size=(part.n, 2)))
        states = random_product_state(part, rng)
        assert product_value(c, settings, part, states) == pytest.approx(dense_value(c, settings, part, states))


def test_dressed_operator_reproduces_value(rng, coeffs):
    part = Partition((2, 2, 1), 2)
    settings = MeasurementSettings(rng.uniform(0, 2 * np.pi, size=(5, 2)))
    states = random_product_state(part, rng)
    op = dressed_block_operator(coeffs, settings, part, states, 1)
    base = product_value(coeffs, settings, part, states) - states[1] @ op @ states[1]
    other = random_product_state(part, rng)[1]
    trial = list(states)
    trial[1] = other
    assert product_value(coeffs, settings, part, trial) == pytest.approx(base + other @ op @ other)


def test_dressed_operator_rejects_bad_block(coeffs, rng):
    part = Partition((1, 1), 1)
    with pytest.raises(InvalidInputError):
        dressed_block_operator(coeffs, MeasurementSettings.uniform(2, 0, 1), part, [None, None], 2)


def test_seesaw_trace_is_monotone(rng):
    part = Partition((2, 2), 2)
    c = random_coeffs(rng)
    settings = MeasurementSettings(rng.uniform(0, 2 * np.pi, size=(4, 2)))
    trace = []
    run_seesaw(c, part, settings, random_product_state(part, rng), SeesawOptions(), trace)
    assert np.all(np.diff(trace) <= 1e-10 * max(1.0, abs(trace[0])))


def test_single_block_reaches_ground_energy(rng):
    # one block: the see-saw optimum is min over angles of lambda_min, bounded below by a grid scan
    c = random_coeffs(rng)
    res = optimize_partition(c, Partition((2,), 2), FAST)
    grid = np.linspace(0, 2 * np.pi, 25)
    best_grid = min(la.eigvalsh(explicit_bell_operator(c, [[t0, t1], [t0, t1]]))[0] for t0 in grid for t1 in grid)
    assert res.value <= best_grid + 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
def test_no_violation_below_five(coeffs, n):
    assert upper_bound(coeffs, n, n, FAST).beta_upper == pytest.approx(-2 * n, abs=1e-7)


def test_five_parties_violate(coeffs):
    assert upper_bound(coeffs, 5, 5, FAST).beta_upper < -10 - 1e-3


def test_upper_bound_is_attained(coeffs):
    res = upper_bound(coeffs, 6, 3, FAST)
    assert dense_value(coeffs, res.settings, res.partition, res.states) == pytest.approx(res.beta_upper, abs=1e-9)
    assert res.metadata["partitions_searched"]


def test_full_mode_size_cap(coeffs):
    with pytest.raises(InvalidInputError):
        upper_bound(coeffs, 13, 2, FAST)


def test_seeded_runs_are_reproducible(coeffs):
    a = upper_bound(coeffs, 5, 3, FAST)
    b = upper_bound(coeffs, 5, 3, FAST)
    assert a.beta_upper == b.beta_upper
