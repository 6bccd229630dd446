import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diwed.core import DEFAULT_INEQUALITY, InvalidInputError, PibiCoefficients
from diwed.witness import (
    BoundEntry,
    BoundTable,
    CollectiveDataPoint,
    certify_depth,
    classical_boundary,
    collective_value,
    critical_zeta2,
    depth_boundary,
    min_margin,
)


def textbook_spin(n):
    """Jx, Jz for spin n/2 in the |j, m> basis, from the ladder formula."""
    j = n / 2
    m = j - np.arange(n + 1)
    jp = np.zeros((n + 1, n + 1))
    for r in range(1, n + 1):
        jp[r - 1, r] = np.sqrt(j * (j + 1) - m[r] * (m[r] + 1))
    return (jp + jp.T) / 2, np.diag(m)


def direct_value(n, phi, psi):
    """Per-particle value from the collective operators, summing ordered pairs i != j."""
    jx, jz = textbook_spin(n)
    a = DEFAULT_INEQUALITY.as_array()
    th = (phi, -phi)
    A = [2 * (np.cos(t) * jx + np.sin(t) * jz) for t in th]
    eye = np.eye(n + 1)
    pair = lambda k, l: (A[k] @ A[l] + A[l] @ A[k]) / 2 - n * np.cos(th[k] - th[l]) * eye
    H = a[0] * A[0] + a[1] * A[1] + a[2] * pair(0, 0) + a[3] * pair(0, 1) + a[4] * pair(1, 1)
    return psi @ H @ psi / n


@pytest.mark.parametrize("n", [4, 8, 50])
def test_collective_value_matches_direct_expectations(n, rng):
    jx, jz = textbook_spin(n)
    worst = 0.0
    for _ in range(200):
        psi = rng.normal(size=n + 1)
        psi /= np.linalg.norm(psi)
        phi = rng.uniform(0, np.pi)
        c_b = 2 * psi @ jx @ psi / n
        zeta2 = 4 * psi @ jz @ jz @ psi / n
        ja = psi @ jz @ psi
        worst = max(worst, abs(collective_value(n, phi, c_b, zeta2, ja) - direct_value(n, phi, psi)))
    assert worst < 1e-8


def test_classical_boundary_closed_form():
    cb = np.linspace(0.01, 0.999, 40)
    numeric = depth_boundary(1, -2.0 * 100, 100, cb)
    assert np.allclose(numeric, classical_boundary(cb), atol=1e-7)
    # the classical boundary ends at 1/2, not 0, for full contrast
    assert critical_zeta2(-2.0, 1.0) == pytest.approx(0.5, abs=1e-6)


def test_no_violation_above_boundary_and_violation_below():
    n, beta = 100, -2.05 * 100
    for cb in (0.9, 0.95, 0.99):
        z = critical_zeta2(beta / n, cb)
        assert min_margin(CollectiveDataPoint(n, cb, z + 1e-4), beta)[0] > 0
        assert min_margin(CollectiveDataPoint(n, cb, z - 1e-4), beta)[0] < 0


def test_boundaries_are_nested():
    cb = np.linspace(0.05, 0.99, 30)
    betas = [-2.0, -2.02, -2.05, -2.1]
    curves = [depth_boundary(k + 1, b * 10, 10, cb) for k, b in enumerate(betas)]
    for outer, inner in zip(curves, curves[1:]):
        ok = np.isnan(inner) | (inner <= outer + 1e-12)
        assert ok.all()


def test_unreachable_bound_gives_nan():
    assert np.isnan(critical_zeta2(-3.0, 0.1))


def _table(values, n=480):
    return BoundTable(n, {k: BoundEntry(v * n, "test", "upper") for k, v in values.items()})


def test_certify_between_two_boundaries():
    table = _table({1: -2.0, 2: -2.01, 3: -2.03, 4: -2.06})
    cb = 0.8
    lo, hi = (critical_zeta2(table.value(k) / 480, cb) for k in (3, 2))
    cert = certify_depth(CollectiveDataPoint(480, cb, (lo + hi) / 2), table)
    assert cert.certified and cert.largest_violated_k == 2 and cert.depth == 3
    assert not cert.to_dict()["rigorous"]


def test_no_certification_for_a_classical_point():
    table = _table({1: -2.0, 2: -2.01})
    cert = certify_depth(CollectiveDataPoint(480, 0.5, 1.0), table)
    assert not cert.certified and cert.depth == 1


def test_error_bars_bracket_the_depth():
    table = _table({1: -2.0, 2: -2.01, 3: -2.03, 4: -2.06, 5: -2.1})
    z = critical_zeta2(table.value(3) / 480, 0.8) - 1e-3
    cert = certify_depth(CollectiveDataPoint(480, 0.8, z, 0.02, 0.05), table)
    assert cert.depth_pessimistic <= cert.depth <= cert.depth_optimistic


@settings(max_examples=40, deadline=None)
@given(cb=st.floats(0.0, 1.0), zeta2=st.floats(0.0, 2.0), dz=st.floats(0.0, 0.5))
def test_depth_never_grows_with_zeta2(cb, zeta2, dz):
    table = _table({1: -2.0, 2: -2.01, 3: -2.03, 4: -2.06})
    d1 = certify_depth(CollectiveDataPoint(480, cb, zeta2), table, phi_points=400).depth
    d2 = certify_depth(CollectiveDataPoint(480, cb, zeta2 + dz), table, phi_points=400).depth
    assert d2 <= d1


def test_bound_table_round_trip(tmp_path):
    table = _table({1: -2.0, 3: -2.03})
    path = tmp_path / "t.json"
    path.write_text(json.dumps(table.to_dict()))
    back = BoundTable.load(path)
    assert back.n == 480 and back.entries == table.entries


def test_bound_table_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        BoundTable(4, {1: -8.0, 2: -7.0})
    with pytest.raises(InvalidInputError):
        BoundTable(4, {5: -8.0})
    with pytest.raises(InvalidInputError):
        BoundTable.from_dict({"bounds": []})


def test_envelope_is_running_minimum():
    assert BoundTable.envelope({1: -2.0, 2: -1.9, 3: -2.1}) == {1: -2.0, 2: -2.0, 3: -2.1}


def test_data_point_validation(tmp_path):
    with pytest.raises(InvalidInputError):
        CollectiveDataPoint(10, 1.5, 0.5)
    with pytest.raises(InvalidInputError):
        CollectiveDataPoint(10, 0.5, -0.1)
    with pytest.raises(InvalidInputError):
        CollectiveDataPoint.from_dict({"n": 10, "c_b": 0.5})
    bad = tmp_path / "p.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidInputError):
        CollectiveDataPoint.load(bad)


def test_shift_is_clipped():
    p = CollectiveDataPoint(10, 0.99, 0.01, sigma_cb=0.1, sigma_zeta2=0.1)
    assert p.shifted(+1).c_b == 1.0 and p.shifted(+1).zeta2 == 0.0


def test_certify_rejects_mismatch():
    table = _table({1: -2.0})
    with pytest.raises(InvalidInputError):
        certify_depth(CollectiveDataPoint(10, 0.5, 0.5), table)
    other = BoundTable(480, {1: BoundEntry(-960.0)}, PibiCoefficients(-1.0, 0.0, 0.5, -1.0, 0.5))
    with pytest.raises(InvalidInputError):
        certify_depth(CollectiveDataPoint(480, 0.5, 0.5), other)
