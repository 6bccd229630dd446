import json

import numpy as np
import pytest

from conftest import explicit_bell_operator, random_coeffs
from diwed.core import (
    DEFAULT_INEQUALITY,
    CapacityError,
    InvalidInputError,
    MeasurementSettings,
    Partition,
    PibiCoefficients,
    build_bell_operator,
    evaluate_expression,
    load_inequality,
    observable,
    product_state_correlators,
)


def test_bundled_inequality_is_default():
    assert load_inequality() == DEFAULT_INEQUALITY


def test_inequality_file_roundtrip(tmp_path):
    c = PibiCoefficients(1.5, -0.25, 0.0, 2.0, -1.0)
    path = tmp_path / "ineq.json"
    path.write_text(json.dumps(c.to_dict()))
    assert load_inequality(path) == c


@pytest.mark.parametrize("payload, fragment", [
    ({"alpha0": 1, "alpha1": 0, "alpha00": 0, "alpha01": 0}, "alpha11"),
    ({"alpha0": 0, "alpha1": 0, "alpha00": 0, "alpha01": 0, "alpha11": 0}, "vanish"),
    ({"alpha0": "x", "alpha1": 0, "alpha00": 0, "alpha01": 0, "alpha11": 0}, "numbers"),
])
def test_bad_inequality_files(tmp_path, payload, fragment):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(InvalidInputError, match=fragment):
        load_inequality(path)


def test_non_finite_coefficients_rejected():
    with pytest.raises(InvalidInputError):
        PibiCoefficients(np.nan, 0, 0, 0, 1)


def test_partition_normalizes_and_validates():
    p = Partition((1, 3, 2), 3)
    assert p.sizes == (3, 2, 1) and p.n == 6 and p.m == 3
    assert p.offsets() == [0, 3, 5]
    assert Partition.parse("4+4", 4) == Partition((4, 4), 4)
    with pytest.raises(InvalidInputError):
        Partition((5, 1), 4)
    with pytest.raises(InvalidInputError):
        Partition((), 2)


def test_observable_is_a_reflection():
    for t in np.linspace(0, 2 * np.pi, 7):
        O = observable(t)
        assert np.allclose(O @ O, np.eye(2))
        assert np.isclose(np.trace(O), 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_bell_operator_matches_explicit_sum(rng, n):
    c = random_coeffs(rng)
    angles = rng.uniform(0, 2 * np.pi, size=(n, 2))
    op = build_bell_operator(c, MeasurementSettings(angles), n)
    assert np.allclose(op.matrix, explicit_bell_operator(c, angles), atol=1e-12)


def test_bell_operator_respects_cap(coeffs):
    with pytest.raises(CapacityError):
        build_bell_operator(coeffs, MeasurementSettings.uniform(13, 0, 1), 13)


def test_product_correlators_match_dense_expectation(rng, coeffs):
    n = 3
    angles = rng.uniform(0, 2 * np.pi, size=(n, 2))
    phis = rng.uniform(0, 2 * np.pi, size=n)
    bloch = np.column_stack([np.cos(phis), np.sin(phis)])
    # pure real qubit with Bloch vector (cos p, sin p) in the x-z plane
    vecs = [np.array([np.cos((np.pi / 2 - p) / 2), np.sin((np.pi / 2 - p) / 2)]) for p in phis]
    psi = vecs[0]
    for v in vecs[1:]:
        psi = np.kron(psi, v)
    settings = MeasurementSettings(angles)
    op = build_bell_operator(coeffs, settings, n).matrix
    corr = product_state_correlators(bloch, settings)
    assert np.isclose(evaluate_expression(coeffs, corr), psi @ op @ psi)


def test_settings_expand_per_region():
    s = MeasurementSettings(np.array([[0.1, 0.2], [0.3, 0.4]]), "per-region")
    full = s.expand(Partition((2, 1), 2))
    assert full.units == 3 and np.allclose(full.angles[1], [0.1, 0.2])
