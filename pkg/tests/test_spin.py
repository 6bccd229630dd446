import math

import mpmath
import numpy as np
import pytest
import scipy.linalg as la

from conftest import random_coeffs
from diwed.core import DEFAULT_INEQUALITY, MeasurementSettings, Partition, region_operators
from diwed.seesaw import SeesawOptions, product_value, upper_bound
from diwed.spin import (
    SymmetricSeesaw,
    band_ground_state,
    band_lowest_eigenvalue,
    band_to_dense,
    block_moments,
    collective_region_operators,
    dicke_basis,
    dressed_band,
    embed_symmetric_state,
    minimize_on_circle,
    optimize_symmetric_partition,
    sector_assignments,
    sector_scan,
    spin_matrices,
    symmetric_upper_bound,
    symmetric_value,
    tied_optimize,
)

FAST = SeesawOptions(restarts=3, structured=4)


@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
def test_dicke_basis_is_orthonormal_and_symmetric(s):
    P = dicke_basis(s)
    assert np.allclose(P.T @ P, np.eye(s + 1))
    swap = np.arange(2**s).reshape((2,) * s).transpose([1, 0] + list(range(2, s))).ravel() if s > 1 else None
    if swap is not None:
        assert np.allclose(P[swap], P)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_collective_operators_are_compressions(rng, s):
    theta = rng.uniform(0, 2 * np.pi, size=2)
    P = dicke_basis(s)
    sym = collective_region_operators(None, theta, s)
    dense = region_operators(None, MeasurementSettings.uniform(s, *theta), s)
    for a, b in zip(sym, dense):
        assert np.allclose(np.asarray(a.todense() if hasattr(a, "todense") else a), P.T @ b @ P, atol=1e-12)


def test_spin_matrices_commutator():
    J = spin_matrices(1.5)
    jx, jz = J.jx, J.jz
    jy_sq = -(jx @ jz - jz @ jx) @ (jx @ jz - jz @ jx)
    # J^2 = j(j+1) for the maximal sector
    assert np.allclose(jx @ jx + jz @ jz + jy_sq, 1.5 * 2.5 * np.eye(4))


def test_block_moments_against_mpmath(rng):
    s = 6
    psi = rng.normal(size=s + 1)
    psi /= np.linalg.norm(psi)
    mx, mz, qxx, qzz, qxz = block_moments(psi, s)
    mpmath.mp.dps = 30
    j = mpmath.mpf(s) / 2
    amp = [mpmath.mpf(float(v)) for v in psi]
    # Dicke index i carries m_z = j - i; <m|J_x|m-1> = sqrt(j(j+1) - m(m-1))/2
    ez = sum(amp[i] ** 2 * (j - i) for i in range(s + 1))
    ex = sum(amp[i] * amp[i + 1] * mpmath.sqrt(j * (j + 1) - (j - i) * (j - i - 1)) for i in range(s))
    assert float(ez) == pytest.approx(mz, abs=1e-12)
    assert float(ex) == pytest.approx(mx, abs=1e-12)
    P = dicke_basis(s)
    J = spin_matrices(s / 2)
    assert qxx == pytest.approx(psi @ J.jx @ J.jx @ psi)
    assert qzz == pytest.approx(psi @ J.jz @ J.jz @ psi)
    assert qxz == pytest.approx(psi @ (J.jx @ J.jz + J.jz @ J.jx) @ psi)
    assert P.shape == (2**s, s + 1)


def test_symmetric_value_matches_full_mode(rng):
    part = Partition((3, 2, 2), 3)
    c = random_coeffs(rng)
    angles = rng.uniform(0, 2 * np.pi, size=(3, 2))
    states = [v / np.linalg.norm(v) for v in (rng.normal(size=s + 1) for s in part.sizes)]
    mom = np.array([block_moments(v, s) for v, s in zip(states, part.sizes)])
    full = [embed_symmetric_state(v, s) for v, s in zip(states, part.sizes)]
    settings = MeasurementSettings(angles, "per-region")
    assert symmetric_value(c, mom, part.sizes, angles) == pytest.approx(product_value(c, settings, part, full))


@pytest.mark.parametrize("d", [30, 250])
def test_band_ground_state_matches_dense(rng, d):
    two_j = d - 1
    band = dressed_band(DEFAULT_INEQUALITY, rng.uniform(0, 2 * np.pi, 2), two_j, two_j, *rng.normal(size=2) * d)
    dense = band_to_dense(band)
    ref = la.eigvalsh(dense)[0]
    val, vec = band_ground_state(band)
    assert val == pytest.approx(ref, rel=1e-12, abs=1e-9)
    lo, hi = band_lowest_eigenvalue(band)
    assert lo <= ref + 1e-9 and hi >= ref - 1e-9 and hi - lo < 1e-10 * max(1.0, abs(ref))
    assert np.linalg.norm(dense @ vec - val * vec) < 1e-8 * max(1.0, abs(val))


def test_minimize_on_circle_beats_grid(rng):
    for _ in range(50):
        A = rng.normal(size=(2, 2))
        P = A + A.T
        h = rng.normal(size=2)
        t = minimize_on_circle(P, h)
        f = lambda x: np.array([np.cos(x), np.sin(x)]) @ P @ np.array([np.cos(x), np.sin(x)]) + h @ [np.cos(x), np.sin(x)]
        grid = np.linspace(0, 2 * np.pi, 2000)
        assert f(t) <= min(f(g) for g in grid) + 1e-12


def test_symmetric_run_is_monotone(rng):
    part = Partition((4, 3), 4)
    solver = SymmetricSeesaw(random_coeffs(rng), part)
    states, angles = solver.random_start(rng)
    trace = []
    solver.run(states, angles, SeesawOptions(), trace)
    assert np.all(np.diff(trace) <= 1e-9 * max(1.0, abs(trace[0])))


def test_tied_stage_never_worse_than_its_start(rng):
    part = Partition((3,) * 12, 3)
    solver = SymmetricSeesaw(DEFAULT_INEQUALITY, part)
    states, angles = solver.random_start(rng)
    tied_states = [states[0]] * part.m
    tied_angles = np.tile(angles[0], (part.m, 1))
    start = solver.value(tied_states, tied_angles)
    _, _, value = tied_optimize(solver, tied_states, tied_angles)
    assert value <= start + 1e-12


@pytest.mark.parametrize("n, k", [(5, 5), (6, 3), (7, 4)])
def test_symmetric_and_full_agree(n, k):
    sym = symmetric_upper_bound(DEFAULT_INEQUALITY, n, k, SeesawOptions(partitions="exhaustive"))
    full = upper_bound(DEFAULT_INEQUALITY, n, k, SeesawOptions(partitions="exhaustive"))
    assert sym.beta_upper == pytest.approx(full.beta_upper, abs=1e-6)


def test_large_single_block_is_fast_and_sane():
    res = optimize_symmetric_partition(DEFAULT_INEQUALITY, Partition((400,), 400), SeesawOptions(restarts=1, structured=2))
    assert res.value / 400 < -2.0
    assert np.isclose(np.linalg.norm(res.states[0]), 1.0)


def test_sector_assignments_enumerate_spins():
    assert sorted(sector_assignments(Partition((3, 2), 3))) == sorted(
        [(1.5, 1.0), (1.5, 0.0), (0.5, 1.0), (0.5, 0.0)])


def test_maximal_sector_is_optimal_small():
    scan = sector_scan(DEFAULT_INEQUALITY, 5, 5, FAST)
    maximal = scan[((5,), (2.5,))]
    assert min(scan.values()) >= maximal - 1e-8


@pytest.mark.parametrize("d", [1, 2, 3])
def test_band_to_dense_small_blocks(d, rng):
    band = rng.normal(size=(3, d))
    dense = band_to_dense(band)
    assert dense.shape == (d, d)
    assert np.allclose(np.diag(dense), band[0])
