"""Collective spin blocks and the symmetric-mode see-saw.

Within a region whose parties share their measurement angles the Bell
operator is a polynomial in the collective spin, so each block state can be
restricted to one spin sector. Production runs use the maximal sector
``j = s/2`` (the Dicke subspace, dimension ``s + 1``); lower sectors exist for
the saturation spot-check.

Block operators are pentadiagonal in the ``Jz`` eigenbasis, ordered
``m_z = j, j-1, ..., -j``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as la
from scipy.linalg import lapack
from scipy.optimize import minimize, minimize_scalar

from diwed import kernels
from diwed.core import InvalidInputError, MeasurementSettings, Partition, PibiCoefficients, RegionOperators
from diwed.partitions import candidate_partitions, coarsest_partitions
from diwed.seesaw import TIE_RTOL, BoundResult, NumericalError, PartitionResult, SeesawOptions, restart_rng

BANDED_MIN_DIM = 200
TIED_MIN_REGIONS = 8
TIED_KICK = 1e-2


@dataclass(frozen=True)
class SpinBlock:
    s: int
    j: float
    jx: np.ndarray
    jz: np.ndarray
    jx2: np.ndarray
    jz2: np.ndarray
    jxz: np.ndarray


@lru_cache(maxsize=256)
def spin_band(two_j: int):
    """Off-diagonal of ``Jx`` and diagonal of ``Jz`` for spin ``two_j / 2``."""
    if two_j < 0:
        raise InvalidInputError("spin must be nonnegative")
    j = two_j / 2
    mz = j - np.arange(two_j + 1)
    x = 0.5 * np.sqrt(np.maximum(j * (j + 1) - mz[:-1] * (mz[:-1] - 1), 0.0))
    x.setflags(write=False)
    mz.setflags(write=False)
    return x, mz


def _two_j(j) -> int:
    two_j = 2 * j
    if abs(two_j - round(two_j)) > 1e-12 or two_j < 0:
        raise InvalidInputError(f"spin {j} is not a nonnegative half-integer")
    return int(round(two_j))


def spin_matrices(j: float, s: int | None = None) -> SpinBlock:
    """Dense spin-``j`` matrices; ``s`` (block size) defaults to ``2j``."""
    two_j = _two_j(j)
    x, z = spin_band(two_j)
    jx = np.diag(x, 1) + np.diag(x, -1)
    jz = np.diag(z)
    return SpinBlock(s if s is not None else two_j, two_j / 2, jx, jz, jx @ jx, jz @ jz, jx @ jz + jz @ jx)


def collective_region_operators(coeffs: PibiCoefficients | None, angles, s: int, j: float | None = None) -> RegionOperators:
    """Region operators of ``s`` parties sharing ``angles = (t0, t1)`` inside spin sector ``j``."""
    if s < 1:
        raise InvalidInputError("block size must be positive")
    blk = spin_matrices(s / 2 if j is None else j, s)
    t0, t1 = angles
    b0 = 2 * (math.cos(t0) * blk.jx + math.sin(t0) * blk.jz)
    b1 = 2 * (math.cos(t1) * blk.jx + math.sin(t1) * blk.jz)
    eye = np.eye(b0.shape[0])
    return RegionOperators(
        b0,
        b1,
        b0 @ b0 - s * eye,
        0.5 * (b0 @ b1 + b1 @ b0) - s * math.cos(t0 - t1) * eye,
        b1 @ b1 - s * eye,
    )


@lru_cache(maxsize=32)
def dicke_basis(s: int) -> np.ndarray:
    """Columns are the Dicke states of ``s`` qubits, column ``m`` with ``m`` excitations."""
    if s > 16:
        raise InvalidInputError("explicit Dicke embedding is limited to s <= 16")
    idx = np.arange(2**s)
    ones = np.array([bin(i).count("1") for i in idx])
    out = np.zeros((2**s, s + 1))
    for m in range(s + 1):
        sel = ones == m
        out[sel, m] = 1.0 / math.sqrt(sel.sum())
    return out


def block_moments(psi, two_j: int) -> np.ndarray:
    """``(<Jx>, <Jz>, <Jx^2>, <Jz^2>, <{Jx,Jz}>)`` of a real block vector."""
    x, z = spin_band(two_j)
    return np.array(kernels.dicke_moments(np.ascontiguousarray(psi, dtype=float), x, z))


def region_expectations(moments, sizes, angles):
    """Per-region ``<B_k>`` (m x 2) and ``<B_kl>`` (m x 3, order 00, 01, 11)."""
    moments = np.asarray(moments).reshape(-1, 5)
    sizes = np.asarray(sizes, dtype=float)
    c, s = np.cos(angles), np.sin(angles)
    mx, mz, qxx, qzz, qxz = moments.T
    b = 2 * (c * mx[:, None] + s * mz[:, None])

    def quad(k, l):
        return 4 * (c[:, k] * c[:, l] * qxx + s[:, k] * s[:, l] * qzz
                    + 0.5 * (c[:, k] * s[:, l] + s[:, k] * c[:, l]) * qxz)

    q = np.column_stack([
        quad(0, 0) - sizes,
        quad(0, 1) - sizes * np.cos(angles[:, 0] - angles[:, 1]),
        quad(1, 1) - sizes,
    ])
    return b, q


def _region_b(moment, angles):
    c, s = np.cos(angles), np.sin(angles)
    return 2 * (c * moment[0] + s * moment[1])


def symmetric_value(coeffs: PibiCoefficients, moments, sizes, angles) -> float:
    a = coeffs.as_array()
    b, q = region_expectations(moments, sizes, np.asarray(angles, dtype=float))
    t0, t1 = b.sum(axis=0)
    own = a[0] * b[:, 0].sum() + a[1] * b[:, 1].sum() + (q @ a[2:]).sum()
    cross = (a[2] * (t0 * t0 - b[:, 0] @ b[:, 0]) + a[3] * (t0 * t1 - b[:, 0] @ b[:, 1])
             + a[4] * (t1 * t1 - b[:, 1] @ b[:, 1]))
    return float(own + cross)


def _fields(coeffs, b, region, total=None):
    a = coeffs.as_array()
    rest = (b.sum(axis=0) if total is None else total) - b[region]
    return 2 * a[2] * rest[0] + a[3] * rest[1], 2 * a[4] * rest[1] + a[3] * rest[0]


@lru_cache(maxsize=None)
def _band_parts(two_j: int):
    """Size-only pieces of :func:`dressed_band`: ``z, Jx^2`` diagonal, ``{Jx,Jz}`` and ``Jx^2`` off-diagonals."""
    x, z = spin_band(two_j)
    xl = np.concatenate(([0.0], x))
    xr = np.concatenate((x, [0.0]))
    return z, xl * xl + xr * xr, z * z, x, x * (z[:-1] + z[1:]), x[:-1] * x[1:]


def dressed_band(coeffs, angles, s: int, two_j: int, e0: float, e1: float) -> np.ndarray:
    """Lower band storage (3 x d) of the dressed region operator."""
    a0, a1, a00, a01, a11 = coeffs.alpha0, coeffs.alpha1, coeffs.alpha00, coeffs.alpha01, coeffs.alpha11
    z, xx_diag, zz_diag, x, xz_off, xx_off = _band_parts(two_j)
    d = two_j + 1
    c0, c1 = math.cos(angles[0]), math.cos(angles[1])
    s0, s1 = math.sin(angles[0]), math.sin(angles[1])
    A0, A1 = a0 + e0, a1 + e1
    kxx = 4 * (a00 * c0 * c0 + a01 * c0 * c1 + a11 * c1 * c1)
    kzz = 4 * (a00 * s0 * s0 + a01 * s0 * s1 + a11 * s1 * s1)
    kxz = 4 * (a00 * c0 * s0 + 0.5 * a01 * (c0 * s1 + s0 * c1) + a11 * c1 * s1)
    shift = s * (a00 + a11 + a01 * (c0 * c1 + s0 * s1))
    band = np.zeros((3, d))
    band[0] = 2 * (A0 * s0 + A1 * s1) * z + kxx * xx_diag + kzz * zz_diag - shift
    if d > 1:
        band[1, :-1] = 2 * (A0 * c0 + A1 * c1) * x + kxz * xz_off
    if d > 2:
        band[2, :-2] = kxx * xx_off
    return band


def band_to_dense(band) -> np.ndarray:
    d = band.shape[1]
    out = np.diag(band[0])
    for k in range(1, min(band.shape[0], d)):
        off = np.diag(band[k, :d - k], -k)
        out += off + off.T
    return out


def _gershgorin(band):
    d = band.shape[1]
    radius = np.zeros(d)
    for k in range(1, band.shape[0]):
        off = np.abs(band[k, :d - k])
        radius[:d - k] += off
        radius[k:] += off
    return float(np.min(band[0] - radius)), float(np.min(band[0]))


def _is_positive_definite(band, shift):
    shifted = band.copy()
    shifted[0] -= shift
    _, info = lapack.dpbtrf(shifted, lower=1)
    return info == 0


def band_lowest_eigenvalue(band, rtol: float = 1e-14):
    """Bracket ``(lo, hi)`` of the smallest eigenvalue by Cholesky-based bisection.

    ``A - lo I`` is positive definite and ``A - hi I`` is not; the bracket
    width is at most ``rtol`` times the spectral scale.
    """
    lo, hi = _gershgorin(band)
    scale = max(1.0, float(np.max(np.abs(band))))
    lo -= 1e-12 * scale
    while hi - lo > rtol * max(scale, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _is_positive_definite(band, mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def band_ground_state(band):
    d = band.shape[1]
    try:
        if d < BANDED_MIN_DIM:
            vals, vecs = la.eigh(band_to_dense(band), subset_by_index=[0, 0])
            vec = vecs[:, 0]
        else:
            lo, _ = band_lowest_eigenvalue(band)
            shifted = band.copy()
            shifted[0] -= lo
            chol, info = lapack.dpbtrf(shifted, lower=1)
            if info:
                raise la.LinAlgError("shifted band matrix is not positive definite")
            vec = 1.0 + 0.1 * np.sin(1.3 * np.arange(d))
            for _ in range(4):
                vec, info = lapack.dpbtrs(chol, vec, lower=1)
                vec /= np.linalg.norm(vec)
            vals = [_band_energy(band, vec)]
    except la.LinAlgError as exc:
        raise NumericalError("banded ground-state solve failed", {"dimension": d, "error": str(exc)}) from exc
    vec = vec / np.linalg.norm(vec)
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(vals[0]), vec


def band_min_energy(band) -> float:
    if band.shape[1] < BANDED_MIN_DIM:
        return float(np.linalg.eigvalsh(band_to_dense(band), UPLO="L")[0])
    return band_lowest_eigenvalue(band)[1]


def minimize_on_circle(P, h, current: float | None = None):
    """Global minimizer ``theta`` of ``u^T P u + h.u`` over ``u = (cos t, sin t)``."""
    A = 0.5 * (P[0, 0] - P[1, 1])
    B = 0.5 * (P[0, 1] + P[1, 0])
    h0, h1 = h
    coeffs = [-2 * A + 2j * B, -h0 + 1j * h1, 0.0, h0 + 1j * h1, 2 * A + 2j * B]
    cands = list(np.linspace(0, 2 * np.pi, 8, endpoint=False))
    if np.any(np.abs(coeffs) > 0):
        cands.extend(np.angle(np.roots(coeffs)))
    if current is not None:
        cands.append(current)
    t = np.array(cands)
    f = A * np.cos(2 * t) + B * np.sin(2 * t) + h0 * np.cos(t) + h1 * np.sin(t)
    return float(np.mod(t[np.argmin(f)], 2 * np.pi))


def _optimize_region_angles(coeffs, moments, sizes, angles, b, region, total=None):
    """Exact update of one region's two angles, one at a time."""
    a = coeffs.as_array()
    mx, mz, qxx, qzz, qxz = moments[region]
    Q = np.array([[qxx, 0.5 * qxz], [0.5 * qxz, qzz]])
    m = np.array([mx, mz])
    s = sizes[region]
    e0, e1 = _fields(coeffs, b, region, total)
    for k, lin, same in ((0, a[0] + e0, a[2]), (1, a[1] + e1, a[4])):
        other = angles[region, 1 - k]
        uo = np.array([math.cos(other), math.sin(other)])
        P = 4 * same * Q
        h = 2 * lin * m + a[3] * (4 * Q @ uo - s * uo)
        angles[region, k] = minimize_on_circle(P, h, angles[region, k])


class SymmetricSeesaw:
    """See-saw state for one partition in the symmetric (spin-block) mode."""

    def __init__(self, coeffs: PibiCoefficients, partition: Partition, spins=None):
        self.coeffs = coeffs
        self.partition = partition
        self.sizes = np.array(partition.sizes)
        if spins is None:
            self.two_j = list(partition.sizes)
        else:
            self.two_j = [_two_j(j) for j in spins]
            for tj, s in zip(self.two_j, partition.sizes):
                if tj > s or (s - tj) % 2:
                    raise InvalidInputError(f"spin {tj / 2} is not a sector of {s} qubits")

    def moments(self, states) -> np.ndarray:
        return np.array([block_moments(psi, tj) for psi, tj in zip(states, self.two_j)])

    def value(self, states, angles) -> float:
        return symmetric_value(self.coeffs, self.moments(states), self.sizes, angles)

    def state_sweep(self, states, angles):
        states = [np.array(v, dtype=float) for v in states]
        mom = self.moments(states)
        b, _ = region_expectations(mom, self.sizes, angles)
        total = b.sum(axis=0)
        for r in range(len(states)):
            e0, e1 = _fields(self.coeffs, b, r, total)
            band = dressed_band(self.coeffs, angles[r], int(self.sizes[r]), self.two_j[r], e0, e1)
            old = states[r]
            old_energy = _band_energy(band, old)
            val, vec = band_ground_state(band)
            if val < old_energy:
                states[r] = vec
                mom[r] = block_moments(vec, self.two_j[r])
                total = total - b[r]
                b[r] = _region_b(mom[r], angles[r])
                total = total + b[r]
        return states, symmetric_value(self.coeffs, mom, self.sizes, angles)

    def angle_sweep(self, states, angles):
        angles = np.array(angles, dtype=float)
        mom = self.moments(states)
        before = symmetric_value(self.coeffs, mom, self.sizes, angles)
        b, _ = region_expectations(mom, self.sizes, angles)
        total = b.sum(axis=0)
        for r in range(len(states)):
            _optimize_region_angles(self.coeffs, mom, self.sizes, angles, b, r, total)
            total = total - b[r]
            b[r] = _region_b(mom[r], angles[r])
            total = total + b[r]
        after = symmetric_value(self.coeffs, mom, self.sizes, angles)
        if after > before + 1e-9 * max(1.0, abs(before)):
            raise NumericalError("angle sweep increased the objective", {"before": before, "after": after})
        return angles, after

    def random_start(self, rng):
        angles = rng.uniform(0, 2 * np.pi, size=(self.partition.m, 2))
        states = [_unit(rng.standard_normal(tj + 1)) for tj in self.two_j]
        return states, angles

    def joint_sweep(self, states, angles):
        """Re-optimize each region's angles together with its block state.

        With the other regions frozen, the value as a function of the region's
        angles is the lowest eigenvalue of its dressed operator. A lone region
        only depends on the relative angle (a common rotation is a symmetry),
        which is scanned globally.
        """
        states = list(states)
        angles = np.array(angles, dtype=float)
        mom = self.moments(states)
        b, _ = region_expectations(mom, self.sizes, angles)
        total = b.sum(axis=0)
        memo = {}
        for r in range(len(states)):
            e0, e1 = _fields(self.coeffs, b, r, total)
            s, tj = int(self.sizes[r]), self.two_j[r]
            # regions sharing size, state, angles and fields (up to rounding) pose the same subproblem;
            # reuse the angles found for it but evaluate this region exactly
            key = (s, tj, *_significant([e0, e1, *angles[r]]), _significant(np.abs(states[r])).tobytes())
            cached = memo.get(key)

            def lowest(th):
                return band_min_energy(dressed_band(self.coeffs, th, s, tj, e0, e1))

            current = _band_energy(dressed_band(self.coeffs, angles[r], s, tj, e0, e1), states[r])
            if key in memo and cached is None:
                continue
            if cached is not None:
                th = cached
            elif len(states) == 1:
                th = _relative_angle_scan(lowest)
            else:
                out = minimize(_lowest_with_gradient, angles[r], args=(self.coeffs, s, tj, e0, e1), jac=True,
                               method="BFGS", options={"gtol": 1e-10 * max(1.0, abs(current)), "maxiter": 200})
                th = out.x
            val, vec = band_ground_state(dressed_band(self.coeffs, th, s, tj, e0, e1))
            improved = val < current - 1e-12 * max(1.0, abs(current))
            if key not in memo:
                memo[key] = np.array(th, dtype=float) if improved else None
            if improved:
                angles[r] = th
                states[r] = vec
                mom[r] = block_moments(vec, tj)
                total = total - b[r]
                b[r] = _region_b(mom[r], angles[r])
                total = total + b[r]
        return states, angles, symmetric_value(self.coeffs, mom, self.sizes, angles)

    def run(self, states, angles, options: SeesawOptions, trace=None, joint_every: int = 25):
        """Cheap state/angle sweeps, with a joint sweep whenever they stall (or every ``joint_every``)."""
        value = self.value(states, angles)
        if trace is not None:
            trace.append(value)
        stalled, converged, sweeps = 0, False, 0
        for sweeps in range(1, options.max_sweeps + 1):
            tol = options.tol * max(1.0, abs(value))
            if sweeps == 1 and self.partition.m == 1:
                states, angles, value = self.joint_sweep(states, angles)
            states, v1 = self.state_sweep(states, angles)
            angles, v2 = self.angle_sweep(states, angles)
            if trace is not None:
                trace.extend([v1, v2])
            stalled = stalled + 1 if value - v2 < tol else 0
            value = v2
            if stalled >= options.patience or sweeps % joint_every == 0:
                states, angles, v3 = self.joint_sweep(states, angles)
                if trace is not None:
                    trace.append(v3)
                gain = value - v3
                value = min(value, v3)
                if stalled >= options.patience and gain < tol:
                    converged = True
                    break
                stalled = 0
        return value, states, np.mod(angles, 2 * np.pi), sweeps, converged


def _size_classes(sizes, two_j):
    keys = list(zip(map(int, sizes), two_j))
    uniq = sorted(set(keys))
    return uniq, np.array([uniq.index(k) for k in keys])


def tied_optimize(solver: "SymmetricSeesaw", states, angles, maxiter: int = 2000):
    """Quasi-Newton over one state and one angle pair per size class.

    Regions of equal size usually share their optimum; coordinate sweeps reach
    such points only slowly when many regions are coupled. Every region of a
    class sees the same dressed operator ``H``, so the gradient is ``count``
    times ``2 (H psi - <H> psi) / |x|`` for the state and ``<dH/dtheta>`` for
    the angles.
    """
    classes, label = _size_classes(solver.sizes, solver.two_j)
    counts = np.bincount(label, minlength=len(classes)).astype(float)
    dims = [tj + 1 for _, tj in classes]
    first = [int(np.flatnonzero(label == c)[0]) for c in range(len(classes))]
    x0 = np.concatenate([np.concatenate([states[i], angles[i]]) for i in first])
    cuts = np.cumsum([0] + [d + 2 for d in dims])
    coeffs = solver.coeffs
    a = coeffs.as_array()

    def unpack(x):
        vecs, angs = [], []
        for c, d in enumerate(dims):
            seg = x[cuts[c]:cuts[c + 1]]
            vecs.append(seg[:d] / np.linalg.norm(seg[:d]))
            angs.append(seg[d:])
        return vecs, angs

    def objective(x):
        vecs, angs = unpack(x)
        mom = np.array([block_moments(v, tj) for v, (_, tj) in zip(vecs, classes)])
        value = symmetric_value(coeffs, mom[label], solver.sizes, np.array(angs)[label])
        b = np.array([_region_b(m, t) for m, t in zip(mom, angs)])
        total = counts @ b
        grad = np.empty_like(x)
        for c, ((s, tj), d) in enumerate(zip(classes, dims)):
            rest = total - b[c]
            e0, e1 = 2 * a[2] * rest[0] + a[3] * rest[1], 2 * a[4] * rest[1] + a[3] * rest[0]
            band = dressed_band(coeffs, angs[c], s, tj, e0, e1)
            v = vecs[c]
            hv = _band_matvec(band, v)
            norm = np.linalg.norm(x[cuts[c]:cuts[c] + d])
            grad[cuts[c]:cuts[c] + d] = counts[c] * 2 * (hv - (v @ hv) * v) / norm
            _, ang_grad = _angle_gradient(coeffs, angs[c], s, tj, e0, e1, v)
            grad[cuts[c] + d:cuts[c + 1]] = counts[c] * ang_grad
        return value, grad

    out = minimize(objective, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-10})
    vecs, angs = unpack(out.x)
    return [vecs[c].copy() for c in label], np.array(angs)[label], float(out.fun)


def _band_matvec(band, v):
    out = band[0] * v
    d = band.shape[1]
    for k in range(1, band.shape[0]):
        out[k:] += band[k, :d - k] * v[:-k]
        out[:-k] += band[k, :d - k] * v[k:]
    return out


def _angle_gradient(coeffs, th, s, tj, e0, e1, vec, h: float = 1e-5):
    """``<vec| dH/dtheta |vec>`` by central differences of the (smooth) band."""
    th = np.asarray(th, dtype=float)
    grad = np.empty(2)
    for i in range(2):
        step = np.zeros(2)
        step[i] = h
        diff = dressed_band(coeffs, th + step, s, tj, e0, e1) - dressed_band(coeffs, th - step, s, tj, e0, e1)
        grad[i] = _band_energy(diff, vec) / (2 * h)
    return None, grad


def _lowest_with_gradient(th, coeffs, s, tj, e0, e1):
    """Lowest eigenvalue of the dressed band and its angle gradient (Hellmann-Feynman)."""
    val, vec = band_ground_state(dressed_band(coeffs, th, s, tj, e0, e1))
    return val, _angle_gradient(coeffs, th, s, tj, e0, e1, vec)[1]


def _relative_angle_scan(lowest, points: int = 72):
    grid = np.linspace(0, 2 * np.pi, points, endpoint=False)
    vals = [lowest((0.0, d)) for d in grid]
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    out = minimize_scalar(lambda d: lowest((0.0, d)), bounds=(grid[i] - step, grid[i] + step),
                          method="bounded", options={"xatol": 1e-10})
    best = out.x if out.fun < vals[i] else grid[i]
    return np.array([0.0, best])


def _significant(x, digits: int = 7):
    x = np.asarray(x, dtype=float)
    mag = np.where(x == 0, 1.0, np.abs(x))
    step = 10.0 ** (np.floor(np.log10(mag)) - digits + 1)
    return np.round(x / step) * step


def _band_energy(band, v):
    out = band[0] @ (v * v)
    d = band.shape[1]
    for k in range(1, band.shape[0]):
        out += 2 * np.dot(band[k, :d - k] * v[:-k], v[k:])
    return float(out)


def _unit(v):
    return v / np.linalg.norm(v)


def optimize_symmetric_partition(coeffs, partition: Partition, options: SeesawOptions, spins=None) -> PartitionResult:
    """Best of ``options.restarts`` random starts plus ``options.structured`` uniform-angle starts.

    Structured start ``i`` gives every region the angles ``(0, 2 pi i / structured)``.
    Structured starts, and every start once there are more than
    ``TIED_MIN_REGIONS`` regions, first pass through :func:`tied_optimize`; random
    starts are then perturbed by ``TIED_KICK`` before the sweeps.
    """
    solver = SymmetricSeesaw(coeffs, partition, spins)
    best, found = None, []
    for rep in range(options.restarts + options.structured):
        rng = restart_rng(options.seed, partition, rep)
        states, angles = solver.random_start(rng)
        if rep >= options.restarts:
            delta = 2 * np.pi * (rep - options.restarts) / options.structured
            angles = np.tile([0.0, delta], (partition.m, 1))
        if partition.m > 1 and (rep >= options.restarts or partition.m > TIED_MIN_REGIONS):
            states, angles, _ = tied_optimize(solver, states, angles)
        if partition.m > TIED_MIN_REGIONS and rep < options.restarts:
            # tied optima can be saddles of the untied problem; a small kick lets the sweeps leave them
            angles = angles + TIED_KICK * rng.standard_normal(angles.shape)
            states = [_unit(v + TIED_KICK * rng.standard_normal(v.size)) for v in states]
        value, states, angles, sweeps, conv = solver.run(states, angles, options)
        settings = MeasurementSettings(angles, "per-region")
        found.append((value, settings))
        if best is None or value < best.value:
            best = PartitionResult(partition, value, settings, states, sweeps, conv, rep)
    slack = TIE_RTOL * max(1.0, abs(best.value))
    best.ties = [st for v, st in found if v <= best.value + slack and st is not best.settings]
    return best


def symmetric_upper_bound(coeffs: PibiCoefficients, n: int, k: int, options: SeesawOptions | None = None) -> BoundResult:
    """``beta_k^U`` with equal angles inside regions and block states in the maximal spin sector."""
    options = options or SeesawOptions()
    parts = candidate_partitions(n, k, options.partitions)
    results = [optimize_symmetric_partition(coeffs, p, options) for p in parts]
    best = min(results, key=lambda res: (res.value, res.partition.sizes))
    return BoundResult(
        n=n,
        k=k,
        beta_upper=best.value,
        partition=best.partition,
        settings=best.settings,
        states=best.states,
        mode="symmetric",
        metadata={
            "converged": all(res.converged for res in results),
            "sweeps": best.sweeps,
            "restarts": options.restarts,
            "partitions_searched": [p.label() for p in parts],
            "seed": options.seed,
        },
        candidates=results,
    )


def sector_assignments(partition: Partition):
    """Every tuple of spins ``(j_A)`` allowed for the partition's blocks."""
    choices = [[(s - 2 * t) / 2 for t in range(s // 2 + 1)] for s in partition.sizes]
    return list(itertools.product(*choices))


def sector_scan(coeffs: PibiCoefficients, n: int, k: int, options: SeesawOptions | None = None,
                partitions=None) -> dict:
    """Best symmetric-mode value per (partition, spin assignment).

    Keys are ``(sizes, spins)``; used to check that the maximal sector is optimal.
    """
    options = options or SeesawOptions()
    parts = partitions if partitions is not None else coarsest_partitions(n, k)
    out = {}
    for p in parts:
        for spins in sector_assignments(p):
            out[(p.sizes, spins)] = optimize_symmetric_partition(coeffs, p, options, spins).value
    return out


def embed_symmetric_state(psi, s: int) -> np.ndarray:
    """Map a maximal-sector block vector to the ``2^s``-dimensional qubit space."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (s + 1,):
        raise InvalidInputError("symmetric block vector must have s + 1 entries")
    return dicke_basis(s) @ psi
