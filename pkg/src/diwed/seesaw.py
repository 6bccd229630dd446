"""Variational upper bounds by see-saw over block states and measurement angles.

For a product state over the blocks of a partition the Bell value only needs
single-site Bloch components ``r_i`` and two-site correlation matrices
``C_ij`` (with ``C_ij = r_i r_j^T`` across blocks). With those cached, the
value is a quadratic form in the unit vectors ``u_ik = (cos t_ik, sin t_ik)``
and is affine in each party's pair ``(u_i0, u_i1)``, so every per-party angle
update is an exact minimization. Block states are updated as ground vectors of
the mean-field dressed block operator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from diwed.core import (
    DENSE_CAP,
    InvalidInputError,
    MeasurementSettings,
    Partition,
    PibiCoefficients,
    collective_operator,
)
from diwed.partitions import candidate_partitions

log = logging.getLogger(__name__)


TIE_RTOL = 1e-9


class NumericalError(RuntimeError):
    """An eigensolver or optimizer failed; ``diagnostics`` says where."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SeesawOptions:
    restarts: int = 20
    max_sweeps: int = 500
    tol: float = 1e-10
    patience: int = 2
    seed: int = 0
    partitions: object = "balanced"
    dense_eig_max: int = 256
    warm_start: bool = True
    structured: int = 12

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if not self.tol > 0:
            raise InvalidInputError("tolerance must be positive")


@dataclass
class PartitionResult:
    partition: Partition
    value: float
    settings: MeasurementSettings
    states: list
    sweeps: int
    converged: bool
    restart: int
    # settings of other restarts that reach the same value within TIE_RTOL
    ties: list = field(default_factory=list)


@dataclass
class BoundResult:
    """Bounds on ``beta_k`` for one ``(n, k)`` plus the optimizer's witnesses."""

    n: int
    k: int
    beta_upper: float | None = None
    beta_lower: float | None = None
    partition: Partition | None = None
    settings: MeasurementSettings | None = None
    states: list | None = None
    mode: str = "full"
    metadata: dict = field(default_factory=dict)
    candidates: list = field(default_factory=list)

    @property
    def gap(self):
        if self.beta_upper is None or self.beta_lower is None:
            return None
        return self.beta_upper - self.beta_lower


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def unit_vectors(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def random_product_state(partition: Partition, rng) -> list:
    return [normalize(rng.standard_normal(2**s)) for s in partition.sizes]


def block_moments(psi, s: int):
    """Bloch components ``r`` (s x 2) and Gram matrix of ``sigma_a^i psi`` (2s x 2s)."""
    t = np.asarray(psi, dtype=float).reshape((2,) * s)
    rows = []
    for i in range(s):
        sign = np.array([1.0, -1.0]).reshape([2 if ax == i else 1 for ax in range(s)])
        rows.append(np.flip(t, axis=i).ravel())
        rows.append((t * sign).ravel())
    phi = np.array(rows)
    gram = phi @ phi.T
    r = (phi @ t.ravel()).reshape(s, 2)
    return r, gram


def system_moments(partition: Partition, states):
    """Stacked ``r`` (n x 2) and pair-correlation matrix ``G`` (2n x 2n)."""
    n = partition.n
    r = np.zeros((n, 2))
    grams = []
    for off, s, psi in zip(partition.offsets(), partition.sizes, states):
        if psi.shape != (2**s,):
            raise InvalidInputError(f"block state of dimension {psi.shape} does not match block size {s}")
        rb, gb = block_moments(psi, s)
        r[off:off + s] = rb
        grams.append(gb)
    flat = r.ravel()
    G = np.outer(flat, flat)
    for off, s, gb in zip(partition.offsets(), partition.sizes, grams):
        G[2 * off:2 * (off + s), 2 * off:2 * (off + s)] = gb
    for i in range(n):
        G[2 * i:2 * i + 2, 2 * i:2 * i + 2] = 0.0
    return r, G


def objective_from_moments(coeffs: PibiCoefficients, r, G, angles) -> float:
    a = coeffs.as_array()
    w0 = unit_vectors(angles[:, 0]).ravel()
    w1 = unit_vectors(angles[:, 1]).ravel()
    rf = np.asarray(r).ravel()
    g0, g1 = G @ w0, G @ w1
    return float(a[0] * w0 @ rf + a[1] * w1 @ rf + a[2] * w0 @ g0 + a[3] * w0 @ g1 + a[4] * w1 @ g1)


def product_value(coeffs, settings: MeasurementSettings, partition: Partition, states) -> float:
    """Bell value of a block-product state for per-party settings."""
    r, G = system_moments(partition, states)
    return objective_from_moments(coeffs, r, G, settings.expand(partition).angles)


def _rest_fields(coeffs, r, angles, lo, hi):
    """Dressing coefficients for ``B_0, B_1`` of the block ``[lo, hi)``."""
    a = coeffs.as_array()
    mask = np.ones(r.shape[0], dtype=bool)
    mask[lo:hi] = False
    rest0 = float(np.sum(unit_vectors(angles[mask, 0]) * r[mask]))
    rest1 = float(np.sum(unit_vectors(angles[mask, 1]) * r[mask]))
    return 2 * a[2] * rest0 + a[3] * rest1, 2 * a[4] * rest1 + a[3] * rest0


def _dressed_operator(coeffs, angles, partition, r, target, dense_max=256):
    """Dressed operator of one block: dense array when small, LinearOperator otherwise."""
    off = partition.offsets()[target]
    s = partition.sizes[target]
    if s > DENSE_CAP:
        raise InvalidInputError(f"block of {s} parties exceeds the dense cap {DENSE_CAP}")
    block = angles[off:off + s]
    a = coeffs.as_array()
    e0, e1 = _rest_fields(coeffs, r, angles, off, off + s)
    b0 = collective_operator(block[:, 0])
    b1 = collective_operator(block[:, 1])
    shift = s * (a[2] + a[4]) + a[3] * float(np.sum(np.cos(block[:, 0] - block[:, 1])))
    d = 2**s
    if d <= dense_max:
        b0, b1 = b0.toarray(), b1.toarray()
        p01 = b0 @ b1
        op = (a[0] + e0) * b0 + (a[1] + e1) * b1 + a[2] * (b0 @ b0) + a[4] * (b1 @ b1) + 0.5 * a[3] * (p01 + p01.T)
        op[np.diag_indices(d)] -= shift
        return op

    def matvec(v):
        v = np.asarray(v).ravel()
        u0, u1 = b0 @ v, b1 @ v
        return ((a[0] + e0) * u0 + (a[1] + e1) * u1 + a[2] * (b0 @ u0) + a[4] * (b1 @ u1)
                + 0.5 * a[3] * (b0 @ u1 + b1 @ u0) - shift * v)

    return spla.LinearOperator((d, d), matvec=matvec, dtype=float)


def dressed_block_operator(coeffs: PibiCoefficients, settings: MeasurementSettings, partition: Partition,
                           states, target_block: int) -> np.ndarray:
    """Operator whose expectation on the target block gives the Bell value up to a constant.

    Only the other blocks' states are read; ``states[target_block]`` may be ``None``.
    """
    if not 0 <= target_block < partition.m:
        raise InvalidInputError("target block out of range")
    angles = settings.expand(partition).angles
    r = np.zeros((partition.n, 2))
    for b, (off, s) in enumerate(zip(partition.offsets(), partition.sizes)):
        if b == target_block:
            continue
        psi = np.asarray(states[b], dtype=float)
        if psi.shape != (2**s,):
            raise InvalidInputError(f"state of block {b} has dimension {psi.shape}, expected {2**s}")
        r[off:off + s] = block_moments(psi, s)[0]
    op = _dressed_operator(coeffs, angles, partition, r, target_block, dense_max=2**DENSE_CAP)
    return np.asarray(op)


def ground_state(op, v0=None, dense_max: int = 256):
    """Lowest eigenpair of a real symmetric (dense or sparse) matrix."""
    dim = op.shape[0]
    try:
        if isinstance(op, np.ndarray) or dim <= dense_max:
            mat = op.toarray() if sp.issparse(op) else np.asarray(op)
            vals, vecs = la.eigh(mat, subset_by_index=[0, 0])
            val, vec = vals[0], vecs[:, 0]
        else:
            vals, vecs = spla.eigsh(op, k=1, which="SA", v0=v0, tol=1e-13, maxiter=50 * dim)
            val, vec = vals[0], vecs[:, 0]
    except (la.LinAlgError, spla.ArpackError) as exc:
        raise NumericalError("ground-state solve failed", {"dimension": dim, "error": str(exc)}) from exc
    vec = vec / np.linalg.norm(vec)
    j = np.argmax(np.abs(vec))
    if vec[j] < 0:
        vec = -vec
    return float(val), vec


def state_sweep(coeffs: PibiCoefficients, settings: MeasurementSettings, partition: Partition, states,
                dense_max: int = 256):
    """Replace every block state, in block order, by its dressed ground vector.

    A new vector is kept only if it does not raise the block energy, so the
    objective never increases.
    """
    angles = settings.expand(partition).angles
    states = [np.asarray(s, dtype=float).copy() for s in states]
    r, _ = system_moments(partition, states)
    for b, (off, s) in enumerate(zip(partition.offsets(), partition.sizes)):
        op = _dressed_operator(coeffs, angles, partition, r, b, dense_max)
        old = states[b]
        old_energy = float(old @ (op @ old))
        val, vec = ground_state(op, v0=old, dense_max=dense_max)
        if val < old_energy:
            states[b] = vec
            r[off:off + s] = block_moments(vec, s)[0]
    r, G = system_moments(partition, states)
    return states, objective_from_moments(coeffs, r, G, angles)


def optimize_angles(coeffs: PibiCoefficients, r, G, angles):
    """One pass of exact per-party angle updates for fixed moments."""
    a = coeffs.as_array()
    angles = np.array(angles, dtype=float)
    U0 = unit_vectors(angles[:, 0])
    U1 = unit_vectors(angles[:, 1])
    g0 = G @ U0.ravel()
    g1 = G @ U1.ravel()
    for i in range(angles.shape[0]):
        sl = slice(2 * i, 2 * i + 2)
        grad0 = a[0] * r[i] + 2 * a[2] * g0[sl] + a[3] * g1[sl]
        grad1 = a[1] * r[i] + 2 * a[4] * g1[sl] + a[3] * g0[sl]
        for k, grad, U, g in ((0, grad0, U0, g0), (1, grad1, U1, g1)):
            norm = np.hypot(*grad)
            if norm < 1e-300:
                continue
            new = -grad / norm
            if new @ grad < U[i] @ grad:
                g += G[:, sl] @ (new - U[i])
                U[i] = new
                angles[i, k] = np.arctan2(new[1], new[0])
    return np.mod(angles, 2 * np.pi)


def angle_sweep(coeffs: PibiCoefficients, partition: Partition, states, settings: MeasurementSettings):
    """Update every party's two angles with the block states held fixed."""
    r, G = system_moments(partition, states)
    angles = optimize_angles(coeffs, r, G, settings.expand(partition).angles)
    return MeasurementSettings(angles), objective_from_moments(coeffs, r, G, angles)


def run_seesaw(coeffs, partition: Partition, settings: MeasurementSettings, states, options: SeesawOptions,
               trace: list | None = None):
    """Alternate state and angle sweeps until the objective stalls.

    Returns ``(value, settings, states, sweeps, converged)``.
    """
    settings = settings.expand(partition)
    value = product_value(coeffs, settings, partition, states)
    if trace is not None:
        trace.append(value)
    stalled, converged, sweeps = 0, False, 0
    for sweeps in range(1, options.max_sweeps + 1):
        states, v1 = state_sweep(coeffs, settings, partition, states, options.dense_eig_max)
        settings, v2 = angle_sweep(coeffs, partition, states, settings)
        if trace is not None:
            trace.extend([v1, v2])
        improvement = value - v2
        value = v2
        stalled = stalled + 1 if improvement < options.tol else 0
        if stalled >= options.patience:
            converged = True
            break
    return value, settings, states, sweeps, converged


def restart_rng(seed: int, partition: Partition, restart: int):
    return np.random.default_rng(np.random.SeedSequence([seed, *partition.sizes, 0, restart]))


def optimize_partition(coeffs, partition: Partition, options: SeesawOptions) -> PartitionResult:
    """Best see-saw result over ``options.restarts`` random starts on one partition."""
    best = None
    for rep in range(options.restarts):
        rng = restart_rng(options.seed, partition, rep)
        settings = MeasurementSettings(rng.uniform(0, 2 * np.pi, size=(partition.n, 2)))
        states = random_product_state(partition, rng)
        value, settings, states, sweeps, conv = run_seesaw(coeffs, partition, settings, states, options)
        if best is None or value < best.value:
            best = PartitionResult(partition, value, settings, states, sweeps, conv, rep)
    if options.warm_start:
        # random starts often stall in the classical basin; the symmetric optimum is a feasible full-mode start
        from diwed.spin import embed_symmetric_state, optimize_symmetric_partition

        sym = optimize_symmetric_partition(coeffs, partition, options)
        states = [embed_symmetric_state(v, s) for v, s in zip(sym.states, partition.sizes)]
        value, settings, states, sweeps, conv = run_seesaw(coeffs, partition, sym.settings, states, options)
        if value < best.value:
            best = PartitionResult(partition, value, settings, states, sweeps, conv, -1)
    return best


def upper_bound(coeffs: PibiCoefficients, n: int, k: int, options: SeesawOptions | None = None) -> BoundResult:
    """``beta_k^U``: the best see-saw value over candidate partitions and restarts."""
    options = options or SeesawOptions()
    if n > DENSE_CAP:
        raise InvalidInputError(f"full mode needs n <= {DENSE_CAP}; use the symmetric mode")
    parts = candidate_partitions(n, k, options.partitions)
    results = [optimize_partition(coeffs, p, options) for p in parts]
    best = min(results, key=lambda res: (res.value, res.partition.sizes))
    log.debug("upper bound n=%d k=%d: %.12g on %s", n, k, best.value, best.partition.label())
    return BoundResult(
        n=n,
        k=k,
        beta_upper=best.value,
        partition=best.partition,
        settings=best.settings,
        states=best.states,
        mode="full",
        metadata={
            "converged": all(res.converged for res in results),
            "sweeps": best.sweeps,
            "restarts": options.restarts,
            "partitions_searched": [p.label() for p in parts],
            "seed": options.seed,
        },
        candidates=results,
    )
