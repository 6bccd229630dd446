"""Domain types, qubit observables and Bell-operator assembly.

Everything here is real: observables live in the x-z plane of the Bloch
sphere, so every operator is a real symmetric matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

DENSE_CAP = 12

COEFF_NAMES = ("alpha0", "alpha1", "alpha00", "alpha01", "alpha11")


class InvalidInputError(ValueError):
    """Raised for malformed or out-of-domain inputs."""


class CapacityError(InvalidInputError):
    """Raised when a dense construction would exceed the configured size cap."""


@dataclass(frozen=True)
class PibiCoefficients:
    """Coefficients of a two-body permutationally invariant Bell expression.

    The expression is ``alpha0*S0 + alpha1*S1 + alpha00*S00 + alpha01*S01 +
    alpha11*S11`` where ``S_kl`` sums over ordered pairs of distinct parties.
    """

    alpha0: float
    alpha1: float
    alpha00: float
    alpha01: float
    alpha11: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("Bell coefficients must be finite")
        if not np.any(vals != 0.0):
            raise InvalidInputError("Bell coefficients must not all vanish")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha0, self.alpha1, self.alpha00, self.alpha01, self.alpha11], dtype=float)

    def scaled(self, factor: float) -> "PibiCoefficients":
        return PibiCoefficients(*(factor * self.as_array()))

    def to_dict(self) -> dict:
        return dict(zip(COEFF_NAMES, map(float, self.as_array())))

    @classmethod
    def from_dict(cls, data: dict) -> "PibiCoefficients":
        missing = [name for name in COEFF_NAMES if name not in data]
        if missing:
            raise InvalidInputError(f"inequality definition is missing field(s): {', '.join(missing)}")
        try:
            return cls(*(float(data[name]) for name in COEFF_NAMES))
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"inequality coefficients must be numbers: {exc}") from exc


def load_inequality(path=None) -> PibiCoefficients:
    """Read an inequality definition file; ``None`` gives the bundled default."""
    if path is None:
        text = resources.files("diwed").joinpath("data/default_inequality.json").read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise InvalidInputError(f"cannot read inequality file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"inequality file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError("inequality file must hold a JSON object")
    return PibiCoefficients.from_dict(data)


#: ``-2 S0 + 1/2 S00 - S01 + 1/2 S11``, the default inequality.
DEFAULT_INEQUALITY = PibiCoefficients(-2.0, 0.0, 0.5, -1.0, 0.5)


@dataclass(frozen=True)
class CorrelatorVector:
    """Symmetrized one- and two-body correlators of an ``n``-party experiment."""

    s0: float
    s1: float
    s00: float
    s01: float
    s11: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("party count must be positive")
        tol = 1e-9 * max(1, self.n * self.n)
        if abs(self.s0) > self.n + tol or abs(self.s1) > self.n + tol:
            raise InvalidInputError("one-body correlators exceed the party count")
        pairs = self.n * (self.n - 1)
        if max(abs(self.s00), abs(self.s01), abs(self.s11)) > pairs + tol:
            raise InvalidInputError("two-body correlators exceed n(n-1)")

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s00, self.s01, self.s11], dtype=float)


@dataclass(frozen=True)
class Partition:
    """Block sizes of a partition of ``n`` parties, every block at most ``k``."""

    sizes: tuple[int, ...]
    k: int

    def __post_init__(self):
        sizes = tuple(sorted((int(s) for s in self.sizes), reverse=True))
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise InvalidInputError("a partition needs at least one block")
        if sizes[-1] < 1:
            raise InvalidInputError("block sizes must be positive")
        if sizes[0] > self.k:
            raise InvalidInputError(f"block of size {sizes[0]} exceeds k={self.k}")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def m(self) -> int:
        return len(self.sizes)

    def offsets(self) -> list[int]:
        """First party index of every block (parties are assigned contiguously)."""
        out, pos = [], 0
        for s in self.sizes:
            out.append(pos)
            pos += s
        return out

    def label(self) -> str:
        return "+".join(map(str, self.sizes))

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> "Partition":
        sizes = [int(tok) for tok in text.replace(",", "+").split("+") if tok.strip()]
        return cls(tuple(sizes), k if k is not None else max(sizes))


@dataclass
class MeasurementSettings:
    """Measurement angles, one row ``(theta_0, theta_1)`` per party or per region."""

    angles: np.ndarray
    mode: str = "per-party"

    def __post_init__(self):
        if self.mode not in ("per-party", "per-region"):
            raise InvalidInputError(f"unknown settings mode {self.mode!r}")
        a = np.array(self.angles, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("measurement angles must be finite")
        self.angles = np.mod(a, 2 * np.pi)

    @property
    def units(self) -> int:
        return self.angles.shape[0]

    @classmethod
    def uniform(cls, units: int, theta0: float, theta1: float, mode: str = "per-party") -> "MeasurementSettings":
        return cls(np.tile([theta0, theta1], (units, 1)), mode)

    def expand(self, partition: Partition) -> "MeasurementSettings":
        """Per-party copy of per-region settings (identity for per-party)."""
        if self.mode == "per-party":
            return MeasurementSettings(self.angles.copy())
        if self.units != partition.m:
            raise InvalidInputError("per-region settings do not match the partition")
        return MeasurementSettings(np.repeat(self.angles, partition.sizes, axis=0))

    def copy(self) -> "MeasurementSettings":
        return MeasurementSettings(self.angles.copy(), self.mode)


@dataclass
class BellOperator:
    representation: str
    matrix: np.ndarray | None = None
    blocks: list = field(default_factory=list)
    coeffs: PibiCoefficients | None = None

    def __post_init__(self):
        if self.representation == "full-dense":
            if self.matrix is None:
                raise InvalidInputError("full-dense Bell operator needs a matrix")
            d = self.matrix.shape[0]
            if d & (d - 1):
                raise InvalidInputError("full-dense dimension must be a power of two")
            if np.max(np.abs(self.matrix - self.matrix.T), initial=0.0) > 1e-12:
                raise InvalidInputError("Bell operator is not symmetric")
        elif self.representation != "block-collective":
            raise InvalidInputError(f"unknown representation {self.representation!r}")

    @property
    def n(self) -> int:
        return int(round(math.log2(self.matrix.shape[0])))


def observable(theta: float) -> np.ndarray:
    """``cos(theta) sigma_x + sin(theta) sigma_z``."""
    if not np.isfinite(theta):
        raise InvalidInputError("observable angle must be finite")
    return math.cos(theta) * SIGMA_X + math.sin(theta) * SIGMA_Z


def evaluate_expression(coeffs: PibiCoefficients, corr: CorrelatorVector) -> float:
    return float(coeffs.as_array() @ corr.as_array())


class RegionOperators(NamedTuple):
    """``B_k`` and ``B_kl`` of one region, as sparse or dense matrices."""

    b0: object
    b1: object
    b00: object
    b01: object
    b11: object

    def combine(self, coeffs: PibiCoefficients, extra0: float = 0.0, extra1: float = 0.0):
        """``(alpha0+extra0) B0 + (alpha1+extra1) B1 + sum alpha_kl B_kl``."""
        a = coeffs.as_array()
        return (
            (a[0] + extra0) * self.b0
            + (a[1] + extra1) * self.b1
            + a[2] * self.b00
            + a[3] * self.b01
            + a[4] * self.b11
        )

    def todense(self) -> "RegionOperators":
        return RegionOperators(*(np.asarray(op.todense()) if sp.issparse(op) else op for op in self))


@lru_cache(maxsize=None)
def site_tables(s: int):
    """Bit-flip permutations and sigma_z signs for every site of ``s`` qubits.

    Site 0 is the most significant bit, matching ``kron`` ordering.
    """
    idx = np.arange(2**s)
    bits = (idx[None, :] >> (s - 1 - np.arange(s))[:, None]) & 1
    flips = idx[None, :] ^ (1 << (s - 1 - np.arange(s)))[:, None]
    return flips, 1.0 - 2.0 * bits


def collective_operator(thetas) -> sp.csr_matrix:
    """``sum_i cos(t_i) sigma_x^(i) + sin(t_i) sigma_z^(i)`` as a sparse matrix."""
    thetas = np.asarray(thetas, dtype=float)
    s = thetas.size
    d = 2**s
    flips, zs = site_tables(s)
    rows = np.concatenate([np.tile(np.arange(d), s), np.arange(d)])
    cols = np.concatenate([flips.ravel(), np.arange(d)])
    data = np.concatenate([np.repeat(np.cos(thetas), d), np.sin(thetas) @ zs])
    return sp.csr_matrix((data, (rows, cols)), shape=(d, d))


def sparse_region_operators(angles: np.ndarray, cap: int = DENSE_CAP) -> RegionOperators:
    """Region operators for per-party angles ``angles[i] = (theta_i0, theta_i1)``."""
    angles = np.asarray(angles, dtype=float).reshape(-1, 2)
    s = angles.shape[0]
    if s > cap:
        raise CapacityError(f"region of {s} parties exceeds the dense cap {cap}")
    b0 = collective_operator(angles[:, 0])
    b1 = collective_operator(angles[:, 1])
    eye = sp.identity(2**s, format="csr")
    b00 = b0 @ b0 - s * eye
    b11 = b1 @ b1 - s * eye
    same_site = float(np.sum(np.cos(angles[:, 0] - angles[:, 1])))
    b01 = 0.5 * (b0 @ b1 + b1 @ b0) - same_site * eye
    return RegionOperators(b0, b1, b00, b01, b11)


def region_operators(coeffs: PibiCoefficients | None, settings: MeasurementSettings, block_size: int,
                     offset: int = 0, cap: int = DENSE_CAP) -> RegionOperators:
    """Dense ``B_k^A`` and ``B_kl^A`` for the block of parties ``offset .. offset+block_size-1``.

    ``coeffs`` is accepted for interface symmetry; the operators themselves do
    not depend on it.
    """
    if block_size > cap:
        raise CapacityError(f"block of {block_size} parties exceeds the dense cap {cap}")
    angles = settings.angles[offset:offset + block_size]
    if angles.shape[0] != block_size:
        raise InvalidInputError("settings do not cover the requested block")
    return sparse_region_operators(angles, cap).todense()


def build_bell_operator(coeffs: PibiCoefficients, settings: MeasurementSettings, n: int,
                        cap: int = DENSE_CAP) -> BellOperator:
    """The full ``2^n``-dimensional Bell operator for per-party settings."""
    if n > cap:
        raise CapacityError(f"n={n} exceeds the dense cap {cap}; use the symmetric mode")
    if settings.mode != "per-party" or settings.units != n:
        raise InvalidInputError("build_bell_operator needs per-party settings for all n parties")
    ops = sparse_region_operators(settings.angles, cap)
    mat = np.asarray(ops.combine(coeffs).todense())
    mat = 0.5 * (mat + mat.T)
    return BellOperator("full-dense", mat, coeffs=coeffs)


def product_state_correlators(bloch: np.ndarray, settings: MeasurementSettings) -> CorrelatorVector:
    """Correlators of a product of single-qubit states with x-z Bloch vectors ``bloch[i]``."""
    bloch = np.asarray(bloch, dtype=float).reshape(-1, 2)
    n = bloch.shape[0]
    u0 = np.column_stack([np.cos(settings.angles[:, 0]), np.sin(settings.angles[:, 0])])
    u1 = np.column_stack([np.cos(settings.angles[:, 1]), np.sin(settings.angles[:, 1])])
    m0 = np.sum(u0 * bloch, axis=1)
    m1 = np.sum(u1 * bloch, axis=1)
    s0, s1 = m0.sum(), m1.sum()
    s00 = s0 * s0 - np.sum(m0 * m0)
    s11 = s1 * s1 - np.sum(m1 * m1)
    s01 = s0 * s1 - np.sum(m0 * m1)
    return CorrelatorVector(s0, s1, s00, s01, s11, n)
