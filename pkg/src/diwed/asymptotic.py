"""Products of Gaussian superpositions of Dicke states.

Each region carries amplitudes ``psi_m ~ exp(-(m - mu)^2 / (4 sigma))`` over its
``s + 1`` Dicke states (renormalized after truncation to ``0..s``) and two
shared measurement angles. The Bell value is evaluated exactly through the
collective spin moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from diwed.core import InvalidInputError, Partition, PibiCoefficients
from diwed.seesaw import SeesawOptions
from diwed.spin import block_moments, symmetric_value


@dataclass
class GaussianDickeParams:
    mu: np.ndarray
    sigma: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        self.angles = np.asarray(self.angles, dtype=float).reshape(-1, 2)
        if not (self.mu.shape == self.sigma.shape and self.angles.shape[0] == self.mu.size):
            raise InvalidInputError("mu, sigma and angles must describe the same number of regions")
        if np.any(self.sigma <= 0) or not np.all(np.isfinite(self.sigma)):
            raise InvalidInputError("sigma must be positive")

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(), "angles": self.angles.tolist()}


@dataclass
class AsymptoticResult:
    n: int
    m: int
    partition: Partition
    value: float
    params: GaussianDickeParams
    converged: bool
    evaluations: int
    restarts: list = field(default_factory=list)

    @property
    def per_particle(self) -> float:
        return self.value / self.n


def gaussian_amplitudes(s: int, mu: float, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise InvalidInputError("sigma must be positive")
    if s < 0:
        raise InvalidInputError("block size must be nonnegative")
    logw = -((np.arange(s + 1) - mu) ** 2) / (4 * sigma)
    w = np.exp(logw - logw.max())
    return w / np.linalg.norm(w)


def gaussian_moments(s: int, mu: float, sigma: float) -> np.ndarray:
    return block_moments(gaussian_amplitudes(s, mu, sigma), s)


def asymptotic_value(coeffs: PibiCoefficients, partition: Partition, params: GaussianDickeParams) -> float:
    if params.mu.size != partition.m:
        raise InvalidInputError("parameters do not match the number of regions")
    cache = {}
    rows = []
    for s, mu, sig in zip(partition.sizes, params.mu, params.sigma):
        key = (s, float(mu), float(sig))
        if key not in cache:
            cache[key] = gaussian_moments(s, mu, sig)
        rows.append(cache[key])
    return symmetric_value(coeffs, np.array(rows), np.array(partition.sizes), params.angles)


def ansatz_partition(n: int, m: int) -> Partition:
    """``m`` equal blocks, or ``m - 1`` blocks of ``ceil(n/m)`` plus a remainder block."""
    if not 1 <= m <= n:
        raise InvalidInputError("need 1 <= m <= n")
    if n % m == 0:
        return Partition((n // m,) * m, n // m)
    q = math.ceil(n / m)
    rest = n - (m - 1) * q
    if rest <= 0:
        raise InvalidInputError(f"n={n} cannot be split into {m - 1} blocks of {q} plus a nonempty remainder")
    return Partition(tuple([q] * (m - 1) + [rest]), q)


def single_block_seed(coeffs: PibiCoefficients, n: int, options: SeesawOptions | None = None):
    """``(mu/n, sigma/n, angles)`` fitted to the unrestricted symmetric optimum at size ``n``."""
    from diwed.spin import optimize_symmetric_partition

    options = options or SeesawOptions(restarts=3)
    res = optimize_symmetric_partition(coeffs, Partition((n,), n), options)
    p = res.states[0] ** 2
    idx = np.arange(n + 1)
    mean = float(p @ idx)
    var = float(p @ (idx - mean) ** 2)
    return mean / n, max(var, 1e-6) / n, res.settings.angles[0].copy(), res.value


def optimize_asymptotic(coeffs: PibiCoefficients, n: int, m: int, restarts: int = 10, seed: int = 0,
                        start=None, maxiter: int = 4000, tol: float = 1e-12) -> AsymptoticResult:
    """Minimize the ansatz over parameters shared by identical blocks.

    ``start`` is ``(mu/s, sigma/s, angles)``; by default it comes from the
    single-block symmetric optimum at size ``n``.
    """
    part = ansatz_partition(n, m)
    sizes = np.array(part.sizes)
    remainder = part.m > 1 and sizes[-1] != sizes[0]
    if start is None:
        start = single_block_seed(coeffs, n)[:3]
    mu_frac, sig_frac, ang = start
    q = sizes[0]
    x0 = [mu_frac * q, math.log(sig_frac * q), ang[0], ang[1]]
    if remainder:
        r = sizes[-1]
        x0 += [mu_frac * r, math.log(sig_frac * r)]
    x0 = np.array(x0)

    def unpack(x):
        mu = np.full(part.m, x[0])
        sig = np.full(part.m, math.exp(x[1]))
        if remainder:
            mu[-1], sig[-1] = x[4], math.exp(x[5])
        return GaussianDickeParams(mu, sig, np.tile(x[2:4], (part.m, 1)))

    def objective(x):
        if not np.all(np.isfinite(x)) or abs(x[1]) > 50 or (remainder and abs(x[5]) > 50):
            return np.inf
        return asymptotic_value(coeffs, part, unpack(x))

    rng = np.random.default_rng(np.random.SeedSequence([seed, n, m, 2]))
    best, runs, nfev = None, [], 0
    for rep in range(restarts):
        x = x0.copy()
        if rep:
            jitter = np.array([0.1 * q, 0.5, 0.3, 0.3] + ([0.1 * sizes[-1], 0.5] if remainder else []))
            x = x + jitter * rng.standard_normal(x.size)
        out = minimize(objective, x, method="Nelder-Mead",
                       options={"maxiter": maxiter, "xatol": 1e-10, "fatol": tol * max(1.0, n), "adaptive": True})
        nfev += out.nfev
        runs.append({"value": float(out.fun), "converged": bool(out.success)})
        if best is None or out.fun < best.fun:
            best = out
    params = unpack(best.x)
    params.angles = np.mod(params.angles, 2 * np.pi)
    return AsymptoticResult(n, m, part, float(best.fun), params, bool(best.success), nfev, runs)
