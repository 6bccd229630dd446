"""Entanglement-depth witness from collective spin moments.

For the default inequality with settings ``m0, m1 = cos(phi) b +/- sin(phi) a``
in the a-b plane, the per-particle Bell value only needs the Rabi contrast
``C_b = 2<J_b>/n``, the squeezed second moment ``zeta_a^2 = 4<J_a^2>/n`` and
``<J_a>``:

    I/n = -2 cos(phi) C_b - (4 sin(phi)/n) <J_a> + 2 sin(phi)^2 (zeta_a^2 - 1)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from diwed.core import DEFAULT_INEQUALITY, InvalidInputError, PibiCoefficients

PHI_GRID = 10_000
MONOTONE_TOL = 1e-7


@dataclass(frozen=True)
class CollectiveDataPoint:
    n: int
    c_b: float
    zeta2: float
    sigma_cb: float = 0.0
    sigma_zeta2: float = 0.0
    mean_ja: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("n must be positive")
        if not abs(self.c_b) <= 1:
            raise InvalidInputError(f"c_b={self.c_b} outside [-1, 1]")
        if not self.zeta2 >= 0:
            raise InvalidInputError(f"zeta2={self.zeta2} must be nonnegative")
        if self.sigma_cb < 0 or self.sigma_zeta2 < 0:
            raise InvalidInputError("standard errors must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "CollectiveDataPoint":
        missing = [key for key in ("n", "c_b", "zeta2") if key not in data]
        if missing:
            raise InvalidInputError(f"data point is missing {', '.join(missing)}")
        return cls(int(data["n"]), float(data["c_b"]), float(data["zeta2"]),
                   float(data.get("sigma_cb", 0.0)), float(data.get("sigma_zeta2", 0.0)),
                   float(data.get("mean_ja", 0.0)))

    @classmethod
    def load(cls, path) -> "CollectiveDataPoint":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
        except OSError as exc:
            raise InvalidInputError(f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)

    def shifted(self, sign: int) -> "CollectiveDataPoint":
        """Move one standard error towards (+1) or away from (-1) violation, clipped to the domain."""
        c_b = float(np.clip(self.c_b + sign * self.sigma_cb, -1.0, 1.0))
        zeta2 = max(0.0, self.zeta2 - sign * self.sigma_zeta2)
        return CollectiveDataPoint(self.n, c_b, zeta2, self.sigma_cb, self.sigma_zeta2, self.mean_ja)


@dataclass
class BoundEntry:
    value: float
    source: str = "unknown"
    kind: str = "upper"


@dataclass
class BoundTable:
    """``k -> beta_k`` at fixed ``n``, nonincreasing in ``k``."""

    n: int
    entries: dict = field(default_factory=dict)
    inequality: PibiCoefficients = DEFAULT_INEQUALITY

    def __post_init__(self):
        self.entries = {int(k): (v if isinstance(v, BoundEntry) else BoundEntry(float(v)))
                        for k, v in sorted(self.entries.items())}
        prev = None
        for k, e in self.entries.items():
            if not 1 <= k <= self.n:
                raise InvalidInputError(f"k={k} outside 1..{self.n}")
            if prev is not None and e.value > prev + MONOTONE_TOL * max(1.0, abs(prev)):
                raise InvalidInputError(f"bound table is not nonincreasing in k at k={k}")
            prev = e.value

    def value(self, k: int) -> float:
        return self.entries[k].value

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "inequality": self.inequality.to_dict(),
            "bounds": [{"k": k, "beta": e.value, "source": e.source, "kind": e.kind} for k, e in self.entries.items()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundTable":
        try:
            n = int(data["n"])
            rows = data["bounds"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError("bound table needs 'n' and 'bounds'") from exc
        ineq = PibiCoefficients.from_dict(data["inequality"]) if "inequality" in data else DEFAULT_INEQUALITY
        entries = {int(r["k"]): BoundEntry(float(r["beta"]), r.get("source", "unknown"), r.get("kind", "upper"))
                   for r in rows}
        return cls(n, entries, ineq)

    @classmethod
    def load(cls, path) -> "BoundTable":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
        except OSError as exc:
            raise InvalidInputError(f"cannot read {path}: {exc}") from exc

    @staticmethod
    def envelope(values: dict) -> dict:
        """Running minimum over increasing ``k``; a k-producible bound also bounds every larger k."""
        out, best = {}, math.inf
        for k in sorted(values):
            best = min(best, values[k])
            out[k] = best
        return out


def collective_value(n: int, phi, c_b: float, zeta2: float, mean_ja: float = 0.0):
    """Per-particle value of the default inequality from collective moments."""
    phi = np.asarray(phi, dtype=float)
    out = -2 * np.cos(phi) * c_b - 4 * np.sin(phi) * mean_ja / n + 2 * np.sin(phi) ** 2 * (zeta2 - 1)
    return float(out) if out.ndim == 0 else out


def _refine(fun, grid, vals, i, maximize=False):
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    sign = -1.0 if maximize else 1.0
    out = minimize_scalar(lambda t: sign * fun(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    cand = sign * out.fun
    better = cand > vals[i] if maximize else cand < vals[i]
    return (cand, out.x) if better else (vals[i], grid[i])


def critical_zeta2(beta_over_n: float, c_b: float, phi_points: int = PHI_GRID) -> float:
    """``sup_phi 1 + (beta/n + 2 cos(phi) c_b) / (2 sin(phi)^2)``; NaN when it is not positive."""
    grid = np.linspace(0, np.pi, phi_points + 2)[1:-1]

    def f(t):
        return 1 + (beta_over_n + 2 * np.cos(t) * c_b) / (2 * np.sin(t) ** 2)

    vals = f(grid)
    i = int(np.argmax(vals))
    best, _ = _refine(f, grid, vals, i, maximize=True)
    return float(best) if best > 0 else float("nan")


def depth_boundary(k: int, beta_k: float, n: int, cb_grid, phi_points: int = PHI_GRID) -> np.ndarray:
    """Critical ``zeta2`` over ``cb_grid``; points strictly below violate the k-producible bound."""
    return np.array([critical_zeta2(beta_k / n, float(c), phi_points) for c in np.asarray(cb_grid, dtype=float)])


def classical_boundary(c_b):
    """Closed form of the k=1 boundary for the default inequality (beta/n = -2)."""
    c = np.abs(np.asarray(c_b, dtype=float))
    return 0.5 * (1 - np.sqrt(1 - c**2))


def min_margin(point: CollectiveDataPoint, beta_k: float, phi_points: int = PHI_GRID):
    """``(min_phi I(phi)/n - beta_k/n, argmin phi)``; negative means violation."""
    grid = np.linspace(0, np.pi, phi_points + 1)

    def g(t):
        return collective_value(point.n, t, point.c_b, point.zeta2, point.mean_ja) - beta_k / point.n

    vals = g(grid)
    i = int(np.argmin(vals))
    return _refine(g, grid, vals, i)


@dataclass
class DepthCertificate:
    depth: int
    certified: bool
    largest_violated_k: int | None
    margins: dict
    depth_pessimistic: int
    depth_optimistic: int
    bound_kinds: dict

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "certified": self.certified,
            "largest_violated_k": self.largest_violated_k,
            "margins": {str(k): float(v) for k, v in self.margins.items()},
            "depth_minus_1sigma": self.depth_pessimistic,
            "depth_plus_1sigma": self.depth_optimistic,
            "bound_kinds": {str(k): v for k, v in self.bound_kinds.items()},
            "rigorous": all(v == "lower" for v in self.bound_kinds.values()),
        }


def _depth(point, table, phi_points):
    margins = {k: min_margin(point, table.value(k), phi_points)[0] for k in table.entries}
    violated = [k for k, m in margins.items() if m < 0]
    top = max(violated) if violated else None
    return (top + 1 if top is not None else 1), top, margins


def certify_depth(point: CollectiveDataPoint, table: BoundTable, phi_points: int = PHI_GRID) -> DepthCertificate:
    """Certified depth ``k + 1`` for the largest violated ``beta_k``, also at the point shifted by one standard error."""
    if point.n != table.n:
        raise InvalidInputError(f"data point has n={point.n} but the bound table has n={table.n}")
    if table.inequality != DEFAULT_INEQUALITY:
        raise InvalidInputError("the collective witness is derived for the default inequality only")
    depth, top, margins = _depth(point, table, phi_points)
    lo, _, _ = _depth(point.shifted(-1), table, phi_points)
    hi, _, _ = _depth(point.shifted(+1), table, phi_points)
    kinds = {k: e.kind for k, e in table.entries.items()}
    return DepthCertificate(depth, top is not None, top, margins, lo, hi, kinds)
