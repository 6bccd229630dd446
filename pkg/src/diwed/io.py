"""CSV and JSON formats of the command-line tools.

Floats are written with ``repr`` so every value re-parses bit-identically.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from diwed.core import InvalidInputError, Partition
from diwed.seesaw import BoundResult
from diwed.witness import BoundEntry, BoundTable

BOUNDS_COLUMNS = ("n", "k", "beta_U", "beta_L", "gap", "partition", "mode", "status")
CURVE_COLUMNS = ("k", "c_b", "zeta2_critical")
ASYMPTOTIC_COLUMNS = ("n", "m", "k", "beta_estimate", "per_particle", "mu", "sigma", "theta0", "theta1", "converged")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _opt_float(text: str):
    return None if text == "" else float(text)


def write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def _write_rows(path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_quote(fmt(row.get(c))) for c in columns))
    text = "\n".join(lines) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def _quote(cell: str) -> str:
    return f'"{cell}"' if ("," in cell or '"' in cell) else cell


def _read_rows(path, columns):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in columns if c not in (reader.fieldnames or [])]
            if missing:
                raise InvalidInputError(f"{path}: missing column(s) {', '.join(missing)}")
            return list(reader)
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc


def bound_row(res: BoundResult, status: str = "ok") -> dict:
    return {
        "n": res.n,
        "k": res.k,
        "beta_U": res.beta_upper,
        "beta_L": res.beta_lower,
        "gap": res.gap,
        "partition": res.partition.label() if res.partition is not None else None,
        "mode": res.mode,
        "status": status,
    }


def write_bounds_csv(path, rows) -> None:
    _write_rows(path, BOUNDS_COLUMNS, rows)


def read_bounds_csv(path) -> list[BoundResult]:
    out = []
    for row in _read_rows(path, BOUNDS_COLUMNS[:7]):
        n, k = int(row["n"]), int(row["k"])
        part = Partition.parse(row["partition"], k) if row["partition"] else None
        res = BoundResult(n=n, k=k, beta_upper=_opt_float(row["beta_U"]), beta_lower=_opt_float(row["beta_L"]),
                          partition=part, mode=row["mode"], metadata={"status": row.get("status", "ok")})
        out.append(res)
    return out


def table_from_results(results, n: int | None = None) -> BoundTable:
    """Bound table at one ``n``: beta_L where certified, else beta_U.

    A running minimum over ``k`` restores monotonicity; it keeps upper bounds
    valid and only weakens lower bounds, so certification stays conservative.
    """
    ns = sorted({r.n for r in results})
    if n is None:
        if len(ns) != 1:
            raise InvalidInputError(f"bounds cover several n ({ns}); pick one")
        n = ns[0]
    chosen = {}
    for r in results:
        if r.n != n:
            continue
        if r.beta_lower is not None:
            chosen[r.k] = (r.beta_lower, "lower", r.mode)
        elif r.beta_upper is not None:
            chosen[r.k] = (r.beta_upper, "upper", r.mode)
    if not chosen:
        raise InvalidInputError(f"no bounds at n={n}")
    env = BoundTable.envelope({k: v[0] for k, v in chosen.items()})
    entries = {k: BoundEntry(env[k], chosen[k][2], chosen[k][1]) for k in chosen}
    return BoundTable(n, entries)


def load_bound_table(path, n: int | None = None) -> BoundTable:
    """A bound table from JSON (native format) or a bounds CSV."""
    if str(path).endswith(".csv"):
        return table_from_results(read_bounds_csv(path), n)
    table = BoundTable.load(path)
    if n is not None and table.n != n:
        raise InvalidInputError(f"bound table is for n={table.n}, not {n}")
    return table


def write_curves_csv(path, curves: dict, cb_grid) -> None:
    rows = [{"k": k, "c_b": float(c), "zeta2_critical": float(z)}
            for k, zs in curves.items() for c, z in zip(cb_grid, zs)]
    _write_rows(path, CURVE_COLUMNS, rows)


def read_curves_csv(path) -> dict:
    """``k -> (c_b list, zeta2 list)``."""
    out = {}
    for row in _read_rows(path, CURVE_COLUMNS):
        cb, z = out.setdefault(int(row["k"]), ([], []))
        cb.append(float(row["c_b"]))
        z.append(float(row["zeta2_critical"]))
    return out


def asymptotic_row(res) -> dict:
    p = res.params
    return {
        "n": res.n,
        "m": res.m,
        "k": res.partition.k,
        "beta_estimate": res.value,
        "per_particle": res.per_particle,
        "mu": float(p.mu[0]),
        "sigma": float(p.sigma[0]),
        "theta0": float(p.angles[0, 0]),
        "theta1": float(p.angles[0, 1]),
        "converged": res.converged,
    }


def write_asymptotic_csv(path, rows) -> None:
    _write_rows(path, ASYMPTOTIC_COLUMNS, rows)


def read_asymptotic_csv(path) -> list[dict]:
    out = []
    for row in _read_rows(path, ASYMPTOTIC_COLUMNS):
        rec = {c: float(row[c]) for c in ("beta_estimate", "per_particle", "mu", "sigma", "theta0", "theta1")}
        rec.update(n=int(row["n"]), m=int(row["m"]), k=int(row["k"]), converged=row["converged"] == "True")
        out.append(rec)
    return out
