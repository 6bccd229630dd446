"""Command-line interface: ``diwed classical | bounds | asymptotic | certify | curves``.

Exit codes: 0 success, 1 numerical non-convergence, 2 input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from diwed import __version__
from diwed.core import CapacityError, InvalidInputError, Partition, load_inequality
from diwed.io import (
    asymptotic_row,
    bound_row,
    load_bound_table,
    write_asymptotic_csv,
    write_bounds_csv,
    write_curves_csv,
    write_json,
)
from diwed.seesaw import NumericalError, SeesawOptions

log = logging.getLogger("diwed")

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 1, 2


def int_list(text: str) -> list[int]:
    """``"5"``, ``"2,4,8"`` or an inclusive range ``"2-8"``."""
    out = []
    try:
        for tok in text.split(","):
            tok = tok.strip()
            if "-" in tok[1:]:
                lo, hi = tok.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif tok:
                out.append(int(tok))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


def grid_spec(text: str) -> np.ndarray:
    """``start:stop:num`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            return np.linspace(float(lo), float(hi), int(num))
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:num or a list") from None


def _partitions(text: str):
    if text in ("balanced", "exhaustive"):
        return text
    return [tuple(Partition.parse(p).sizes) for p in text.split(",")]


# --- classical --------------------------------------------------------------

def cmd_classical(args) -> int:
    from diwed.lhv import classical_bound

    coeffs = load_inequality(args.inequality)
    records = []
    for n in args.n:
        value, counts = classical_bound(coeffs, n)
        records.append({"n": n, "beta_C": value, "counts": list(counts.as_tuple())})
    out = {"inequality": coeffs.to_dict(), "inequality_file": args.inequality, "results": records}
    write_json(out, args.out)
    return EXIT_OK


# --- bounds -----------------------------------------------------------------

def _bound_task(job):
    """One ``(n, k)`` row; runs in a worker process."""
    coeffs, n, k, mode, opts, search, lower, sdpa_dir = job
    from diwed.sdp import build_relaxation, dump_sdpa, lower_bound
    from diwed.sdp.solver import ACCEPTED
    from diwed.seesaw import upper_bound
    from diwed.spin import symmetric_upper_bound

    try:
        if mode == "symmetric":
            res = symmetric_upper_bound(coeffs, n, k, opts)
        else:
            res = upper_bound(coeffs, n, k, opts)
    except CapacityError as exc:
        return {"n": n, "k": k, "mode": mode, "status": f"capacity: {exc}"}, True
    converged = bool(res.metadata.get("converged", True))
    status = "ok" if converged else "seesaw-not-converged"
    if lower and mode == "full":
        # per-party see-saw angles need not be equal inside a region; seed from the per-region optimum instead
        try:
            low = lower_bound(coeffs, n, k, partitions=opts.partitions, search=search, options=opts)
        except CapacityError as exc:
            status = f"capacity: {exc}"
        else:
            res.beta_lower = low.beta_lower
            if set(low.metadata["solver_status"]) - set(ACCEPTED):
                status = "sdp-not-optimal" if converged else status
                converged = False
            if sdpa_dir is not None:
                problem = build_relaxation(coeffs, low.settings, low.partition)
                dump_sdpa(problem, Path(sdpa_dir) / f"relaxation_n{n}_k{k}.dat-s")
    return bound_row(res, status), converged


def cmd_bounds(args) -> int:
    from diwed.sdp import ThetaSearch

    coeffs = load_inequality(args.inequality)
    opts = SeesawOptions(restarts=args.restarts, structured=args.structured, seed=args.seed,
                         partitions=_partitions(args.partitions))
    search = ThetaSearch(perturbations=args.perturbations, grid=args.theta_grid, seed=args.seed, tol=args.tol)
    if args.sdpa_dir:
        Path(args.sdpa_dir).mkdir(parents=True, exist_ok=True)
    jobs = []
    for n in args.n:
        ks = [k for k in (args.k or range(1, n + 1)) if k <= n]
        for k in ks:
            jobs.append((coeffs, n, k, args.mode, opts, search, not args.no_lower, args.sdpa_dir))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_bound_task, jobs))
    else:
        results = [_bound_task(job) for job in jobs]
    rows = [r for r, _ in results]
    for row in rows:
        log.info("n=%s k=%s beta_U=%s beta_L=%s %s", row["n"], row["k"], row.get("beta_U"), row.get("beta_L"),
                 row["status"])
    if args.out and str(args.out).endswith(".json"):
        write_json({"inequality": coeffs.to_dict(), "rows": rows}, args.out)
    else:
        write_bounds_csv(args.out, rows)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_NUMERICAL


# --- asymptotic -------------------------------------------------------------

def _asymptotic_task(job):
    from diwed.asymptotic import optimize_asymptotic

    coeffs, n, m, restarts, seed, start, tol = job
    return asymptotic_row(optimize_asymptotic(coeffs, n, m, restarts=restarts, seed=seed, start=start, tol=tol))


def cmd_asymptotic(args) -> int:
    from diwed.asymptotic import single_block_seed

    coeffs = load_inequality(args.inequality)
    jobs = []
    for n in args.n:
        start = single_block_seed(coeffs, n)[:3]
        jobs.extend((coeffs, n, m, args.restarts, args.seed, start, args.tol) for m in args.m if m <= n)
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_asymptotic_task, jobs))
    else:
        rows = [_asymptotic_task(job) for job in jobs]
    if args.out and str(args.out).endswith(".json"):
        write_json({"inequality": coeffs.to_dict(), "rows": rows}, args.out)
    else:
        write_asymptotic_csv(args.out, rows)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NUMERICAL


# --- certify / curves ---------------------------------------------------------

def cmd_certify(args) -> int:
    from diwed.witness import CollectiveDataPoint, certify_depth

    point = CollectiveDataPoint.load(args.data)
    table = load_bound_table(args.bounds, point.n)
    cert = certify_depth(point, table)
    report = cert.to_dict()
    report["data"] = {"n": point.n, "c_b": point.c_b, "zeta2": point.zeta2,
                      "sigma_cb": point.sigma_cb, "sigma_zeta2": point.sigma_zeta2, "mean_ja": point.mean_ja}
    if cert.certified:
        print(f"certified entanglement depth: {cert.depth} (violates the k={cert.largest_violated_k} bound)")
    else:
        print("no certification: the point violates none of the supplied bounds (depth 1)")
    print(f"1-sigma range: depth {cert.depth_pessimistic} .. {cert.depth_optimistic}")
    for k, margin in cert.margins.items():
        print(f"  k={k:<4d} margin {margin:+.6e} ({table.entries[k].kind} bound)")
    if not report["rigorous"]:
        print("note: some bounds are variational upper bounds, so the depth claim is not device-independent proof")
    if args.out:
        write_json(report, args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    from diwed.witness import depth_boundary

    table = load_bound_table(args.bounds, args.n[0] if args.n else None)
    ks = args.k or list(table.entries)
    missing = [k for k in ks if k not in table.entries]
    if missing:
        raise InvalidInputError(f"bound table has no entry for k={missing}")
    curves = {k: depth_boundary(k, table.value(k), table.n, args.cb_grid) for k in ks}
    write_curves_csv(args.out, curves, args.cb_grid)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diwed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_required=True):
        p.add_argument("--inequality", metavar="PATH", help="JSON coefficient file (default: bundled inequality)")
        p.add_argument("--n", type=int_list, required=n_required, help="party count(s): 8, 2,4,8 or 2-8")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", metavar="PATH", help="output file (stdout if omitted)")

    p = sub.add_parser("classical", help="classical bound by strategy-count enumeration")
    common(p)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("bounds", help="see-saw upper and SDP lower bounds on beta_k")
    common(p)
    p.add_argument("--k", "--k-list", dest="k", type=int_list, help="producibility k value(s); default all")
    p.add_argument("--mode", choices=("full", "symmetric"), default="full")
    p.add_argument("--partitions", default="balanced", help="balanced, exhaustive or a list like 4+4,3+3+2")
    p.add_argument("--tol", type=float, default=1e-8, help="SDP solver tolerance")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--structured", type=int, default=12, help="uniform-angle see-saw starts")
    p.add_argument("--perturbations", type=int, default=20, help="theta perturbations in the lower-bound search")
    p.add_argument("--theta-grid", action="store_true", help="also scan uniform (0, delta) settings")
    p.add_argument("--no-lower", action="store_true", help="skip the SDP lower bound")
    p.add_argument("--sdpa-dir", metavar="DIR", help="dump the best relaxation of every row in SDPA format")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("asymptotic", help="Gaussian superpositions of Dicke states in m equal blocks")
    common(p)
    p.add_argument("--m", "--m-list", dest="m", type=int_list, default=list(range(1, 11)))
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-12, help="Nelder-Mead relative value tolerance")
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("certify", help="entanglement depth from a collective-spin data point")
    p.add_argument("--data", required=True, metavar="PATH", help="data-point JSON")
    p.add_argument("--bounds", required=True, metavar="PATH", help="bound table JSON or bounds CSV")
    p.add_argument("--out", metavar="PATH", help="JSON report")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("curves", help="k-producible boundary curves in the (c_b, zeta2) plane")
    p.add_argument("--bounds", required=True, metavar="PATH", help="bound table JSON or bounds CSV")
    p.add_argument("--n", type=int_list, help="pick n when a bounds CSV covers several")
    p.add_argument("--k", "--k-list", dest="k", type=int_list)
    p.add_argument("--cb-grid", type=grid_spec, default=grid_spec("0:1:101"), help="start:stop:num or a list")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"diwed: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"diwed: numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
