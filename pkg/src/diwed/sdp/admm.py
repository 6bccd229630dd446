"""Alternating-direction augmented Lagrangian on the dual (Wen, Goldfarb and Yin).

Each iteration is one sparse solve with the prefactored ``A A^T`` plus one
eigendecomposition per block, so memory stays linear in the problem size.
Slower to converge than the interior-point engine, but it is the only
option once pair blocks reach 128-256.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as la

from diwed.sdp.linalg import smat, svec
from diwed.sdp.problem import SdpProblem, SdpSolution, certified_dual
from diwed.seesaw import NumericalError

log = logging.getLogger(__name__)


def _eigh(V):
    """``syevd`` is fastest but can fail to converge on clustered spectra; retry with other drivers."""
    for driver in ("evd", "evr", "ev"):
        try:
            return la.eigh(V, driver=driver, check_finite=False)
        except la.LinAlgError:
            log.debug("eigh driver %s failed, retrying", driver)
    raise NumericalError("block eigendecomposition failed with every LAPACK driver", {"dim": V.shape[0]})


def _split_psd(v, slices, dims):
    """``(svec V_+, svec V_-)`` per block, with ``V = V_+ - V_-``."""
    pos, neg = np.empty_like(v), np.empty_like(v)
    for sl, d in zip(slices, dims):
        V = smat(v[sl], d)
        w, Q = _eigh(V)
        # build whichever part has lower rank, the other follows by subtraction
        k = int(np.searchsorted(w, 0.0))
        if k <= d - k:
            Qn = Q[:, :k] * np.sqrt(-w[:k])
            N = Qn @ Qn.T
            P = V + N
        else:
            Qp = Q[:, k:] * np.sqrt(w[k:])
            P = Qp @ Qp.T
            N = P - V
        pos[sl] = svec(P)
        neg[sl] = svec(N)
    return pos, neg


def solve_admm(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 20000, warm: dict | None = None,
               check_every: int = 10, mu: float | None = None) -> SdpSolution:
    cons = problem.constraints
    A, b = cons.A, cons.b
    slices, dims = cons.slices(), problem.dims
    cscale = max(1.0, float(np.linalg.norm(problem.c)))
    c = problem.c / cscale
    lu = cons.normal_solver
    if warm:
        x, s = warm["x"].copy(), warm["s"] / cscale
        mu = warm.get("mu", 1.0) if mu is None else mu
    else:
        x, s = problem.maximally_mixed(), np.zeros_like(c)
        mu = 1.0 if mu is None else mu
    y = np.zeros(problem.m)
    nb, nc = np.linalg.norm(b), np.linalg.norm(c)
    status, it, streak = "max_iter", 0, 0
    res = {}
    for it in range(1, max_iter + 1):
        y = lu.solve(mu * (b - A @ x) + A @ (c - s))
        v = c - A.T @ y - mu * x
        if not np.isfinite(v).all():
            raise NumericalError("ADMM iterate is not finite", {"iteration": it, "mu": mu})
        s, neg = _split_psd(v, slices, dims)
        x = neg / mu
        if it % check_every:
            continue
        pinf = float(np.linalg.norm(A @ x - b) / (1 + nb))
        dinf = float(np.linalg.norm(A.T @ y + s - c) / (1 + nc))
        pobj, dobj = float(c @ x), float(b @ y)
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        res = {"primal_infeasibility": pinf, "dual_infeasibility": dinf, "relative_gap": gap}
        if max(pinf, dinf, gap) <= tol:
            status = "optimal"
            break
        # keep the two residuals balanced
        ratio = pinf / max(dinf, 1e-300)
        streak = streak + 1 if ratio > 2 or ratio < 0.5 else 0
        if streak >= 3:
            mu = min(mu * 2, 1e4) if ratio > 1 else max(mu / 2, 1e-4)
            streak = 0
    y_true = cscale * y
    cert = certified_dual(problem, y_true)
    pobj, dobj = float(problem.c @ x), float(b @ y_true)
    log.debug("admm: %s after %d iterations, primal %.10g certified %.10g", status, it, pobj, cert)
    return SdpSolution(pobj, dobj, cert, x, y_true, cscale * s, pobj - cert, status, it, "admm", res,
                       state={"x": x, "s": cscale * s, "mu": mu})
