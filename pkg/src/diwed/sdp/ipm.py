"""Infeasible primal-dual path-following with Nesterov-Todd scaling.

Mehrotra predictor-corrector; the Schur complement ``M = sum_j A_j (W_j (x) W_j) A_j^T``
is formed densely, so this engine suits problems with a few thousand
constraints and blocks up to roughly 64.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as la

from diwed.sdp.linalg import skron, smat, svec
from diwed.sdp.problem import SdpProblem, SdpSolution, certified_dual

log = logging.getLogger(__name__)

NEAR_OPTIMAL = 100.0


class _Block:
    __slots__ = ("X", "S", "L", "G", "Ginv", "W", "lam")


def _nt_scaling(X, S):
    blk = _Block()
    blk.X, blk.S = X, S
    L = la.cholesky(X, lower=True)
    R = la.cholesky(S, lower=True)
    _, sv, Vt = la.svd(R.T @ L)
    G = (L @ Vt.T) / np.sqrt(sv)
    blk.L = L
    blk.G = G
    blk.Ginv = (np.sqrt(sv)[:, None] * Vt) @ la.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    blk.W = G @ G.T
    blk.lam = sv
    return blk


def _max_step(L, D):
    """Largest ``a`` with ``L L^T + a D >= 0``."""
    T = la.solve_triangular(L, D, lower=True)
    T = la.solve_triangular(L, T.T, lower=True)
    lo = la.eigvalsh(0.5 * (T + T.T))[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _factor(M):
    """Cholesky of the Schur complement, with a growing diagonal shift once it loses definiteness."""
    scale = float(np.max(np.diag(M)))
    for shift in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            return la.cho_factor(M + shift * scale * np.eye(M.shape[0]), lower=True, check_finite=False)
        except la.LinAlgError:
            continue
    raise la.LinAlgError("Schur complement is not positive definite")


def solve_ipm(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 100) -> SdpSolution:
    """Statuses: ``optimal``, ``near-optimal`` (breakdown within ``NEAR_OPTIMAL * tol``), ``max_iter``, ``numerical``."""
    cons = problem.constraints
    A, b, c = cons.A, cons.b, problem.c
    slices = cons.slices()
    dims = problem.dims
    nu = float(sum(dims))
    x = problem.maximally_mixed()
    y = np.zeros(problem.m)
    Cb = problem.objective_blocks()
    s = problem.stack([(1.0 + np.linalg.norm(Cj)) * np.eye(d) for Cj, d in zip(Cb, dims)])
    nb, nc = np.linalg.norm(b), np.linalg.norm(c)
    status, it = "max_iter", 0
    res = {}

    for it in range(max_iter + 1):
        rp = b - A @ x
        rd = c - s - A.T @ y
        pobj, dobj = float(c @ x), float(b @ y)
        mu = float(x @ s) / nu
        res = {
            "primal_infeasibility": float(np.linalg.norm(rp) / (1 + nb)),
            "dual_infeasibility": float(np.linalg.norm(rd) / (1 + nc)),
            "relative_gap": abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj)),
        }
        if max(res.values()) <= tol:
            status = "optimal"
            break
        if it == max_iter:
            break
        try:
            blocks = [_nt_scaling(smat(x[sl], d), smat(s[sl], d)) for sl, d in zip(slices, dims)]
            M = np.zeros((problem.m, problem.m))
            for blk, (rows, Aj) in zip(blocks, cons.block_columns):
                if rows.size == 0:
                    continue
                AK = (Aj @ skron(blk.W))
                M[np.ix_(rows, rows)] += (Aj @ AK.T)
            chol = _factor(0.5 * (M + M.T))
        except la.LinAlgError:
            # the iterates lose definiteness to rounding once they are nearly optimal
            status = "near-optimal" if max(res.values()) <= NEAR_OPTIMAL * tol else "numerical"
            break

        def direction(Rc):
            WrdW = np.concatenate([svec(blk.W @ smat(rd[sl], d) @ blk.W) for blk, sl, d in zip(blocks, slices, dims)])
            rhs = rp - A @ np.concatenate([svec(R) for R in Rc]) + A @ WrdW
            dy = la.cho_solve(chol, rhs, check_finite=False)
            ds = rd - A.T @ dy
            dS = [smat(ds[sl], d) for sl, d in zip(slices, dims)]
            dX = [R - blk.W @ D @ blk.W for R, blk, D in zip(Rc, blocks, dS)]
            return dX, dy, dS

        def steps(dX, dS):
            ap = min(_max_step(blk.L, D) for blk, D in zip(blocks, dX))
            ad = min(_max_step(la.cholesky(blk.S, lower=True), D) for blk, D in zip(blocks, dS))
            return ap, ad

        dX, dy, dS = direction([-blk.X for blk in blocks])
        ap, ad = steps(dX, dS)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = sum(np.vdot(blk.X + ap * DX, blk.S + ad * DS) for blk, DX, DS in zip(blocks, dX, dS)) / nu
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        Rc = []
        for blk, DX, DS in zip(blocks, dX, dS):
            Xh = blk.Ginv @ DX @ blk.Ginv.T
            Sh = blk.G.T @ DS @ blk.G
            rhs = 2 * sigma * mu * np.eye(blk.lam.size) - 2 * np.diag(blk.lam**2) - (Xh @ Sh + Sh @ Xh)
            T = rhs / (blk.lam[:, None] + blk.lam[None, :])
            Rc.append(blk.G @ T @ blk.G.T)
        dX, dy, dS = direction(Rc)
        ap, ad = steps(dX, dS)
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
        x = x + ap * np.concatenate([svec(D) for D in dX])
        y = y + ad * dy
        s = s + ad * np.concatenate([svec(D) for D in dS])

    cert = certified_dual(problem, y)
    pobj, dobj = float(c @ x), float(b @ y)
    log.debug("ipm: %s after %d iterations, primal %.10g dual %.10g certified %.10g", status, it, pobj, dobj, cert)
    return SdpSolution(pobj, dobj, cert, x, y, s, pobj - cert, status, it, "ipm", res)
