"""Partial trace/transpose and the orthonormal ``svec`` coordinates used by the solvers."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from diwed.core import InvalidInputError

SQRT2 = np.sqrt(2.0)


def _split(M, dims):
    M = np.asarray(M)
    da, db = dims
    if M.ndim != 2 or M.shape != (da * db, da * db):
        raise InvalidInputError(f"matrix of shape {M.shape} does not match dims {dims}")
    return M.reshape(da, db, da, db)


def partial_trace(M, dims, keep: str = "A") -> np.ndarray:
    """Trace out one factor of a bipartite matrix, keeping ``"A"`` or ``"B"``."""
    T = _split(M, dims)
    if keep == "A":
        return np.einsum("ijkj->ik", T)
    if keep == "B":
        return np.einsum("ijil->jl", T)
    raise InvalidInputError("keep must be 'A' or 'B'")


def partial_transpose(M, dims, on: str = "A") -> np.ndarray:
    T = _split(M, dims)
    da, db = dims
    if on == "A":
        return T.transpose(2, 1, 0, 3).reshape(da * db, da * db)
    if on == "B":
        return T.transpose(0, 3, 2, 1).reshape(da * db, da * db)
    raise InvalidInputError("on must be 'A' or 'B'")


@lru_cache(maxsize=64)
def svec_layout(d: int):
    """Row/column index arrays, per-entry scale and the (d, d) position table."""
    rows, cols = np.triu_indices(d)
    scale = np.where(rows == cols, 1.0, SQRT2)
    pos = np.empty((d, d), dtype=np.int64)
    pos[rows, cols] = np.arange(rows.size)
    pos[cols, rows] = np.arange(rows.size)
    for arr in (rows, cols, scale, pos):
        arr.setflags(write=False)
    return rows, cols, scale, pos


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec(M) -> np.ndarray:
    """Upper triangle with off-diagonals scaled by sqrt(2), so ``svec(A).svec(B) = <A, B>``."""
    M = np.asarray(M, dtype=float)
    rows, cols, scale, _ = svec_layout(M.shape[0])
    return M[rows, cols] * scale


def smat(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if d is None:
        d = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    rows, cols, scale, _ = svec_layout(d)
    if v.size != rows.size:
        raise InvalidInputError("vector length is not a triangular number for this dimension")
    out = np.zeros((d, d))
    out[rows, cols] = v / scale
    out[cols, rows] = v / scale
    return out


@lru_cache(maxsize=32)
def pt_permutation(da: int, db: int) -> np.ndarray:
    """``perm`` with ``svec(partial_transpose(X))[i] = svec(X)[perm[i]]``.

    Partial transposition maps diagonal entries to diagonal entries and
    off-diagonal to off-diagonal, so it is a pure permutation of coordinates.
    """
    rows, cols, _, pos = svec_layout(da * db)
    a1, b1 = np.divmod(rows, db)
    a2, b2 = np.divmod(cols, db)
    perm = pos[a2 * db + b1, a1 * db + b2]
    perm.setflags(write=False)
    return perm


def skron(W) -> np.ndarray:
    """Matrix of ``E -> W E W`` in svec coordinates (symmetric Kronecker product)."""
    W = np.asarray(W, dtype=float)
    rows, cols, scale, _ = svec_layout(W.shape[0])
    Wrr = W[np.ix_(rows, rows)]
    Wcc = W[np.ix_(cols, cols)]
    Wrc = W[np.ix_(rows, cols)]
    Wcr = W[np.ix_(cols, rows)]
    K = Wrr * Wcc
    K += Wrc * Wcr
    K *= 0.5 * np.outer(scale, scale)
    return K
