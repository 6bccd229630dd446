"""Standard-form SDPs in svec coordinates and the marginal + PPT relaxation.

Every problem is ``min c.x  s.t.  A x = b,  x = (svec X_1, ..., svec X_B),  X_j >= 0``
with dual ``max b.y  s.t.  c - A^T y = s,  smat(s_j) >= 0``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from diwed.core import CapacityError, InvalidInputError, MeasurementSettings, Partition, PibiCoefficients, region_operators
from diwed.sdp.linalg import pt_permutation, smat, svec, svec_dim, svec_layout

PAIR_CAP = 256


class ConstraintSystem:
    """Constraint data ``(A, b)`` shared by every objective on the same block structure."""

    def __init__(self, dims, A, b, labels, trace_bounds=None):
        self.dims = tuple(int(d) for d in dims)
        self.A = sp.csr_matrix(A)
        self.b = np.asarray(b, dtype=float)
        self.labels = list(labels)
        self.trace_bounds = None if trace_bounds is None else np.asarray(trace_bounds, dtype=float)
        sizes = [svec_dim(d) for d in self.dims]
        self.offsets = np.concatenate(([0], np.cumsum(sizes)))
        if self.A.shape != (self.b.size, self.offsets[-1]):
            raise InvalidInputError("constraint matrix shape does not match blocks and right-hand side")

    @property
    def m(self) -> int:
        return self.b.size

    def slices(self):
        return [slice(self.offsets[j], self.offsets[j + 1]) for j in range(len(self.dims))]

    @cached_property
    def block_columns(self):
        """Per block: (rows touching the block, the row-restricted column slice of A)."""
        A = self.A.tocsc()
        out = []
        for sl in self.slices():
            Aj = A[:, sl].tocsr()
            rows = np.unique(Aj.nonzero()[0])
            out.append((rows, Aj[rows]))
        return out

    @cached_property
    def normal_solver(self):
        """Sparse LU of ``A A^T`` (the rows are independent by construction)."""
        AAT = (self.A @ self.A.T).tocsc()
        return spla.splu(AAT, permc_spec="MMD_AT_PLUS_A")


@dataclass
class SdpProblem:
    constraints: ConstraintSystem
    c: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.size != self.constraints.offsets[-1]:
            raise InvalidInputError("objective length does not match the block structure")

    @property
    def dims(self):
        return self.constraints.dims

    @property
    def A(self):
        return self.constraints.A

    @property
    def b(self):
        return self.constraints.b

    @property
    def m(self) -> int:
        return self.constraints.m

    def blocks(self, v):
        """Split an svec-stacked vector into dense symmetric blocks."""
        return [smat(v[sl], d) for sl, d in zip(self.constraints.slices(), self.dims)]

    def stack(self, mats) -> np.ndarray:
        return np.concatenate([svec(M) for M in mats])

    def objective_blocks(self):
        return self.blocks(self.c)

    def maximally_mixed(self) -> np.ndarray:
        tb = self.constraints.trace_bounds
        scale = np.ones(len(self.dims)) if tb is None else tb
        return self.stack([t * np.eye(d) / d for t, d in zip(scale, self.dims)])


@dataclass
class SdpSolution:
    primal_value: float
    dual_value: float
    certified_value: float
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    gap: float
    status: str
    iterations: int
    engine: str
    residuals: dict = field(default_factory=dict)
    state: dict = field(default_factory=dict, repr=False)


def certified_dual(problem: SdpProblem, y) -> float:
    """Lower bound ``b.y + sum_j t_j min(0, lambda_min(C_j - (A^T y)_j))`` valid at any ``y``.

    ``t_j`` bounds the trace of block ``j`` over the feasible set. Without such
    bounds the dual value is only returned when it is exactly dual feasible.
    """
    y = np.asarray(y, dtype=float)
    slack = problem.c - problem.A.T @ y
    mins = np.array([la.eigvalsh(M)[0] for M in problem.blocks(slack)])
    tb = problem.constraints.trace_bounds
    base = float(problem.b @ y)
    if tb is None:
        return base if np.all(mins >= 0) else -np.inf
    return base + float(tb @ np.minimum(mins, 0.0))


@lru_cache(maxsize=32)
def relaxation_constraints(sizes: tuple) -> ConstraintSystem:
    """Unit trace, two-sided marginal consistency and PPT, for blocks of ``sizes`` qubits."""
    m = len(sizes)
    dloc = [2**s for s in sizes]
    pairs = list(itertools.combinations(range(m), 2))
    dims = list(dloc)
    labels = [f"rho[{a}]" for a in range(m)]
    for a, b in pairs:
        dims += [dloc[a] * dloc[b]] * 2
        labels += [f"pair[{a},{b}]", f"ppt[{a},{b}]"]
    offsets = np.concatenate(([0], np.cumsum([svec_dim(d) for d in dims])))
    rows, cols, vals = [], [], []
    nrow = 0

    def add(r, c, v):
        rows.append(np.ravel(r))
        cols.append(np.ravel(c))
        vals.append(np.broadcast_to(v, np.shape(r)).ravel().astype(float))

    for a in range(m):
        d = dloc[a]
        diag = svec_layout(d)[3][np.arange(d), np.arange(d)]
        add(np.full(d, nrow), offsets[a] + diag, 1.0)
        nrow += 1
    for pidx, (a, b) in enumerate(pairs):
        da, db = dloc[a], dloc[b]
        xoff = offsets[m + 2 * pidx]
        zoff = offsets[m + 2 * pidx + 1]
        pos = svec_layout(da * db)[3]
        # Tr_B X = rho_a, every entry
        P, Q, _, _ = svec_layout(da)
        r = np.arange(db)
        na = P.size
        row_ids = nrow + np.arange(na)
        add(np.repeat(row_ids, db), xoff + pos[P[:, None] * db + r, Q[:, None] * db + r].ravel(), 1.0)
        add(row_ids, offsets[a] + np.arange(na), -1.0)
        nrow += na
        # Tr_A X = rho_b, dropping the last diagonal entry (implied by the traces)
        P, Q, _, _ = svec_layout(db)
        r = np.arange(da)
        nb = P.size - 1
        P, Q = P[:nb], Q[:nb]
        row_ids = nrow + np.arange(nb)
        add(np.repeat(row_ids, da), xoff + pos[r * db + P[:, None], r * db + Q[:, None]].ravel(), 1.0)
        add(row_ids, offsets[b] + np.arange(nb), -1.0)
        nrow += nb
        # Z = X^{T_A}
        perm = pt_permutation(da, db)
        row_ids = nrow + np.arange(perm.size)
        add(row_ids, zoff + np.arange(perm.size), 1.0)
        add(row_ids, xoff + perm, -1.0)
        nrow += perm.size
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nrow, offsets[-1]))
    bvec = np.zeros(nrow)
    bvec[:m] = 1.0
    return ConstraintSystem(dims, A, bvec, labels, trace_bounds=np.ones(len(dims)))


def _region_settings(settings: MeasurementSettings, partition: Partition) -> MeasurementSettings:
    if settings.mode == "per-party" and settings.units == partition.n:
        return settings
    return settings.expand(partition)


def pair_operator(coeffs: PibiCoefficients, ra, rb) -> np.ndarray:
    a = coeffs.as_array()
    return (2 * a[2] * np.kron(ra.b0, rb.b0) + 2 * a[4] * np.kron(ra.b1, rb.b1)
            + a[3] * (np.kron(ra.b0, rb.b1) + np.kron(ra.b1, rb.b0)))


def build_relaxation(coeffs: PibiCoefficients, settings: MeasurementSettings, partition: Partition,
                     cap: int = PAIR_CAP) -> SdpProblem:
    """Marginal + PPT relaxation of the k-producible minimum at fixed settings."""
    sizes = partition.sizes
    dloc = [2**s for s in sizes]
    if len(sizes) == 1 and dloc[0] > cap:
        raise CapacityError(f"block dimension {dloc[0]} exceeds the cap {cap}")
    for a, b in itertools.combinations(range(len(sizes)), 2):
        if dloc[a] * dloc[b] > cap:
            raise CapacityError(f"pair dimension {dloc[a] * dloc[b]} exceeds the cap {cap}")
    full = _region_settings(settings, partition)
    ops = [region_operators(coeffs, full, s, off) for s, off in zip(sizes, partition.offsets())]
    mats = [op.combine(coeffs) for op in ops]
    for a, b in itertools.combinations(range(len(sizes)), 2):
        G = pair_operator(coeffs, ops[a], ops[b])
        mats += [G, np.zeros_like(G)]
    cons = relaxation_constraints(tuple(sizes))
    c = np.concatenate([svec(0.5 * (M + M.T)) for M in mats])
    return SdpProblem(cons, c, {"partition": partition.label(), "angles": full.angles.copy()})


def product_assignment(problem_sizes, states) -> np.ndarray:
    """Feasible point induced by a pure product state over the blocks."""
    rhos = [np.outer(v, v) for v in states]
    mats = list(rhos)
    da = [r.shape[0] for r in rhos]
    for a, b in itertools.combinations(range(len(rhos)), 2):
        X = np.kron(rhos[a], rhos[b])
        mats += [X, np.kron(rhos[a].T, rhos[b])]
    if [2**s for s in problem_sizes] != da:
        raise InvalidInputError("state dimensions do not match the partition")
    return np.concatenate([svec(M) for M in mats])


def dump_sdpa(problem: SdpProblem, path) -> None:
    """Write the problem in SDPA sparse format.

    SDPA reads ``min c.x  s.t.  sum_i F_i x_i - F_0 >= 0``; we write
    ``c = b``, ``F_i = A_i`` and ``F_0 = -C``, so an SDPA solver reports the
    negative of this problem's optimum.
    """
    A = problem.A.tocoo()
    lines = [
        '"marginal + PPT relaxation; SDPA optimum = -(relaxation minimum)"',
        str(problem.m),
        str(len(problem.dims)),
        " ".join(str(d) for d in problem.dims),
        " ".join(repr(float(v)) for v in problem.b),
    ]
    cons = problem.constraints
    block_of = np.searchsorted(cons.offsets, np.arange(cons.offsets[-1]), side="right") - 1
    layouts = [svec_layout(d) for d in problem.dims]

    def entry(mat_no, col, val):
        j = block_of[col]
        rows, cols, scale, _ = layouts[j]
        k = col - cons.offsets[j]
        return f"{mat_no} {j + 1} {rows[k] + 1} {cols[k] + 1} {float(val / scale[k])!r}"

    for col in np.flatnonzero(problem.c):
        lines.append(entry(0, col, -float(problem.c[col])))
    order = np.lexsort((A.col, A.row))
    for r, col, v in zip(A.row[order], A.col[order], A.data[order]):
        lines.append(entry(r + 1, col, float(v)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_sdpa(path) -> SdpProblem:
    """Read an SDPA sparse file (dense blocks only) back into standard form."""
    raw = [ln.strip() for ln in Path(path).read_text().splitlines()]
    body = [ln for ln in raw if ln and ln[0] not in '"*']
    m = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    dims = [abs(int(float(t))) for t in body[2].replace(",", " ").replace("{", " ").replace("}", " ").split()[:nblocks]]
    b = np.array([float(t) for t in body[3].replace(",", " ").replace("{", " ").replace("}", " ").split()[:m]])
    offsets = np.concatenate(([0], np.cumsum([svec_dim(d) for d in dims])))
    c = np.zeros(offsets[-1])
    rows, cols, vals = [], [], []
    for ln in body[4:]:
        mat_no, blk, i, j, val = ln.split()
        blk, i, j = int(blk) - 1, int(i) - 1, int(j) - 1
        i, j = min(i, j), max(i, j)
        _, _, scale, pos = svec_layout(dims[blk])
        col = offsets[blk] + pos[i, j]
        v = float(val) * scale[pos[i, j]]
        if int(mat_no) == 0:
            c[col] = -v
        else:
            rows.append(int(mat_no) - 1)
            cols.append(col)
            vals.append(v)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, offsets[-1]))
    return SdpProblem(ConstraintSystem(dims, A, b, [f"block[{j}]" for j in range(nblocks)]), c)
