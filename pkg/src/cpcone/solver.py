"""Primal-dual interior-point solver for small mixed-cone programs.

Programs are in standard form::

    minimize    c @ x
    subject to  A @ x == b,   x in K = K_1 x ... x K_r

where each block K_i is one of PSD(d) (real symmetric d x d matrices stored
as ``svec``: the lower triangle column by column with off-diagonal entries
scaled by sqrt(2)), SOC(d) (``x[0] >= ||x[1:]||``), NONNEG(d) or FREE(d).
The dual is ``maximize b @ y`` subject to ``A.T @ y + s == c`` with ``s``
in the dual cone (zero on free blocks).

The method is the homogeneous self-dual embedding with Nesterov-Todd
scaling and Mehrotra predictor-corrector steps. Each iteration factors the
KKT matrix [[W'W, A'], [A, 0]] once and solves with it twice.
"""

import functools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import BadProgram, DimensionMismatch

OPTIMAL = "OPTIMAL"
PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
DUAL_INFEASIBLE = "DUAL_INFEASIBLE"
STALLED = "STALLED"
OPTIMAL_INACCURATE = "OPTIMAL_INACCURATE"
SOLVED = (OPTIMAL, OPTIMAL_INACCURATE)

KINDS = ("psd", "soc", "nonneg", "free")

# KKT systems up to this order are factored densely.
_DENSE_KKT_MAX = 800
_DENSE_KKT_MAX_CONIC = 200  # without PSD blocks the sparse path wins much earlier
# Static regularization of the KKT matrix; iterative refinement against the
# unregularized matrix removes its effect on the computed directions.
_REG = 1e-11


@dataclass(frozen=True)
class Block:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadProgram(f"unknown block kind {self.kind!r}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise BadProgram(f"block dimension must be a positive integer, got {self.dim!r}")

    @property
    def size(self):
        """Number of scalar variables the block occupies."""
        return self.dim * (self.dim + 1) // 2 if self.kind == "psd" else self.dim


def PSD(d):
    return Block("psd", d)


def SOC(d):
    return Block("soc", d)


def NONNEG(d):
    return Block("nonneg", d)


def FREE(d):
    return Block("free", d)


@functools.lru_cache(maxsize=None)
def _svec_index(d):
    rows, cols = np.tril_indices(d)
    # column-major order of the lower triangle
    order = np.lexsort((rows, cols))
    rows, cols = rows[order], cols[order]
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return rows, cols, scale


def svec(X):
    """Isometric vectorization of a symmetric matrix (lower triangle, column-major)."""
    X = np.asarray(X, dtype=float)
    r, c, w = _svec_index(X.shape[0])
    return X[r, c] * w


def smat(v, d=None):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    if d is None:
        d = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    r, c, w = _svec_index(d)
    if v.size != r.size:
        raise DimensionMismatch(f"svec of length {v.size} does not match order {d}")
    X = np.zeros((d, d))
    X[r, c] = v / w
    X[c, r] = v / w
    return X


@dataclass
class ConicProgram:
    """minimize c @ x  s.t.  A @ x == b,  x in the product of ``blocks``."""

    c: np.ndarray
    A: object  # dense array or scipy sparse matrix, shape (m, n)
    b: np.ndarray
    blocks: tuple

    def __post_init__(self):
        self.blocks = tuple(self.blocks)
        for blk in self.blocks:
            if not isinstance(blk, Block):
                raise BadProgram(f"blocks must be Block instances, got {blk!r}")
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        if scipy.sparse.issparse(self.A):
            self.A = scipy.sparse.csr_matrix(self.A, dtype=float)
            finite = np.all(np.isfinite(self.A.data))
        else:
            self.A = np.asarray(self.A, dtype=float)
            if self.A.size == 0:
                self.A = self.A.reshape(self.b.size, self.c.size)
            finite = np.all(np.isfinite(self.A))
        if not (finite and np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))):
            raise BadProgram("program data contains NaN or Inf")
        n = sum(blk.size for blk in self.blocks)
        if self.c.size != n:
            raise BadProgram(f"objective has length {self.c.size}, blocks need {n}")
        if self.A.shape != (self.b.size, n):
            raise BadProgram(f"A has shape {self.A.shape}, expected {(self.b.size, n)}")

    @property
    def n(self):
        return self.c.size

    @property
    def m(self):
        return self.b.size

    def offsets(self):
        out, pos = [], 0
        for blk in self.blocks:
            out.append(pos)
            pos += blk.size
        return out


@dataclass
class ConicSolution:
    status: str
    x: np.ndarray  # primal point, or the unboundedness ray when DUAL_INFEASIBLE
    y: np.ndarray  # equality multipliers, or the Farkas ray when PRIMAL_INFEASIBLE
    s: np.ndarray  # dual slack c - A'y (on the ray: -A'y)
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    message: str = ""


@dataclass
class ResidualReport:
    primal_residual: float
    dual_residual: float
    gap: float
    primal_cone_violation: float
    dual_cone_violation: float
    certificate_valid: bool = False  # only meaningful for infeasibility statuses
    details: dict = field(default_factory=dict)

    def ok(self, tol):
        return max(self.primal_residual, self.dual_residual, self.gap,
                   self.primal_cone_violation, self.dual_cone_violation) <= tol


# ---------------------------------------------------------------------------
# cone arithmetic on the concatenated cone coordinates


class _Cones:
    def __init__(self, blocks):
        self.blocks = []  # (kind, start, size, dim) in cone coordinates
        pos = 0
        for blk in blocks:
            if blk.kind == "free":
                continue
            self.blocks.append((blk.kind, pos, blk.size, blk.dim))
            pos += blk.size
        self.size = pos
        self.degree = sum(1 if k == "soc" else dim for k, _, _, dim in self.blocks)

    def identity(self):
        e = np.zeros(self.size)
        for kind, p, sz, d in self.blocks:
            if kind == "nonneg":
                e[p:p + sz] = 1.0
            elif kind == "soc":
                e[p] = 1.0
            else:
                e[p:p + sz] = svec(np.eye(d))
        return e

    def jprod(self, u, v):
        out = np.empty(self.size)
        for kind, p, sz, d in self.blocks:
            a, b = u[p:p + sz], v[p:p + sz]
            if kind == "nonneg":
                out[p:p + sz] = a * b
            elif kind == "soc":
                out[p] = a @ b
                out[p + 1:p + sz] = a[0] * b[1:] + b[0] * a[1:]
            else:
                U, V = smat(a, d), smat(b, d)
                out[p:p + sz] = svec((U @ V + V @ U) / 2)
        return out

    def jdiv(self, lam, r):
        """Solve lam o x = r for x, with ``lam`` a scaling point (diagonal on PSD blocks)."""
        out = np.empty(self.size)
        for kind, p, sz, d in self.blocks:
            l, v = lam[p:p + sz], r[p:p + sz]
            if kind == "nonneg":
                out[p:p + sz] = v / l
            elif kind == "soc":
                det = l[0] ** 2 - l[1:] @ l[1:]
                x0 = (l[0] * v[0] - l[1:] @ v[1:]) / det
                out[p] = x0
                out[p + 1:p + sz] = (v[1:] - x0 * l[1:]) / l[0]
            else:
                ld = np.diag(smat(l, d))
                out[p:p + sz] = svec(2 * smat(v, d) / (ld[:, None] + ld[None, :]))
        return out

    def max_step(self, lam, dirn):
        """Largest a with lam + a * dirn in the cone (inf if unbounded)."""
        best = np.inf
        for kind, p, sz, d in self.blocks:
            l, v = lam[p:p + sz], dirn[p:p + sz]
            if kind == "nonneg":
                neg = v < 0
                if neg.any():
                    best = min(best, np.min(-l[neg] / v[neg]))
            elif kind == "soc":
                best = min(best, _soc_step(l, v))
            else:
                ld = np.diag(smat(l, d))
                r = 1.0 / np.sqrt(ld)
                M = smat(v, d) * r[:, None] * r[None, :]
                mn = np.linalg.eigvalsh(M)[0]
                if mn < 0:
                    best = min(best, -1.0 / mn)
        return best

    def violation(self, v, dual=False):
        """How far ``v`` (cone coordinates) is outside the cone; 0 if inside."""
        worst = 0.0
        for kind, p, sz, d in self.blocks:
            a = v[p:p + sz]
            if kind == "nonneg":
                worst = max(worst, -a.min())
            elif kind == "soc":
                worst = max(worst, np.linalg.norm(a[1:]) - a[0])
            else:
                worst = max(worst, -np.linalg.eigvalsh(smat(a, d))[0])
        return max(worst, 0.0)


def _soc_step(u, d):
    # first positive root of (u0 + a d0)^2 - ||u1 + a d1||^2 = 0
    qa = d[0] ** 2 - d[1:] @ d[1:]
    qb = 2 * (u[0] * d[0] - u[1:] @ d[1:])
    qc = u[0] ** 2 - u[1:] @ u[1:]
    if qa >= 0 and d[0] >= 0:
        return np.inf  # direction lies in the cone
    roots = []
    if abs(qa) < 1e-300:
        if qb < 0:
            roots.append(-qc / qb)
    else:
        disc = qb * qb - 4 * qa * qc
        if disc >= 0:
            sq = np.sqrt(disc)
            q = -0.5 * (qb + np.copysign(sq, qb))
            if q != 0:
                roots.extend([q / qa, qc / q])
    roots = [r for r in roots if r > 0]
    if roots:
        return min(roots)
    return -u[0] / d[0] if d[0] < 0 else np.inf


class _Scaling:
    """Nesterov-Todd scaling W with W x = W^{-T} s = lam for each cone block."""

    def __init__(self, cones, x, s):
        self.cones = cones
        self.parts = []
        lam = np.empty(cones.size)
        for kind, p, sz, d in cones.blocks:
            xb, sb = x[p:p + sz], s[p:p + sz]
            if kind == "nonneg":
                w = np.sqrt(sb / xb)
                self.parts.append(w)
                lam[p:p + sz] = np.sqrt(sb * xb)
            elif kind == "soc":
                J = np.ones(sz)
                J[1:] = -1.0
                xn = np.sqrt(max(xb[0] ** 2 - xb[1:] @ xb[1:], 1e-300))
                sn = np.sqrt(max(sb[0] ** 2 - sb[1:] @ sb[1:], 1e-300))
                xbar, sbar = xb / xn, sb / sn
                gam = np.sqrt((1 + xbar @ sbar) / 2)
                wbar = (sbar + J * xbar) / (2 * gam)
                v = wbar.copy()
                v[0] += 1.0
                v /= np.sqrt(2 * (wbar[0] + 1))
                beta = np.sqrt(sn / xn)
                # W = beta * (2 v v' - J), symmetric
                self.parts.append((beta, v, J))
                lam[p:p + sz] = beta * (2 * v * (v @ xb) - J * xb)
            else:
                Lx = _psd_sqrt(smat(xb, d))
                Ls = _psd_sqrt(smat(sb, d))
                U, sv, Vt = np.linalg.svd(Lx.T @ Ls)
                R = Ls @ Vt.T / np.sqrt(sv)
                self.parts.append(R)
                lam[p:p + sz] = svec(np.diag(sv))
        self.lam = lam

    def apply(self, v, transpose=False):
        out = np.empty_like(v)
        for (kind, p, sz, d), Wb in zip(self.cones.blocks, self.parts):
            a = v[p:p + sz]
            if kind == "nonneg":
                out[p:p + sz] = Wb * a
            elif kind == "soc":
                beta, w, J = Wb
                out[p:p + sz] = beta * (2 * w * (w @ a) - J * a)
            else:
                M = smat(a, d)
                out[p:p + sz] = svec(Wb @ M @ Wb.T if transpose else Wb.T @ M @ Wb)
        return out

    def apply_inv_transpose(self, v):
        out = np.empty_like(v)
        for (kind, p, sz, d), Wb in zip(self.cones.blocks, self.parts):
            a = v[p:p + sz]
            if kind == "nonneg":
                out[p:p + sz] = a / Wb
            elif kind == "soc":
                beta, w, J = Wb
                Jw = J * w
                out[p:p + sz] = (2 * Jw * (Jw @ a) - J * a) / beta
            else:
                M = smat(a, d)
                out[p:p + sz] = svec(np.linalg.solve(Wb, np.linalg.solve(Wb, M).T).T)
        return out

    def gram_blocks(self):
        """Dense matrices of W'W per block (diagonal vector for the orthant)."""
        out = []
        for (kind, p, sz, d), Wb in zip(self.cones.blocks, self.parts):
            if kind == "nonneg":
                out.append(Wb * Wb)
            elif kind == "soc":
                beta, v, J = Wb
                W = beta * (2 * np.outer(v, v) - np.diag(J))
                out.append(W @ W)
            else:
                out.append(self.gram_block_psd(Wb, d))
        return out

    @staticmethod
    def gram_block_psd(R, d):
        # matrix of X -> P X P on svec coordinates, P = R R'
        P = R @ R.T
        r, c, _ = _svec_index(d)
        alpha = np.where(r == c, 1 / np.sqrt(2), 1.0)
        M = (P[r[:, None], r[None, :]] * P[c[:, None], c[None, :]]
             + P[r[:, None], c[None, :]] * P[c[:, None], r[None, :]])
        return M * alpha[:, None] * alpha[None, :]


def _psd_sqrt(X):
    w, V = np.linalg.eigh((X + X.T) / 2)
    return V * np.sqrt(np.maximum(w, 1e-300))


# ---------------------------------------------------------------------------
# presolve


def _presolve(A, b):
    """Drop linearly dependent rows of A.

    Returns (kept_rows, infeasible_ray). ``infeasible_ray`` is a vector y
    with A'y = 0 and b'y = 1 when the dropped rows are inconsistent.
    """
    m, n = A.shape
    if m == 0:
        return np.arange(0), None
    gram = A @ A.T
    gram = gram.toarray() if scipy.sparse.issparse(gram) else gram
    try:
        # full row rank is the common case; a well-conditioned Cholesky of A A' confirms it cheaply
        L = np.linalg.cholesky(gram)
        piv_sq = np.diag(L) ** 2
        if piv_sq.min() > 1e-12 * piv_sq.max():
            return np.arange(m), None
    except np.linalg.LinAlgError:
        pass
    if scipy.sparse.issparse(A):
        if m * n > 4_000_000:
            return np.arange(m), None  # too large to check densely
        A = A.toarray()
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(m, n) * np.finfo(float).eps * (diag[0] if diag.size else 0.0) * 100
    rank = int(np.sum(diag > tol))
    if rank == m:
        return np.arange(m), None
    keep = np.sort(piv[:rank])
    for r in np.sort(piv[rank:]):
        coef, *_ = np.linalg.lstsq(A[keep].T, A[r], rcond=None)
        mismatch = b[r] - coef @ b[keep]
        if abs(mismatch) > 1e-9 * (1 + abs(b[r]) + np.abs(b[keep]).max(initial=0)):
            y = np.zeros(m)
            y[r] = 1.0
            y[keep] = -coef
            return keep, y / mismatch
    return keep, None


# ---------------------------------------------------------------------------
# KKT factorization


class _KKT:
    """Factorization of [[D, A'], [A, 0]] (D = W'W on cone coordinates, 0 on free).

    Small systems are factored densely. Larger ones use sparse LU, with
    each second-order block's D = beta^2 (I + U C U') (U = [v, Jv]) expanded
    into two auxiliary rows so the block stays sparse.
    """

    def __init__(self, A, scaling, cone_idx, n):
        m = A.shape[0]
        self.n, self.m = n, m
        has_psd = any(b[0] == "psd" for b in scaling.cones.blocks)
        self.dense = n + m <= (_DENSE_KKT_MAX if has_psd else _DENSE_KKT_MAX_CONIC)
        if self.dense:
            self._dense(A, scaling, cone_idx, n, m)
        else:
            self._sparse(A, scaling, cone_idx, n, m)

    def _dense(self, A, scaling, cone_idx, n, m):
        size = n + m
        Ad = A.toarray() if scipy.sparse.issparse(A) else A
        K = np.zeros((size, size))
        pos = 0
        for G in scaling.gram_blocks():
            k = G.shape[0]
            idx = cone_idx[pos:pos + k]
            if G.ndim == 1:
                K[idx, idx] = G
            else:
                K[np.ix_(idx, idx)] = G
            pos += k
        K[:n, n:] = Ad.T
        K[n:, :n] = Ad
        self.K = K
        self.size = size
        reg = np.concatenate([np.full(n, _REG), np.full(m, -_REG)])
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            self.lu = scipy.linalg.lu_factor(K + np.diag(reg), check_finite=False)

    def _sparse(self, A, scaling, cone_idx, n, m):
        rows, cols, vals = [], [], []
        extra = n + m  # next auxiliary index
        for (kind, p, sz, d), Wb in zip(scaling.cones.blocks, scaling.parts):
            idx = cone_idx[p:p + sz]
            if kind == "nonneg":
                rows.append(idx), cols.append(idx), vals.append(Wb * Wb)
            elif kind == "soc":
                beta, v, J = Wb
                b2 = beta * beta
                aux = np.array([extra, extra + 1])
                extra += 2
                a0, a1 = np.full(sz, aux[0]), np.full(sz, aux[1])
                rows += [idx, idx, idx, a0, a1, aux[[0, 1, 1]]]
                cols += [idx, a0, a1, idx, idx, aux[[1, 0, 1]]]
                vals += [np.full(sz, b2), b2 * v, b2 * J * v, b2 * v, b2 * J * v,
                         b2 * np.array([0.5, 0.5, v @ v])]
            else:
                G = scaling.gram_block_psd(Wb, d)
                r, c = np.meshgrid(idx, idx, indexing="ij")
                rows.append(r.ravel()), cols.append(c.ravel()), vals.append(G.ravel())
        Ac = scipy.sparse.coo_matrix(A)
        rows_s, cols_s, vals_s = rows, cols, vals
        rows_s += [Ac.col, Ac.row + n]
        cols_s += [Ac.row + n, Ac.col]
        vals_s += [Ac.data, Ac.data]
        size = extra
        K = scipy.sparse.coo_matrix(
            (np.concatenate(vals_s), (np.concatenate(rows_s), np.concatenate(cols_s))),
            shape=(size, size)).tocsc()
        self.K = K
        self.size = size
        reg = np.full(size, _REG)
        reg[n:n + m] *= -1
        reg[n + m:] = 0.0
        self.lu = scipy.sparse.linalg.splu(
            (K + scipy.sparse.diags(reg)).tocsc(), permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.01, options={"SymmetricMode": True})

    def solve(self, rhs, refine=3):
        fac = (lambda r: scipy.linalg.lu_solve(self.lu, r, check_finite=False)) if self.dense \
            else self.lu.solve
        nm = rhs.size
        full = np.zeros(self.size)
        full[:nm] = rhs
        sol = fac(full)
        for _ in range(refine):
            sol = sol + fac(full - self.K @ sol)
        return sol[:nm]


# ---------------------------------------------------------------------------
# the interior-point method


def solve(p, tol_feas=1e-9, tol_gap=1e-9, max_iter=200, tol_inaccurate=1e-6):
    """Solve a :class:`ConicProgram`; never raises on numerical trouble.

    When progress stops before the tolerances are met, the best iterate is
    returned with status OPTIMAL_INACCURATE if its residuals and gap are
    within ``tol_inaccurate``, and STALLED otherwise.
    """
    if not isinstance(p, ConicProgram):
        raise BadProgram("solve expects a ConicProgram")
    n, m_full = p.n, p.m
    keep, ray = _presolve(p.A, p.b)
    if ray is not None:
        s = -(p.A.T @ ray)
        return ConicSolution(PRIMAL_INFEASIBLE, np.zeros(n), ray, np.asarray(s).ravel(),
                             np.nan, np.nan, np.nan, np.nan, np.nan, 0,
                             "inconsistent linear equalities")
    A = p.A[keep] if len(keep) < m_full else p.A
    b = p.b[keep]
    c = p.c
    m = b.size

    cones = _Cones(p.blocks)
    cone_idx = np.concatenate(
        [np.arange(o, o + blk.size) for blk, o in zip(p.blocks, p.offsets()) if blk.kind != "free"]
        + [np.zeros(0, dtype=int)]).astype(int)
    free_idx = np.setdiff1d(np.arange(n), cone_idx)
    nu = cones.degree
    e = cones.identity()

    x = np.zeros(n)
    x[cone_idx] = e
    s = np.zeros(n)
    s[cone_idx] = e
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    nb, nc = np.linalg.norm(b), np.linalg.norm(c)
    At = A.T
    status, message = STALLED, "iteration limit reached"
    it = 0
    small_steps = 0

    def report(x, y, s, tau):
        xh, yh, sh = x / tau, y / tau, s / tau
        pobj, dobj = c @ xh, b @ yh
        pres = np.linalg.norm(A @ xh - b) / (1 + nb)
        dres = np.linalg.norm(At @ yh + sh - c) / (1 + nc)
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        return xh, yh, sh, pobj, dobj, pres, dres, gap

    best = (np.inf, None)
    for it in range(max_iter + 1):
        xh, yh, sh, pobj, dobj, pres, dres, gap = report(x, y, s, tau)
        quality = max(pres, dres, gap)
        if quality < best[0]:
            best = (quality, (x.copy(), y.copy(), s.copy(), tau))
        if pres <= tol_feas and dres <= tol_feas and gap <= tol_gap:
            status, message = OPTIMAL, ""
            break
        by, cx = b @ y, c @ x
        if by > 0:
            r = np.linalg.norm(At @ y + s) / by
            if r <= tol_feas:
                status, message = PRIMAL_INFEASIBLE, ""
                break
        if cx < 0:
            r = np.linalg.norm(A @ x) / -cx
            if r <= tol_feas and cones.violation(x[cone_idx] / -cx) <= tol_feas:
                status, message = DUAL_INFEASIBLE, ""
                break
        if it == max_iter:
            break

        rp = A @ x - b * tau
        rd = c * tau - At @ y - s
        rg = b @ y - c @ x - kappa
        xc, sc = x[cone_idx], s[cone_idx]
        mu = (xc @ sc + tau * kappa) / (nu + 1)

        try:
            with np.errstate(all="raise"):
                W = _Scaling(cones, xc, sc)
                kkt = _KKT(A, W, cone_idx, n)
                sol1 = kkt.solve(np.concatenate([-c, b]))
        except (np.linalg.LinAlgError, FloatingPointError, RuntimeError,
                scipy.linalg.LinAlgWarning, ValueError) as exc:
            message = f"numerical failure: {exc}"
            break
        x1, y1 = sol1[:n], sol1[n:]
        lam = W.lam
        denom = kappa / tau - b @ y1 - c @ x1

        def direction(gamma, dcomp, dkap):
            q = cones.jdiv(lam, dcomp)
            r2 = -(1 - gamma) * rd
            r2[cone_idx] += W.apply(q, transpose=True)
            sol2 = kkt.solve(np.concatenate([r2, -(1 - gamma) * rp]))
            x2, y2 = sol2[:n], sol2[n:]
            dtau = (-(1 - gamma) * rg + dkap / tau + b @ y2 + c @ x2) / denom
            dx = x2 + dtau * x1
            dy = -(y2 + dtau * y1)
            dk = (dkap - kappa * dtau) / tau
            dxt = W.apply(dx[cone_idx])
            # dual step from the linearized dual equation (exact residual decrease)
            ds = (1 - gamma) * rd - At @ dy + c * dtau
            ds[free_idx] = 0.0
            dst = W.apply_inv_transpose(ds[cone_idx])
            return dx, dy, ds, dtau, dk, dxt, dst

        def step_len(dxt, dst, dtau, dk):
            a = min(cones.max_step(lam, dxt), cones.max_step(lam, dst))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dk < 0:
                a = min(a, -kappa / dk)
            return a

        try:
            with np.errstate(all="raise"):
                lam2 = cones.jprod(lam, lam)
                aff = direction(0.0, -lam2, -tau * kappa)
                alpha_a = min(1.0, step_len(*aff[5:], aff[3], aff[4]))
                sigma = (1 - alpha_a) ** 3
                corr = cones.jprod(aff[5], aff[6])
                dcomp = -lam2 - corr + sigma * mu * e
                dkap = -tau * kappa - aff[3] * aff[4] + sigma * mu
                dx, dy, ds, dtau, dk, dxt, dst = direction(sigma, dcomp, dkap)
                alpha = min(1.0, 0.99 * step_len(dxt, dst, dtau, dk))
        except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
            message = f"numerical failure: {exc}"
            break

        if not np.isfinite(alpha) or alpha < 1e-10:
            small_steps += 1
            if small_steps >= 3 or not np.isfinite(alpha):
                message = "step size collapsed"
                break
            alpha = max(alpha, 0.0) if np.isfinite(alpha) else 0.0
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dk

    y_full = np.zeros(m_full)
    if status == PRIMAL_INFEASIBLE:
        ray = y / (b @ y)
        y_full[keep] = ray
        s_out = -(p.A.T @ y_full)
        return ConicSolution(status, np.zeros(n), y_full, np.asarray(s_out).ravel(),
                             np.nan, np.nan, np.nan, np.nan, np.nan, it, message)
    if status == DUAL_INFEASIBLE:
        ray = x / -(c @ x)
        return ConicSolution(status, ray, y_full, np.zeros(n), c @ ray, np.nan,
                             np.nan, np.nan, np.nan, it, message)
    if status == STALLED and best[0] <= tol_inaccurate:
        x, y, s, tau = best[1]
        status, message = OPTIMAL_INACCURATE, f"stopped early ({message}); best iterate kept"
    xh, yh, sh, pobj, dobj, pres, dres, gap = report(x, y, s, tau)
    y_full[keep] = yh
    return ConicSolution(status, xh, y_full, sh, float(pobj), float(dobj),
                         float(pres), float(dres), float(gap), it, message)


def verify_solution(p, sol):
    """Recompute residuals and cone memberships of ``sol`` from scratch."""
    n, m = p.n, p.m
    if sol.x.shape != (n,) or sol.y.shape != (m,) or sol.s.shape != (n,):
        raise DimensionMismatch("solution vectors do not match the program's dimensions")
    cones = _Cones(p.blocks)
    free_mask = np.zeros(n, dtype=bool)
    for blk, o in zip(p.blocks, p.offsets()):
        if blk.kind == "free":
            free_mask[o:o + blk.size] = True
    nb, nc = np.linalg.norm(p.b), np.linalg.norm(p.c)
    Aty = np.asarray(p.A.T @ sol.y).ravel()
    Ax = np.asarray(p.A @ sol.x).ravel()

    if sol.status == PRIMAL_INFEASIBLE:
        # Farkas: b'y = 1 and -A'y in the dual cone (zero on free blocks)
        z = -Aty
        viol = max(cones.violation(z[~free_mask], dual=True),
                   np.abs(z[free_mask]).max(initial=0.0))
        by = p.b @ sol.y
        return ResidualReport(np.nan, np.nan, np.nan, 0.0, viol,
                              certificate_valid=bool(abs(by - 1) < 1e-6 and viol < 0.1 * by),
                              details={"b_dot_y": by})
    if sol.status == DUAL_INFEASIBLE:
        viol = max(cones.violation(sol.x[~free_mask]), np.linalg.norm(Ax))
        cx = p.c @ sol.x
        return ResidualReport(np.nan, np.nan, np.nan, viol, 0.0,
                              certificate_valid=bool(abs(cx + 1) < 1e-6 and viol < 0.1),
                              details={"c_dot_x": cx})

    pobj, dobj = p.c @ sol.x, p.b @ sol.y
    pres = np.linalg.norm(Ax - p.b) / (1 + nb)
    dres = np.linalg.norm(Aty + sol.s - p.c) / (1 + nc)
    gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
    pviol = cones.violation(sol.x[~free_mask])
    dviol = max(cones.violation(sol.s[~free_mask], dual=True),
                np.abs(sol.s[free_mask]).max(initial=0.0))
    return ResidualReport(pres, dres, gap, pviol, dviol,
                          details={"primal_objective": pobj, "dual_objective": dobj})


# ---------------------------------------------------------------------------
# debug dump


def program_to_json(p):
    A = scipy.sparse.coo_matrix(p.A)
    return {
        "blocks": [{"kind": blk.kind, "dim": int(blk.dim)} for blk in p.blocks],
        "c": p.c.tolist(),
        "b": p.b.tolist(),
        "A": {"shape": [int(A.shape[0]), int(A.shape[1])], "row": A.row.tolist(),
              "col": A.col.tolist(), "val": A.data.tolist()},
    }


def program_from_json(obj):
    try:
        blocks = [Block(bk["kind"], int(bk["dim"])) for bk in obj["blocks"]]
        Aj = obj["A"]
        A = scipy.sparse.coo_matrix((Aj["val"], (Aj["row"], Aj["col"])), shape=tuple(Aj["shape"]))
        return ConicProgram(obj["c"], A.tocsr(), obj["b"], blocks)
    except (KeyError, TypeError) as exc:
        raise BadProgram(f"malformed program JSON: {exc}") from exc


def dump_program(p, path):
    with open(path, "w") as fh:
        json.dump(program_to_json(p), fh)


def load_program(path):
    with open(path) as fh:
        return program_from_json(json.load(fh))
