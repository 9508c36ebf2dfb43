"""Membership, certificates and witnesses for the CP, DNN and DD cones.

CP is the cone of completely positive matrices conv{x x^T : x >= 0}, DNN the
PSD matrices with real nonnegative entries and DD the entrywise nonnegative
diagonally dominant ones, so DD is inside CP, which is inside DNN. Deciding
CP membership is NP-hard, so verdicts are tri-state and every IN/OUT
verdict carries a certificate that :func:`check_certificate` can revalidate
without trusting the code that produced it.
"""

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse
import scipy.sparse.csgraph

from . import linalg
from ._program import ProgramBuilder, evaluate, expr_sum
from .errors import (DimensionMismatch, DimensionTooLarge, NotDNN, NotUnitNorm,
                     ParameterOutOfRange, ZeroVector)
from .solver import SOLVED, solve

IN, OUT, UNKNOWN = "IN", "OUT", "UNKNOWN"
DEFAULT_TOL = 1e-9
GOLDEN_X = (3 + np.sqrt(5)) / 2  # Horn parameter of the five-dimensional Fourier witness


# certificates ---------------------------------------------------------------


@dataclass
class CPFactorization:
    B: np.ndarray  # H = B @ B.T with B >= 0

    @property
    def rank(self):
        return self.B.shape[1]


@dataclass
class PsdPlusNonnegDecomposition:
    X: np.ndarray  # PSD
    Y: np.ndarray  # entrywise nonnegative


@dataclass
class WitnessMatrix:
    W: np.ndarray
    value: float  # Tr(W rho)
    source: str = ""


@dataclass
class RefutingVector:
    x: np.ndarray
    value: float  # x^T Re(W) x


@dataclass
class DNNViolation:
    kind: str  # "imaginary", "negative" or "eigenvalue"
    location: tuple = None
    vector: np.ndarray = None
    amount: float = 0.0


@dataclass
class DDViolation:
    row: int
    amount: float


@dataclass
class DNNDualMatrix:
    """Z in DNN with Tr(Z) = 1 and <Re W, Z> < 0: W is not in the dual of DNN."""

    Z: np.ndarray
    value: float


@dataclass
class SOSCertificate:
    """(sum z_i^2) * sum_ij (Re W - t I)_ij z_i^2 z_j^2 = m(z)^T G m(z), G PSD."""

    gram: np.ndarray
    monomials: list
    shift: float


@dataclass
class MembershipVerdict:
    verdict: str
    certificate: object = None
    tol: float = DEFAULT_TOL
    info: dict = field(default_factory=dict)

    def __bool__(self):
        raise TypeError("compare .verdict explicitly; a verdict is tri-state")


# basic cones -----------------------------------------------------------------


def _scale(H):
    return 1.0 + np.linalg.norm(H)


def is_dnn(H, tol=DEFAULT_TOL):
    """PSD with real nonnegative entries."""
    H = linalg.as_hermitian(H)
    im = np.abs(H.imag)
    if im.max() > tol:
        i, j = np.unravel_index(np.argmax(im), im.shape)
        return MembershipVerdict(OUT, DNNViolation("imaginary", (int(i), int(j)), amount=float(im[i, j])), tol)
    re = H.real
    if re.min() < -tol:
        i, j = np.unravel_index(np.argmin(re), re.shape)
        return MembershipVerdict(OUT, DNNViolation("negative", (int(i), int(j)), amount=float(-re[i, j])), tol)
    w, V = np.linalg.eigh(re)
    if w[0] < -tol * _scale(H):
        return MembershipVerdict(OUT, DNNViolation("eigenvalue", vector=V[:, 0], amount=float(-w[0])), tol)
    return MembershipVerdict(IN, None, tol)


def is_dd(H, tol=DEFAULT_TOL):
    """Entrywise real nonnegative and diagonally dominant."""
    H = linalg.as_hermitian(H)
    first = is_dnn_entries(H, tol)
    if first is not None:
        return first
    R = H.real
    excess = (R.sum(axis=1) - np.diag(R)) - np.diag(R)
    j = int(np.argmax(excess))
    if excess[j] > tol:
        return MembershipVerdict(OUT, DDViolation(j, float(excess[j])), tol)
    return MembershipVerdict(IN, CPFactorization(dd_factor(R)), tol)


def is_dnn_entries(H, tol):
    im = np.abs(H.imag)
    if im.max() > tol:
        i, j = np.unravel_index(np.argmax(im), im.shape)
        return MembershipVerdict(OUT, DNNViolation("imaginary", (int(i), int(j)), amount=float(im[i, j])), tol)
    if H.real.min() < -tol:
        i, j = np.unravel_index(np.argmin(H.real), H.shape)
        return MembershipVerdict(OUT, DNNViolation("negative", (int(i), int(j)), amount=float(-H.real[i, j])), tol)
    return None


def dd_factor(R):
    """Explicit CP factorization of a nonnegative diagonally dominant matrix.

    Uses H = sum_{i<j} H_ij (e_i + e_j)(e_i + e_j)^T + sum_i slack_i e_i e_i^T.
    """
    R = np.maximum(np.asarray(R, dtype=float), 0.0)
    n = R.shape[0]
    cols = []
    for i in range(n):
        for j in range(i + 1, n):
            if R[i, j] > 0:
                col = np.zeros(n)
                col[i] = col[j] = np.sqrt(R[i, j])
                cols.append(col)
    slack = np.diag(R) - (R.sum(axis=1) - np.diag(R))
    for i in range(n):
        if slack[i] > 0:
            col = np.zeros(n)
            col[i] = np.sqrt(slack[i])
            cols.append(col)
    return np.column_stack(cols) if cols else np.zeros((n, 1))


# Horn family -------------------------------------------------------------------


def horn_matrix(x=1.0):
    """The 5x5 matrix with unit diagonal and cyclic rows (1, -1, x, x, -1), x >= 1."""
    x = float(x)
    if not np.isfinite(x) or x < 1:
        raise ParameterOutOfRange(f"Horn parameter must be >= 1, got {x}")
    row = np.array([1.0, -1.0, x, x, -1.0])
    return np.array([[row[(j - i) % 5] for j in range(5)] for i in range(5)])


def horn_certificate_eval(v):
    """Both sides of the identity proving the Horn matrix copositive.

    Returns (v^T W_1 v, [sum_j v_j (v_j - v_j+1 + v_j+2 + v_j+3 - v_j+4)^2
    + 4 sum_j v_j v_j+1 v_j+3] / sum_j v_j), indices mod 5.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (5,):
        raise DimensionMismatch("Horn identity needs a vector of length 5")
    if np.any(v < 0):
        raise ParameterOutOfRange("Horn identity needs a nonnegative vector")
    total = v.sum()
    if total == 0:
        raise ZeroVector("Horn identity is undefined at v = 0")
    lhs = v @ horn_matrix(1.0) @ v
    sh = [np.roll(v, -k) for k in range(5)]  # sh[k][j] = v[j + k]
    square = sh[0] - sh[1] + sh[2] + sh[3] - sh[4]
    rhs = (np.sum(v * square ** 2) + 4 * np.sum(sh[0] * sh[1] * sh[3])) / total
    return float(lhs), float(rhs)


def _horn_library(n):
    """Horn-type matrices of order n: cyclic relabelings, padded with identity for n > 5."""
    if n < 5:
        return []
    mats = []
    seen = set()
    for perm in itertools.permutations(range(1, 5)):
        order = (0,) + perm
        key = min(tuple(np.roll(order, k)) for k in range(5))
        rev = min(tuple(np.roll(order[::-1], k)) for k in range(5))
        key = min(key, rev)
        if key in seen:
            continue
        seen.add(key)
        mats.append(np.array(order))
    out = []
    for subset in itertools.combinations(range(n), 5):
        for order in mats:
            idx = np.array(subset)[order]
            out.append(idx)
    return out


def _embed(block, idx, n, pad="identity"):
    """Place ``block`` on indices ``idx``; other diagonal entries are 1 (identity) or 0 (zero)."""
    W = np.eye(n) if pad == "identity" else np.zeros((n, n))
    W[np.ix_(idx, idx)] = block
    return W


# SDP based copositivity tests ---------------------------------------------------


def copositive_level0(W, tol=DEFAULT_TOL):
    """Is Re(W) = X + Y with X PSD and Y entrywise nonnegative (W in the dual of DNN)?

    Solves max t s.t. Re(W) - t I = X + Y; IN iff t >= -tol. IN implies
    copositivity. OUT only excludes the dual of DNN, which for n >= 5 is
    strictly smaller than the copositive cone.
    """
    W = linalg.as_hermitian(W)
    R = W.real
    n = R.shape[0]
    pb = ProgramBuilder()
    (t,) = pb.free(1)
    X = pb.sym_psd(n)
    Y = pb.nonneg(n * (n + 1) // 2)
    k = 0
    for j in range(n):
        for i in range(j, n):
            pb.eq(X[i, j] + Y[k] + (t if i == j else 0.0), R[i, j])
            k += 1
    pb.maximize(t)
    sol = solve(pb.build())
    if sol.status not in SOLVED:
        return MembershipVerdict(UNKNOWN, None, tol, {"solver": sol.status})
    tval = t.value(sol.x)
    tol_abs = tol * _scale(R)
    if tval >= -tol_abs:
        Xv = evaluate(X, sol.x) + tval * np.eye(n)
        Yv = np.zeros((n, n))
        k = 0
        for j in range(n):
            for i in range(j, n):
                Yv[i, j] = Yv[j, i] = max(Y[k].value(sol.x), 0.0)
                k += 1
        # put the rounding error on the diagonal of X so that R = X + Y exactly
        Xv = R - Yv
        return MembershipVerdict(IN, PsdPlusNonnegDecomposition(Xv, Yv), tol, {"shift": tval})
    # dual multipliers of the equalities form Z in DNN with <R, Z> = t < 0
    Z = np.zeros((n, n))
    k = 0
    for j in range(n):
        for i in range(j, n):
            Z[i, j] = Z[j, i] = sol.y[k] * (1.0 if i == j else 0.5)
            k += 1
    Z = Z / np.trace(Z)
    return MembershipVerdict(OUT, DNNDualMatrix(Z, float(np.sum(R * Z))), tol, {"shift": tval})


def _monomials(n, degree):
    return [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) == degree][::-1]


def _level1_program(R, extra=None):
    """Builder for max t: (sum z^2) * sum (R - t I - c * extra)_ij z_i^2 z_j^2 is SOS.

    With ``extra`` given, the scalar c is a second free variable (used to
    maximize c with t fixed to zero).
    """
    n = R.shape[0]
    mons = _monomials(n, 3)
    index6 = {}
    pb = ProgramBuilder()
    (t,) = pb.free(1)
    c = pb.free(1)[0] if extra is not None else None
    G = pb.sym_psd(len(mons))
    lhs = {}
    for a in range(len(mons)):
        for b in range(len(mons)):
            g = tuple(x + y for x, y in zip(mons[a], mons[b]))
            lhs.setdefault(g, []).append(G[a, b])
    coef_R, coef_t, coef_c = {}, {}, {}
    for k in range(n):
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[k] += 2
                e[i] += 2
                e[j] += 2
                g = tuple(e)
                coef_R[g] = coef_R.get(g, 0.0) + R[i, j]
                if i == j:
                    coef_t[g] = coef_t.get(g, 0.0) + 1.0
                if extra is not None:
                    coef_c[g] = coef_c.get(g, 0.0) + extra[i, j]
    for g, entries in lhs.items():
        e = expr_sum(entries) + t * coef_t.get(g, 0.0)
        if c is not None:
            e = e + c * coef_c.get(g, 0.0)
        pb.eq(e, coef_R.get(g, 0.0))
        index6[g] = True
    return pb, t, c, G, mons


def _check_level1_dim(n):
    if n > 8:
        raise DimensionTooLarge(f"level-1 SOS test supports n <= 8 (got {n})")


def copositive_sos_level1(W, tol=DEFAULT_TOL):
    """First level of the sum-of-squares hierarchy for copositivity.

    IN iff (sum_i z_i^2) * sum_ij Re(W)_ij z_i^2 z_j^2 is a sum of squares
    (one Gram matrix over the degree-3 monomials); IN implies Re(W) copositive.
    """
    W = linalg.as_hermitian(W)
    R = W.real
    n = R.shape[0]
    _check_level1_dim(n)
    pb, t, _, G, mons = _level1_program(R)
    pb.maximize(t)
    sol = solve(pb.build())
    if sol.status not in SOLVED:
        return MembershipVerdict(UNKNOWN, None, tol, {"solver": sol.status})
    tval = t.value(sol.x)
    if tval >= -tol * _scale(R):
        cert = SOSCertificate(evaluate(G, sol.x), mons, tval)
        return MembershipVerdict(IN, cert, tol, {"shift": tval})
    return MembershipVerdict(OUT, None, tol, {"shift": tval})


def sos_certificate_residual(R, cert, samples=1000, seed=0):
    """Max relative mismatch of the SOS identity at random points, and min eigenvalue of G."""
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(samples, n))
    expo = np.array(cert.monomials)
    M = np.prod(Z[:, None, :] ** expo[None, :, :], axis=2)
    sos = np.einsum("sa,ab,sb->s", M, cert.gram, M)
    Z2 = Z ** 2
    shifted = R - cert.shift * np.eye(n)
    poly = Z2.sum(axis=1) * np.einsum("si,ij,sj->s", Z2, shifted, Z2)
    mismatch = np.max(np.abs(sos - poly) / (1 + np.abs(poly)))
    return float(mismatch), float(np.linalg.eigvalsh(cert.gram)[0])


# refutation ---------------------------------------------------------------------


def _simplex_grid(n, depth, limit=200_000, seed=0):
    if comb(n + depth - 1, depth) <= limit:
        pts = []
        for cuts in itertools.combinations(range(depth + n - 1), n - 1):
            prev, counts = -1, []
            for c in cuts:
                counts.append(c - prev - 1)
                prev = c
            counts.append(depth + n - 2 - prev)
            pts.append(counts)
        return np.array(pts, dtype=float) / depth
    rng = np.random.default_rng(seed)
    pts = [np.eye(n), (np.eye(n)[:, None, :] + np.eye(n)[None, :, :]).reshape(-1, n) / 2,
           rng.dirichlet(np.ones(n) * 0.5, size=limit)]
    return np.vstack(pts)


def _local_descent(R, x, iters=500):
    # projected gradient on the simplex for x^T R x
    for _ in range(iters):
        g = 2 * R @ x
        y = _project_simplex(x - 0.1 / (1 + np.abs(R).max()) * g)
        if np.abs(y - x).max() < 1e-14:
            break
        x = y
    return x


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    k = np.nonzero(u - css / np.arange(1, v.size + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _kaplan(R, max_n=12):
    """A principal submatrix with a negative eigenvalue and a positive eigenvector refutes copositivity."""
    n = R.shape[0]
    if n > max_n:
        return None
    for size in range(1, n + 1):
        for idx in itertools.combinations(range(n), size):
            w, V = np.linalg.eigh(R[np.ix_(idx, idx)])
            for k in np.nonzero(w < 0)[0]:
                v = V[:, k] * np.sign(V[:, k].sum() or 1.0)
                if np.all(v > 0):
                    x = np.zeros(n)
                    x[list(idx)] = v
                    return x
    return None


def copositive_refute(W, grid_depth=6, tol=DEFAULT_TOL):
    """Search for x >= 0 with x^T Re(W) x < 0. Returns OUT or UNKNOWN, never IN."""
    W = linalg.as_hermitian(W)
    R = W.real
    n = R.shape[0]
    thresh = tol * _scale(R)

    def verdict(x):
        x = np.maximum(x, 0.0)
        x = x / np.linalg.norm(x)
        val = float(x @ R @ x)
        if val < -thresh:
            return MembershipVerdict(OUT, RefutingVector(x, val), tol)
        return None

    d = np.diag(R)
    if d.min() < -thresh:
        return verdict(np.eye(n)[int(np.argmin(d))])
    pts = _simplex_grid(n, grid_depth)
    vals = np.einsum("si,ij,sj->s", pts, R, pts)
    for k in np.argsort(vals)[:min(10, len(vals))]:
        out = verdict(_local_descent(R, pts[k]))
        if out is not None:
            return out
    x = _kaplan(R)
    if x is not None:
        out = verdict(x)
        if out is not None:
            return out
    return MembershipVerdict(UNKNOWN, None, tol)


def is_copositive_certified(W, tol=DEFAULT_TOL):
    """True when Re(W) is proven copositive by level 0 or level 1; False when refuted; None otherwise."""
    W = linalg.as_hermitian(W)
    keep = np.abs(W).max(axis=1) > 0
    if not keep.all():
        # a zero row and column does not affect copositivity
        if not keep.any():
            return True
        W = W[np.ix_(keep, keep)]
    n = W.shape[0]
    if copositive_level0(W, tol).verdict == IN:
        return True
    if copositive_refute(W, tol=tol).verdict == OUT:
        return False
    if n <= 8 and copositive_sos_level1(W, tol).verdict == IN:
        return True
    return None


# factorization --------------------------------------------------------------------


def _require_dnn(H, tol):
    H = linalg.as_hermitian(H)
    v = is_dnn(H, tol)
    if v.verdict != IN:
        raise NotDNN(f"matrix is not doubly non-negative ({v.certificate.kind})")
    return H.real.copy()


def _eigen_factor(H, m):
    w, V = np.linalg.eigh(H)
    w = np.maximum(w, 0.0)
    F = V * np.sqrt(w)
    F = F[:, ::-1]  # dominant components first
    n = H.shape[0]
    if m >= n:
        return np.hstack([F, np.zeros((n, m - n))])
    return F[:, :m]


def _polar(M):
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def _coordinate_descent(H, B, sweeps):
    """Projected exact coordinate descent on ||H - B B^T||_F^2."""
    n, m = B.shape
    Rm = H - B @ B.T
    for _ in range(sweeps):
        for k in range(m):
            b = B[:, k]
            Rk = Rm + np.outer(b, b)
            for i in range(n):
                s2 = b @ b - b[i] ** 2
                p = s2 - Rk[i, i]
                q = -(Rk[i] @ b - Rk[i, i] * b[i])
                roots = np.roots([1.0, 0.0, p, q])
                cands = [0.0] + [r.real for r in roots if abs(r.imag) < 1e-10 and r.real > 0]

                def f(x):
                    bb = b.copy()
                    bb[i] = x
                    return np.sum((Rk - np.outer(bb, bb)) ** 2)

                b[i] = min(cands, key=f)
            B[:, k] = b
            Rm = Rk - np.outer(b, b)
    return B


def cp_factorize_heuristic(H, m=None, seeds=16, max_iter=5000, seed=0, tol=DEFAULT_TOL):
    """Search for B >= 0 (n x m) with H = B B^T.

    Each attempt starts from an eigen factor F of H (F F^T = H). The first
    attempt takes |F| and runs projected coordinate descent; every attempt
    then alternates D = max(F Q, 0) and Q = polar(F^T D) over orthogonal Q,
    which stops at an exact factorization F Q >= 0 when it finds one.
    Without m, the widths n, 2n and the CP-rank bound n(n+1)/2 - 1 are tried
    in turn, since the rotation search converges far more often at small
    widths. Failure after all seeds is UNKNOWN, never OUT.
    """
    R = _require_dnn(H, tol)
    n = R.shape[0]
    if m is None:
        bound = max(n, n * (n + 1) // 2 - 1)
        best = np.inf
        for w in sorted({n, min(2 * n, bound), bound}):
            v = cp_factorize_heuristic(R, w, seeds, max_iter, seed, tol)
            if v.verdict == IN:
                return v
            best = min(best, v.info["best_residual"])
        return MembershipVerdict(UNKNOWN, None, tol, {"best_residual": best})
    target = 1e-8 * _scale(R)
    rng = np.random.default_rng(seed)
    F = _eigen_factor(R, m)

    def accept(B):
        B = np.maximum(B, 0.0)
        res = np.linalg.norm(R - B @ B.T)
        return (B, res) if res <= target else (None, res)

    best = np.inf
    B, res = accept(np.abs(F))
    if B is not None:
        return MembershipVerdict(IN, CPFactorization(B), tol, {"residual": res})
    if n * m <= 200:
        B, res = accept(_coordinate_descent(R, np.abs(F), sweeps=min(20, max_iter)))
        if B is not None:
            return MembershipVerdict(IN, CPFactorization(B), tol, {"residual": res})
        best = min(best, res)
    for s in range(seeds):
        Q = np.eye(m) if s == 0 else scipy.linalg.qr(rng.normal(size=(m, m)))[0]
        for it in range(max_iter):
            D = np.maximum(F @ Q, 0.0)
            Q = _polar(F.T @ D)
            if it % 10 == 0 or it == max_iter - 1:
                FQ = F @ Q
                if FQ.min() >= -1e-15 * _scale(R):
                    break
                if np.abs(D - FQ).max() < 1e-14:
                    break
        B, res = accept(F @ Q)
        best = min(best, res)
        if B is not None:
            return MembershipVerdict(IN, CPFactorization(B), tol,
                                     {"residual": res, "seed": s, "iterations": it + 1})
    return MembershipVerdict(UNKNOWN, None, tol, {"best_residual": best})


def scaled_dd_factor(R, tol=DEFAULT_TOL):
    """Factorization via a positive scaling d with diag(d) R diag(d) diagonally dominant, or None.

    Such d exists iff the comparison matrix (diagonal of R, negated
    off-diagonal entries) is PSD on every connected component; d is then its
    bottom eigenvector there, which is entrywise positive.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    if R.min() < -tol:
        return None
    R = np.maximum(R, 0.0)
    ncomp, labels = scipy.sparse.csgraph.connected_components(scipy.sparse.csr_matrix(R > 0),
                                                             directed=False)
    d = np.ones(n)
    for c in range(ncomp):
        idx = np.nonzero(labels == c)[0]
        if idx.size == 1:
            continue
        sub = R[np.ix_(idx, idx)]
        comparison = 2 * np.diag(np.diag(sub)) - sub
        w, V = np.linalg.eigh(comparison)
        if w[0] < -tol * _scale(sub):
            return None
        v = np.abs(V[:, 0])
        if v.min() <= 1e-12:
            return None
        d[idx] = v / v.max()
    S = R * np.outer(d, d)
    excess = S.sum(axis=1) - 2 * np.diag(S)
    if excess.max() > 1e-9 * _scale(S):
        return None
    S[np.diag_indices(n)] += np.maximum(excess, 0.0)  # absorb rounding so dd_factor sees dominance
    B = dd_factor(S) / d[:, None]
    return B


def _rank2_factor(R, eps):
    """Exact factorization of a rank <= 2 DNN matrix by rotating its Gram vectors into a quadrant."""
    w, V = np.linalg.eigh(R)
    G = V[:, -2:] * np.sqrt(np.maximum(w[-2:], 0.0))
    r = np.linalg.norm(G, axis=1)
    live = r > eps
    if not live.any():
        return np.zeros((R.shape[0], 1))
    ang = np.sort(np.arctan2(G[live, 1], G[live, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    start = ang[(k + 1) % ang.size]
    if 2 * np.pi - gaps[k] > np.pi / 2 + 1e-7:
        return None
    c, s = np.cos(start), np.sin(start)
    B = G @ np.array([[c, -s], [s, c]])
    return np.maximum(B, 0.0)


def _small_exact_factor(R, depth=0):
    """Constructive factorization for DNN matrices of order <= 4, or None.

    Zero rows are dropped; rank <= 2 is rotated into the nonnegative
    quadrant; order 3 lowers one diagonal entry until the rank drops to 2;
    order 4 peels the rank-one term of a column whose Schur complement is
    entrywise nonnegative (after optionally lowering a diagonal entry).
    """
    n = R.shape[0]
    scale = _scale(R)
    eps = 1e-12 * scale
    keep = np.diag(R) > eps
    if not keep.all():
        B = np.zeros((n, max(n, 1)))
        if keep.any():
            sub = _small_exact_factor(R[np.ix_(keep, keep)], depth)
            if sub is None:
                return None
            B = np.zeros((n, sub.shape[1]))
            B[keep] = sub
        return B
    if n == 1:
        return np.sqrt(R)
    w = np.linalg.eigvalsh(R)
    if np.sum(w > 1e-10 * scale) <= 2:
        return _rank2_factor(R, eps)
    if n > 4 or depth > 2:
        return None
    if n == 3:
        for k in range(3):
            inv = np.linalg.inv(R)
            t = 1.0 / inv[k, k]
            low = R.copy()
            low[k, k] -= t
            B = _rank2_factor(low, eps)
            if B is not None:
                col = np.zeros((3, 1))
                col[k] = np.sqrt(t)
                return np.hstack([B, col])
        return None
    cands = [(R, None)]
    if w[0] > 1e-10 * scale:
        inv = np.linalg.inv(R)
        for k in range(n):
            low = R.copy()
            low[k, k] -= 1.0 / inv[k, k]
            cands.append((low, (k, 1.0 / inv[k, k])))
    for M, diag in cands:
        for k in range(n):
            x = M[:, k] / np.sqrt(M[k, k])
            S = M - np.outer(x, x)
            if S.min() < -1e-13 * scale:
                continue
            rest = np.delete(np.delete(np.maximum(S, 0.0), k, 0), k, 1)
            sub = _small_exact_factor(rest, depth + 1)
            if sub is None:
                continue
            B = np.insert(sub, k, 0.0, axis=0)
            cols = [B, np.maximum(x, 0.0)[:, None]]
            if diag is not None:
                col = np.zeros((n, 1))
                col[diag[0]] = np.sqrt(diag[1])
                cols.append(col)
            return np.hstack(cols)
    return None


def _bounded_lsq_factor(R, m, starts, rng, target):
    """Trust-region least squares on B >= 0 for ||B B^T - R|| over the upper triangle."""
    n = R.shape[0]
    iu = np.triu_indices(n)
    rows = np.arange(iu[0].size)

    def resid(b):
        B = b.reshape(n, m)
        return (B @ B.T - R)[iu]

    def jac(b):
        B = b.reshape(n, m)
        J = np.zeros((rows.size, n, m))
        J[rows, iu[0], :] += B[iu[1]]
        J[rows, iu[1], :] += B[iu[0]]
        return J.reshape(rows.size, -1)

    best = (np.inf, None)
    size = np.sqrt(np.trace(R) / (n * m))
    for _ in range(starts):
        b0 = 2 * size * rng.random(n * m)
        out = scipy.optimize.least_squares(resid, b0, jac=jac, bounds=(0, np.inf), xtol=1e-15,
                                           ftol=1e-15, gtol=1e-15, max_nfev=500)
        B = out.x.reshape(n, m)
        res = np.linalg.norm(R - B @ B.T)
        if res < best[0]:
            best = (res, B)
        if res <= target:
            break
    return best


def cp_factorize_small(H, tol=DEFAULT_TOL, seed=0):
    """CP factorization for DNN matrices of order <= 4, where DNN equals CP.

    Tries the exact construction and the scaled diagonal dominance
    factorization, then the projection heuristic, then
    bounded least squares with random starts. UNKNOWN only if all fail.
    """
    R = _require_dnn(H, tol)
    n = R.shape[0]
    if n > 4:
        raise DimensionTooLarge("cp_factorize_small handles order at most 4")
    target = 1e-8 * _scale(R)
    for method, build in (("exact", _small_exact_factor), ("scaled dd", scaled_dd_factor)):
        B = build((R + R.T) / 2)
        if B is not None:
            res = np.linalg.norm(R - B @ B.T)
            if res <= target:
                return MembershipVerdict(IN, CPFactorization(B), tol, {"residual": res, "method": method})
    f = cp_factorize_heuristic(R, max(n, 6), seeds=4, max_iter=2000, seed=seed, tol=tol)
    if f.verdict == IN:
        f.info["method"] = "projection"
        return f
    res, B = _bounded_lsq_factor(R, n, 8, np.random.default_rng(seed), target)
    if res <= target:
        return MembershipVerdict(IN, CPFactorization(B), tol, {"residual": res, "method": "least squares"})
    return MembershipVerdict(UNKNOWN, None, tol, {"best_residual": res})


def cp_rank_upper(H, tol=DEFAULT_TOL, seeds=16, max_iter=5000):
    """Smallest m for which the factorization heuristic succeeds, or None.

    Only an upper bound on the CP-rank; never claimed tight.
    """
    R = _require_dnn(H, tol)
    n = R.shape[0]
    rank = int(np.sum(np.linalg.eigvalsh(R) > 1e-10 * _scale(R)))
    hi = max(n * (n + 1) // 2 - 1, rank, 1)
    lo = max(rank, 1)

    def works(m):
        return cp_factorize_heuristic(R, m, seeds, max_iter, tol=tol).verdict == IN

    if is_dd(R, tol).verdict == IN:
        hi = min(hi, dd_factor(R).shape[1])
    elif not works(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if works(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


# witnesses ---------------------------------------------------------------------------


def _dnn_dual_witness(rho):
    """max -Tr(W rho) over W Hermitian with W <= I and Re(W) = X + Y, X PSD, Y >= 0."""
    n = rho.shape[0]
    pb = ProgramBuilder()
    Rm, Sm = pb.herm_psd(n)  # I - W
    X = pb.sym_psd(n)
    Y = pb.nonneg(n * (n + 1) // 2)
    k = 0
    for j in range(n):
        for i in range(j, n):
            pb.eq(X[i, j] + Y[k] + Rm[i, j], 1.0 if i == j else 0.0)
            k += 1
    # Tr(W rho) = sum Re(W)_ij Re(rho)_ij + Im(W)_ij Im(rho)_ij with W = I - (Rm + i Sm)
    obj = expr_sum(Rm[i, j] * rho.real[i, j] + Sm[i, j] * rho.imag[i, j]
                   for i in range(n) for j in range(n))
    pb.maximize(obj)  # -Tr(W rho) = obj - Tr(rho)
    sol = solve(pb.build())
    if sol.status not in SOLVED:
        return None
    W = np.eye(n) - (evaluate(Rm, sol.x) + 1j * evaluate(Sm, sol.x))
    return (W + W.conj().T) / 2


def _max_shift_level1(R, extra):
    """Largest c with R - c * extra in the level-1 SOS cone (None if the SDP fails)."""
    n = R.shape[0]
    pb, t, c, G, mons = _level1_program(R, extra)
    pb.eq(t, 0.0)
    pb.maximize(c)
    sol = solve(pb.build())
    if sol.status not in SOLVED:
        return None
    return c.value(sol.x)


def _normalized(W):
    lmax = np.linalg.eigvalsh(W)[-1]
    return W / lmax if lmax > 0 else None


def dual_witness_for(rho, tol=DEFAULT_TOL, use_sos=True):
    """Best witness W in the dual of CP with W <= I, maximizing -Tr(W rho).

    Candidates: the exact optimum over the dual of DNN (an SDP), the Horn
    family (relabelings, identity-padded embeddings, a grid of parameters)
    scaled by its largest eigenvalue, and I - c |u><u| for the top
    eigenvectors u of rho with c maximized under a level-1 SOS
    certificate. OUT when the best value exceeds tol, else UNKNOWN.
    """
    rho = linalg.as_hermitian(rho)
    n = rho.shape[0]
    cands = []

    W = _dnn_dual_witness(rho)
    if W is not None:
        cands.append((W, "dnn-dual"))

    if 5 <= n <= 12:
        xs = np.unique(np.concatenate([np.linspace(1, 4, 13), [GOLDEN_X]]))
        horns = [(horn_matrix(x), x) for x in xs]
        for idx in _horn_library(n):
            for Hx, x in horns:
                for pad in ("identity", "zero"):
                    Wn = _normalized(_embed(Hx, idx, n, pad))
                    cands.append((Wn, f"horn x={x:.6g} {pad}-padded on {tuple(int(i) for i in idx)}"))

    if use_sos and n <= 7:
        w, V = np.linalg.eigh(rho)
        for k in range(1, min(n, 2) + 1):
            u = V[:, -k]
            P = np.outer(u, u.conj())
            if is_dnn(P, 1e-9).verdict == IN:
                continue  # I - c P is then never better than the trivial witness
            c = _max_shift_level1(np.eye(n), P.real)
            if c is not None and c > 0:
                cands.append((np.eye(n) - c * P, f"identity minus {c:.6g} projector"))

    best, best_val, src = None, -np.inf, ""
    for Wc, name in cands:
        if Wc is None:
            continue
        val = -np.real(np.trace(Wc @ rho))
        if val > best_val:
            best, best_val, src = Wc, val, name
    if best is not None and best_val > tol:
        return MembershipVerdict(OUT, WitnessMatrix(best, -best_val, src), tol, {"value": best_val})
    return MembershipVerdict(UNKNOWN, None, tol, {"value": best_val if best is not None else None})


def _horn_witness(rho, tol):
    """Cheap check of the raw Horn relabelings (no normalization)."""
    n = rho.shape[0]
    if not 5 <= n <= 12:
        return None
    H1 = horn_matrix(1.0)
    best = None
    for idx in _horn_library(n):
        val = np.real(np.sum(H1 * rho[np.ix_(idx, idx)].real))
        if val < -tol and (best is None or val < best[1]):
            best = (idx, val)
    if best is None:
        return None
    return WitnessMatrix(_embed(H1, best[0], n, "zero"), float(best[1]),
                         f"horn on {tuple(int(i) for i in best[0])}")


def cp_membership(H, tol=DEFAULT_TOL, effort="certify", seeds=16, max_iter=5000):
    """Tri-state CP membership with certificates.

    Ladder: not DNN -> OUT; DD or DD after a positive diagonal scaling ->
    IN with an explicit factorization; n <= 4 -> IN (DNN equals CP there)
    with a factorization; with
    effort="certify", Horn witnesses, the factorization heuristic and the
    witness search; otherwise UNKNOWN.
    """
    if effort not in ("fast", "certify"):
        raise ValueError(f"effort must be 'fast' or 'certify', not {effort!r}")
    H = linalg.as_hermitian(H)
    n = H.shape[0]
    v = is_dnn(H, tol)
    if v.verdict == OUT:
        return v
    R = H.real
    dd = is_dd(H, tol)
    if dd.verdict == IN:
        return MembershipVerdict(IN, dd.certificate, tol, {"route": "dd"})
    B = scaled_dd_factor(R, tol)
    if B is not None and np.linalg.norm(R - B @ B.T) <= 1e-8 * _scale(R):
        return MembershipVerdict(IN, CPFactorization(B), tol, {"route": "scaled dd"})
    if n <= 4:
        f = cp_factorize_small(R, tol)
        f.info["route"] = "n<=4"
        return f
    if effort == "fast":
        return MembershipVerdict(UNKNOWN, None, tol, {"route": "fast"})
    w = _horn_witness(H, tol)
    if w is not None:
        return MembershipVerdict(OUT, w, tol, {"route": "horn"})
    f = cp_factorize_heuristic(R, None, seeds, max_iter, tol=tol)
    if f.verdict == IN:
        f.info["route"] = "heuristic"
        return f
    dw = dual_witness_for(H, tol)
    if dw.verdict == OUT:
        dw.info["route"] = "witness search"
        return dw
    return MembershipVerdict(UNKNOWN, None, tol, {"route": "exhausted"})


def nonneg_purification_exists(v, dim_a, dim_b, tol=DEFAULT_TOL):
    """Can local unitaries on the first factor make |v> in C^dim_a (x) C^dim_b entrywise nonnegative?

    Equivalent to the reduced state on the second factor being CP with
    CP-rank at most dim_a. Returns "YES", "NO" or "UNKNOWN".
    """
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != dim_a * dim_b:
        raise DimensionMismatch(f"vector of length {v.size} is not in C^{dim_a} (x) C^{dim_b}")
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise NotUnitNorm("state must have unit norm")
    red = linalg.partial_trace(np.outer(v, v.conj()), dim_a, dim_b, "first")
    red = (red + red.conj().T) / 2
    rank = int(np.sum(np.linalg.eigvalsh(red) > 1e-9))
    if rank > dim_a:
        return "NO"
    mem = cp_membership(red, tol)
    if mem.verdict == OUT:
        return "NO"
    if mem.verdict == UNKNOWN:
        return "UNKNOWN"
    if mem.certificate.rank <= dim_a:
        return "YES"
    r = cp_rank_upper(red.real, tol)
    return "YES" if r is not None and r <= dim_a else "UNKNOWN"


# independent certificate checking -----------------------------------------------------


def check_certificate(H, verdict, tol=None):
    """Revalidate a verdict's certificate against H without reusing the producer's state."""
    H = linalg.as_hermitian(H)
    tol = verdict.tol if tol is None else tol
    cert = verdict.certificate
    if verdict.verdict == UNKNOWN:
        return True
    if isinstance(cert, CPFactorization):
        B = cert.B
        return bool(B.min() >= -tol and np.linalg.norm(H - B @ B.T) <= max(tol, 1e-8) * _scale(H))
    if isinstance(cert, PsdPlusNonnegDecomposition):
        ok_sum = np.abs(H.real - cert.X - cert.Y).max() <= 1e-8 * _scale(H)
        return bool(ok_sum and cert.Y.min() >= -tol
                    and np.linalg.eigvalsh((cert.X + cert.X.T) / 2)[0] >= -1e-8 * _scale(H))
    if isinstance(cert, WitnessMatrix):
        val = np.real(np.trace(cert.W @ H))
        if not val < -tol:
            return False
        return is_copositive_certified(cert.W, 1e-9) is True
    if isinstance(cert, RefutingVector):
        x = cert.x
        return bool(x.min() >= 0 and abs(np.linalg.norm(x) - 1) < 1e-9 and x @ H.real @ x < -tol)
    if isinstance(cert, DNNViolation):
        if cert.kind == "imaginary":
            return bool(abs(H[cert.location].imag) > tol)
        if cert.kind == "negative":
            return bool(H[cert.location].real < -tol)
        x = cert.vector
        return bool(np.real(x.conj() @ H @ x) < -tol * _scale(H))
    if isinstance(cert, DDViolation):
        R = H.real
        j = cert.row
        return bool(R[j].sum() - 2 * R[j, j] > tol)
    if isinstance(cert, DNNDualMatrix):
        Z = cert.Z
        dnn = is_dnn(Z, 1e-8).verdict == IN
        return bool(dnn and np.sum(H.real * Z) < -tol)
    if isinstance(cert, SOSCertificate):
        mismatch, mineig = sos_certificate_residual(H.real, cert)
        return bool(mismatch < 1e-6 and mineig > -1e-7)
    return False
