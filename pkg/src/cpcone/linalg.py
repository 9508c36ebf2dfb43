"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain numpy arrays. The helpers here validate shapes and
Hermiticity, provide a deterministic Jacobi eigensolver, partial traces,
column-stacking vectorization and the JSON matrix format used everywhere.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NoConvergence, NonHermitian


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # orthonormal columns


def herm_tol(H):
    """Absolute Hermiticity tolerance for ``H``: 1e-12 * (1 + max|H_ij|)."""
    H = np.asarray(H)
    return 1e-12 * (1.0 + (np.abs(H).max() if H.size else 0.0))


def as_matrix(A):
    """Return ``A`` as a finite 2-D complex array (a copy)."""
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_hermitian(H, tol=None):
    """Validate ``H`` as Hermitian and return its exactly Hermitian part.

    Raises NonHermitian when ``H`` differs from its conjugate transpose by
    more than ``tol`` (default :func:`herm_tol`) in any entry.
    """
    H = as_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"Hermitian matrix must be square, got {H.shape}")
    tol = herm_tol(H) if tol is None else tol
    dev = np.abs(H - H.conj().T).max()
    if dev > tol:
        raise NonHermitian(f"matrix deviates from its adjoint by {dev:.3e} > {tol:.3e}")
    return (H + H.conj().T) / 2


def is_hermitian(H, tol=None):
    try:
        as_hermitian(H, tol)
    except (NonHermitian, DimensionMismatch):
        return False
    return True


def realify(H):
    """Real symmetric embedding [[R, -S], [S, R]] of ``H = R + iS``."""
    R, S = H.real, H.imag
    return np.block([[R, -S], [S, R]])


def _round_robin(n):
    # Circle-method tournament: n - 1 rounds of n/2 disjoint pairs (n even).
    idx = list(range(n))
    rounds = []
    for _ in range(n - 1):
        pairs = [(idx[i], idx[n - 1 - i]) for i in range(n // 2)]
        p = np.array([min(a, b) for a, b in pairs])
        q = np.array([max(a, b) for a, b in pairs])
        rounds.append((p, q))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def _jacobi_symmetric(A, max_rotations):
    """Cyclic Jacobi on a real symmetric matrix of even order.

    Rotations are applied one tournament round at a time (each round is a
    set of disjoint index pairs, so the updates vectorize).
    """
    A = A.copy()
    N = A.shape[0]
    V = np.eye(N)
    if N == 1:
        return np.diag(A).copy(), V
    scale = np.linalg.norm(A)
    # Rounding floor of the off-diagonal norm is ~ eps * N * scale.
    target = 4 * np.finfo(float).eps * N * scale
    rounds = _round_robin(N)
    rotations = 0
    prev = np.inf
    while True:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target or scale == 0.0:
            break
        if off > 0.5 * prev and off < 1e-12 * scale:
            break  # stagnated at rounding level
        prev = off
        if rotations > max_rotations:
            raise NoConvergence(f"Jacobi did not converge within {max_rotations} rotations")
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
            rotations += len(p)
    return np.diag(A).copy(), V


def _fix_phase(v):
    k = np.argmax(np.abs(v) - 1e-12 * np.arange(len(v)))
    return v * (abs(v[k]) / v[k]) if v[k] != 0 else v


def eig_hermitian(H):
    """Full spectral decomposition of a Hermitian matrix.

    Runs cyclic Jacobi on the 2n x 2n real embedding; each eigenvalue of
    ``H`` appears there twice with eigenvectors (x; y) and (-y; x), which
    both map to the complex line through x + iy. Within each degenerate
    cluster the complex vectors are orthonormalized by pivoted QR and each
    vector's phase is fixed so its largest entry is real positive.
    """
    H = as_hermitian(H)
    n = H.shape[0]
    w, V = _jacobi_symmetric(realify(H), max_rotations=30 * (2 * n) ** 3)
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    Z = V[:n] + 1j * V[n:]
    tol = 1e-12 * (1.0 + np.linalg.norm(H))
    vals, vecs = [], []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and (w[j] - w[j - 1] <= tol or (j - i) % 2 == 1):
            j += 1
        k = (j - i) // 2
        Q, _, _ = scipy.linalg.qr(Z[:, i:j], mode="economic", pivoting=True)
        for col in range(k):
            vecs.append(_fix_phase(Q[:, col]))
        vals.extend([w[i:j].mean()] * k)
        i = j
    return Spectrum(np.array(vals), np.column_stack(vecs))


def trace_norm(A):
    """Sum of the singular values of ``A``."""
    A = as_matrix(A)
    try:
        return float(np.linalg.svd(A, compute_uv=False).sum())
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def partial_trace(M, dim_a, dim_b, which="first"):
    """Trace out one factor of an operator on C^dim_a (x) C^dim_b.

    ``which="first"`` returns Tr_1(M) (a dim_b x dim_b matrix),
    ``which="second"`` returns Tr_2(M) (dim_a x dim_a).
    """
    M = as_matrix(M)
    if M.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionMismatch(
            f"operator of shape {M.shape} does not act on C^{dim_a} (x) C^{dim_b}"
        )
    T = M.reshape(dim_a, dim_b, dim_a, dim_b)
    if which == "first":
        return np.einsum("ijik->jk", T)
    if which == "second":
        return np.einsum("ijkj->ik", T)
    raise ValueError(f"which must be 'first' or 'second', not {which!r}")


def vec_mat(v, rows, cols):
    """Column-by-column matricization: entry (r, c) is v[r + c * rows]."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise DimensionMismatch(f"vector of length {v.size} cannot fill a {rows}x{cols} matrix")
    return v.reshape(rows, cols, order="F")


def mat_vec(A):
    """Column-stacking vectorization, the inverse of :func:`vec_mat`."""
    return np.asarray(A).reshape(-1, order="F")


def ket(index, dim):
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


# JSON matrix format: {"rows": n, "cols": m, "entries": [[[re, im], ...], ...]}


def matrix_to_json(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in A],
    }


def matrix_from_json(obj, hermitian=False):
    """Parse the JSON matrix format; ``hermitian=True`` also validates Hermiticity."""
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object with 'rows', 'cols', 'entries'")
    for key in ("rows", "cols", "entries"):
        if key not in obj:
            raise ValueError(f"matrix JSON is missing field '{key}'")
    rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 1 or cols < 1:
        raise ValueError("fields 'rows' and 'cols' must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows:
        raise ValueError(f"field 'entries' must be a list of {rows} rows")
    A = np.empty((rows, cols), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != cols:
            raise ValueError(f"field 'entries[{i}]' must be a list of {cols} entries")
        for j, z in enumerate(row):
            if isinstance(z, (int, float)):
                A[i, j] = z
            elif isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z):
                A[i, j] = complex(z[0], z[1])
            else:
                raise ValueError(f"field 'entries[{i}][{j}]' must be [re, im]")
    if not np.all(np.isfinite(A)):
        raise ValueError("field 'entries' contains non-finite values")
    return as_hermitian(A) if hermitian else A
