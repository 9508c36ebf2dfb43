"""Linear maps on matrices: Choi/Kraus/Pauli representations and CPCP classification.

A map Phi: M_n -> M_m is stored through its Choi matrix
J = sum_ij |i><j| (x) Phi(|i><j|) (input factor first). Kraus operators A
(m x n) relate to it by J = sum vec(A) vec(A)^* with column-stacking vec,
and Phi(rho) = Tr_1((rho^T (x) I_m) J).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import cones, linalg
from .cones import IN, OUT, UNKNOWN, MembershipVerdict
from .errors import (BadParameter, DimensionMismatch, NonHermiticityPreserving,
                     NotCP, NotDensityMatrix, NotPSD, NotQubit, NotUnitalCPCP)

DEFAULT_TOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_BASIS = [PAULI[k] for k in "IXYZ"]


def _scale(M):
    return 1.0 + np.linalg.norm(M)


@dataclass(frozen=True)
class ChannelRep:
    """A linear map M_n -> M_m held as its Choi matrix, plus Kraus operators when known."""

    dim_in: int
    dim_out: int
    choi: np.ndarray
    kraus: tuple = None
    pauli_standard: np.ndarray = None

    def __post_init__(self):
        n, m = self.dim_in, self.dim_out
        J = linalg.as_matrix(self.choi)
        if J.shape != (n * m, n * m):
            raise DimensionMismatch(f"Choi matrix of shape {J.shape} does not fit {n} -> {m}")
        object.__setattr__(self, "choi", J)
        if self.kraus is not None:
            ks = tuple(linalg.as_matrix(A) for A in self.kraus)
            for A in ks:
                if A.shape != (m, n):
                    raise DimensionMismatch(f"Kraus operator of shape {A.shape}, expected {(m, n)}")
            if np.abs(choi_from_kraus(ks) - J).max() > 1e-9 * _scale(J):
                raise ValueError("Kraus operators do not reproduce the Choi matrix")
            object.__setattr__(self, "kraus", ks)

    @classmethod
    def from_kraus(cls, kraus):
        ks = [linalg.as_matrix(A) for A in kraus]
        if not ks:
            raise ValueError("at least one Kraus operator is required")
        m, n = ks[0].shape
        return cls(n, m, choi_from_kraus(ks), tuple(ks))

    @classmethod
    def from_choi(cls, J, dim_in, dim_out):
        return cls(dim_in, dim_out, linalg.as_matrix(J))

    @classmethod
    def from_pauli(cls, T):
        return channel_from_pauli(T)


def choi_from_kraus(kraus):
    vs = [linalg.mat_vec(linalg.as_matrix(A)) for A in kraus]
    return sum(np.outer(v, v.conj()) for v in vs)


def kraus_from_choi(J, dim_in, dim_out, tol=DEFAULT_TOL):
    """Kraus operators from the eigendecomposition of J (rank(J) of them)."""
    J = linalg.as_hermitian(J)
    if J.shape != (dim_in * dim_out,) * 2:
        raise DimensionMismatch("Choi matrix does not match the given dimensions")
    w, V = np.linalg.eigh(J)
    if w[0] < -tol * _scale(J):
        raise NotPSD(f"Choi matrix has eigenvalue {w[0]:.3e}; the map is not completely positive")
    keep = w > tol * _scale(J)
    return [np.sqrt(wk) * linalg.vec_mat(V[:, k], dim_out, dim_in)
            for k, wk in zip(np.nonzero(keep)[0], w[keep])]


def nonneg_kraus_from_choi(J, dim_in, dim_out, tol=DEFAULT_TOL, effort="certify"):
    """Entrywise nonnegative Kraus operators from a CP factorization of J, or None.

    Raises NotCP when J is certified not completely positive (as a matrix).
    The number of operators returned is an upper bound on the CP-rank of J.
    """
    verdict = cones.cp_membership(J, tol, effort)
    if verdict.verdict == OUT:
        raise NotCP("Choi matrix is not completely positive")
    if verdict.verdict == UNKNOWN:
        return None
    B = verdict.certificate.B
    return [linalg.vec_mat(B[:, k], dim_out, dim_in).astype(float) for k in range(B.shape[1])
            if np.any(B[:, k] > 0)]


def apply_channel(ch, rho):
    """Phi(rho) = Tr_1((rho^T (x) I_m) J)."""
    rho = linalg.as_matrix(rho)
    n, m = ch.dim_in, ch.dim_out
    if rho.shape != (n, n):
        raise DimensionMismatch(f"input of shape {rho.shape} for a map on {n}x{n} matrices")
    return linalg.partial_trace(np.kron(rho.T, np.eye(m)) @ ch.choi, n, m, "first")


def apply_kraus(kraus, rho):
    return sum(A @ rho @ A.conj().T for A in kraus)


def compose(second, first):
    """second o first; Kraus operators {B_j A_k} when both are known."""
    if first.dim_out != second.dim_in:
        raise DimensionMismatch("output of the first map does not match the input of the second")
    if first.kraus is not None and second.kraus is not None:
        return ChannelRep.from_kraus([B @ A for B in second.kraus for A in first.kraus])
    n, m = first.dim_in, second.dim_out
    J = np.zeros((n * m, n * m), dtype=complex)
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            J[i * m:(i + 1) * m, j * m:(j + 1) * m] = apply_channel(second, apply_channel(first, E))
    return ChannelRep.from_choi(J, n, m)


def convex_combination(weights, channels):
    chs = list(channels)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise BadParameter("weights must be a probability vector")
    n, m = chs[0].dim_in, chs[0].dim_out
    if any((c.dim_in, c.dim_out) != (n, m) for c in chs):
        raise DimensionMismatch("channels in a convex combination must share dimensions")
    if all(c.kraus is not None for c in chs):
        return ChannelRep.from_kraus([np.sqrt(wk) * A for wk, c in zip(w, chs) if wk > 0 for A in c.kraus])
    return ChannelRep.from_choi(sum(wk * c.choi for wk, c in zip(w, chs)), n, m)


# classification ------------------------------------------------------------------


@dataclass
class ChannelClassification:
    hermiticity_preserving: bool
    completely_positive: bool
    trace_preserving: bool
    unital: bool
    cpdnn: bool
    cpcp: MembershipVerdict
    cp_preserving_qubit: bool = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cpcp.verdict == IN and not self.cpdnn:
            raise AssertionError("CPCP verdict without CPDNN")
        if self.cpdnn and not self.completely_positive:
            raise AssertionError("CPDNN verdict without complete positivity")


def _nonneg_kraus_certificate(kraus, tol):
    if kraus is None:
        return None
    if all(np.abs(A.imag).max() <= tol and A.real.min() >= -tol for A in kraus):
        B = np.column_stack([np.maximum(linalg.mat_vec(A).real, 0.0) for A in kraus])
        return cones.CPFactorization(B)
    return None


def classify(ch, effort="certify", tol=DEFAULT_TOL):
    """All structural flags of a map, with a tri-state CPCP verdict."""
    J = ch.choi
    n, m = ch.dim_in, ch.dim_out
    herm = linalg.is_hermitian(J)
    if not herm:
        none = MembershipVerdict(OUT, None, tol, {"reason": "Choi matrix is not Hermitian"})
        return ChannelClassification(False, False, False, False, False, none)
    J = linalg.as_hermitian(J)
    cp = np.linalg.eigvalsh(J)[0] >= -tol * _scale(J)
    tp = np.linalg.norm(linalg.partial_trace(J, n, m, "second") - np.eye(n)) <= tol * _scale(J)
    unital = np.linalg.norm(linalg.partial_trace(J, n, m, "first") - np.eye(m)) <= tol * _scale(J)
    dnn = cones.is_dnn(J, tol).verdict == IN
    if not dnn:
        verdict = cones.is_dnn(J, tol)
    else:
        cert = _nonneg_kraus_certificate(ch.kraus, tol)
        if cert is not None:
            verdict = MembershipVerdict(IN, cert, tol, {"route": "nonnegative Kraus operators"})
        else:
            verdict = cones.cp_membership(J, tol, effort)
    qubit_cpp = None
    if n == 2 and m == 2 and tp and cp:
        qubit_cpp = qubit_cp_preserving(ch, tol)
    return ChannelClassification(True, bool(cp), bool(tp), bool(unital), bool(dnn), verdict, qubit_cpp)


def kraus_row_structure_check(kraus, tol=DEFAULT_TOL):
    """Every operator entrywise nonnegative with at most one entry above tol per row."""
    for A in kraus:
        A = np.asarray(A, dtype=complex)
        if np.abs(A.imag).max(initial=0) > tol or A.real.min() < -tol:
            return False
        if np.any((A.real > tol).sum(axis=1) > 1):
            return False
    return True


@dataclass
class UnitalTerm:
    weight: float
    permutation: tuple  # output row i receives input index permutation[i]
    schur: np.ndarray  # CP matrix; unit diagonal when the term is itself a channel

    @property
    def matrix(self):
        n = len(self.permutation)
        P = np.zeros((n, n))
        P[np.arange(n), self.permutation] = 1.0
        return P


def _as_perm_diag(A, tol):
    n = A.shape[0]
    R = np.where(A.real > tol, A.real, 0.0)
    if np.any((R > 0).sum(axis=0) > 1) or np.any((R > 0).sum(axis=1) > 1):
        return None
    perm = -np.ones(n, dtype=int)  # perm[row] = column
    d = np.zeros(n)
    for j in range(n):
        rows = np.nonzero(R[:, j])[0]
        if rows.size:
            perm[rows[0]] = j
            d[j] = R[rows[0], j]
    free_rows = [i for i in range(n) if perm[i] < 0]
    free_cols = [j for j in range(n) if j not in set(perm.tolist())]
    for i, j in zip(free_rows, free_cols):
        perm[i] = j
    return tuple(int(p) for p in perm), d


def unital_decompose(kraus, tol=DEFAULT_TOL):
    """Group Kraus operators A_k = P_k D_k by permutation.

    Returns terms (weight, permutation, A) with Phi(rho) equal to
    sum weight * P (A o rho) P^T. The weights sum to 1 and each A is CP
    with mean diagonal 1; A has unit diagonal (so the term is a Schur
    channel followed by a permutation) whenever the diagonal of its group
    is uniform.
    """
    ks = [linalg.as_matrix(A) for A in kraus]
    n = ks[0].shape[0]
    if any(A.shape != (n, n) for A in ks):
        raise NotUnitalCPCP("unital decomposition needs square Kraus operators")
    if np.abs(sum(A.conj().T @ A for A in ks) - np.eye(n)).max() > 1e-9:
        raise NotUnitalCPCP("channel is not trace-preserving")
    if np.abs(sum(A @ A.conj().T for A in ks) - np.eye(n)).max() > 1e-9:
        raise NotUnitalCPCP("channel is not unital")
    groups = {}
    for A in ks:
        if np.abs(A.imag).max() > tol or A.real.min() < -tol:
            raise NotUnitalCPCP("Kraus operators are not entrywise nonnegative")
        pd = _as_perm_diag(A, tol)
        if pd is None:
            raise NotUnitalCPCP("a Kraus operator has two nonzero entries in a row or column")
        perm, d = pd
        groups.setdefault(perm, np.zeros((n, n)))
        groups[perm] += np.outer(d, d)
    terms = []
    for perm in sorted(groups):
        S = groups[perm]
        w = np.trace(S) / n
        if w > 0:
            terms.append(UnitalTerm(float(w), perm, S / w))
    return terms


def recombine_unital(terms, rho):
    return sum(t.weight * t.matrix @ (t.schur * rho) @ t.matrix.T for t in terms)


# qubit maps -----------------------------------------------------------------------------


def _require_qubit(ch):
    if (ch.dim_in, ch.dim_out) != (2, 2):
        raise NotQubit(f"expected a map on qubits, got {ch.dim_in} -> {ch.dim_out}")


def pauli_standard(ch, tol=DEFAULT_TOL):
    """4x4 real matrix with entries Tr(s_a Phi(s_b)) / 2 over s = (I, X, Y, Z)."""
    _require_qubit(ch)
    T = np.array([[np.trace(a @ apply_channel(ch, b)) / 2 for b in PAULI_BASIS] for a in PAULI_BASIS])
    if np.abs(T.imag).max() > tol * _scale(ch.choi):
        raise NonHermiticityPreserving("map does not preserve Hermiticity")
    return T.real


def channel_from_pauli(T):
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise DimensionMismatch("Pauli standard matrix must be 4x4")
    if not np.all(np.isfinite(T)):
        raise ValueError("Pauli standard matrix has non-finite entries")

    def phi(M):
        coeffs = np.array([np.trace(s @ M) / 2 for s in PAULI_BASIS])
        out = T @ coeffs
        return sum(c * s for c, s in zip(out, PAULI_BASIS))

    J = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = 1.0
            J[2 * i:2 * i + 2, 2 * j:2 * j + 2] = phi(E)
    return ChannelRep(2, 2, J, None, T.copy())


def _pauli_of(ch, tol):
    return ch.pauli_standard if ch.pauli_standard is not None else pauli_standard(ch, tol)


def qubit_cp_preserving(ch, tol=DEFAULT_TOL):
    """CP-preserving test for qubit channels via the Pauli standard matrix."""
    _require_qubit(ch)
    T = _pauli_of(ch, tol)
    tx, ty = T[1, 0], T[2, 0]
    Txx, Txz, Tyx, Tyz = T[1, 1], T[1, 3], T[2, 1], T[2, 3]
    if max(abs(ty), abs(Tyx), abs(Tyz)) > tol:
        return False
    if tx < abs(Txz) - tol:
        return False
    return bool(Txx >= -np.sqrt(max(tx * tx - Txz * Txz, 0.0)) - np.sqrt(tol))


def qubit_cpcp(ch, tol=DEFAULT_TOL):
    """CPCP test for qubit channels via the Pauli standard matrix."""
    _require_qubit(ch)
    T = _pauli_of(ch, tol)
    zero = [T[1, 2], T[2, 0], T[2, 1], T[2, 3], T[3, 1], T[3, 2]]
    if max(abs(z) for z in zero) > tol:
        return False
    tx, tz = T[1, 0], T[3, 0]
    Txx, Txz, Tyy, Tzz = T[1, 1], T[1, 3], T[2, 2], T[3, 3]
    return bool(tx >= abs(Txz) - tol and Txx >= abs(Tyy) - tol and tz >= abs(Tzz) - 1 - tol)


def bloch_vector(rho):
    rho = linalg.as_hermitian(rho)
    if rho.shape != (2, 2):
        raise NotQubit("expected a 2x2 density matrix")
    return np.array([np.trace(s @ rho).real for s in PAULI_BASIS[1:]])


def most_resourceful_channel(target, tol=DEFAULT_TOL):
    """A CP-preserving qubit channel mapping (I + Y)/2 to ``target``.

    It sends |0><0| and |1><1| to I/2 and |0><1| to i(aX + bY + cZ)/2,
    where (a, b, c) is the Bloch vector of the target.
    """
    try:
        rho = linalg.as_hermitian(target)
    except Exception as exc:
        raise NotDensityMatrix(str(exc)) from exc
    if rho.shape != (2, 2):
        raise NotDensityMatrix("target must be a 2x2 density matrix")
    if abs(np.trace(rho).real - 1) > tol or np.linalg.eigvalsh(rho)[0] < -tol:
        raise NotDensityMatrix("target must be PSD with unit trace")
    a, b, c = bloch_vector(rho)
    K = a * PAULI["X"] + b * PAULI["Y"] + c * PAULI["Z"]
    J = 0.5 * np.block([[np.eye(2), 1j * K], [-1j * K, np.eye(2)]])
    T = np.zeros((4, 4))
    T[0, 0] = 1.0
    T[1:, 2] = (a, b, c)
    return ChannelRep(2, 2, J, None, T)


# catalogue -------------------------------------------------------------------------------


def _prob(p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise BadParameter(f"probability must lie in [0, 1], got {p}")
    return p


def _cp_factor(sigma, what):
    sigma = linalg.as_hermitian(sigma)
    v = cones.cp_membership(sigma)
    if v.verdict != IN:
        raise BadParameter(f"{what} must be a certified completely positive matrix")
    return v.certificate.B


def _swap_matrix(m, n):
    """Permutation taking |a>|b> (a < m, b < n) to |b>|a>."""
    P = np.zeros((m * n, m * n))
    for a, b in itertools.product(range(m), range(n)):
        P[b * m + a, a * n + b] = 1.0
    return P


def measure_in_basis(basis):
    """Phi(X) = sum_j <v_j|X|v_j> |j><j| for the orthonormal columns v_j of ``basis``."""
    V = linalg.as_matrix(basis)
    n = V.shape[0]
    if V.shape != (n, n) or np.abs(V.conj().T @ V - np.eye(n)).max() > 1e-9:
        raise BadParameter("basis must be a square matrix with orthonormal columns")
    return ChannelRep.from_kraus([np.outer(np.eye(n)[j], V[:, j].conj()) for j in range(n)])


def catalogue(name, **params):
    """Named CPCP channels (sym_projection is a trace-decreasing subchannel)."""
    if name == "identity":
        n = int(params.get("n", 2))
        return ChannelRep.from_kraus([np.eye(n)])
    if name == "pauli_x":
        return ChannelRep.from_kraus([PAULI["X"].real])
    if name == "classical_error":
        p = _prob(params["p"])
        return ChannelRep.from_kraus([np.sqrt(p) * np.eye(2), np.sqrt(1 - p) * PAULI["X"].real])
    if name == "measure_prepare":
        states = params["states"]
        if not states:
            raise BadParameter("measure_prepare needs at least one state")
        mats = [linalg.as_hermitian(s) for s in states]
        m = mats[0].shape[0]
        n = len(mats)
        ks = []
        for j, s in enumerate(mats):
            if s.shape != (m, m):
                raise BadParameter("prepared states must share one dimension")
            if abs(np.trace(s).real - 1) > 1e-9:
                raise BadParameter("prepared states must have unit trace")
            for col in _cp_factor(s, "prepared state").T:
                A = np.zeros((m, n))
                A[:, j] = col
                ks.append(A)
        return ChannelRep.from_kraus(ks)
    if name == "partial_dephase":
        p = _prob(params["p"])
        n = int(params.get("n", 2))
        ks = [np.sqrt(p) * np.eye(n)]
        for i, j in itertools.product(range(n), repeat=2):
            A = np.zeros((n, n))
            A[i, j] = np.sqrt((1 - p) / n)
            ks.append(A)
        return ChannelRep.from_kraus([A for A in ks if np.any(A)])
    if name == "partial_trace":
        m, n = int(params["m"]), int(params["n"])
        return ChannelRep.from_kraus([np.kron(np.eye(m)[k], np.eye(n)) for k in range(m)])
    if name == "tensor_prepare":
        sigma = linalg.as_hermitian(params["sigma"])
        n = int(params.get("n", 2))
        if abs(np.trace(sigma).real - 1) > 1e-9:
            raise BadParameter("prepared state must have unit trace")
        B = _cp_factor(sigma, "sigma")
        return ChannelRep.from_kraus([np.kron(np.eye(n), b.reshape(-1, 1)) for b in B.T])
    if name == "stochastic":
        S = np.asarray(params["S"], dtype=float)
        if S.ndim != 2 or S.min() < 0 or np.abs(S.sum(axis=0) - 1).max() > 1e-9:
            raise BadParameter("S must be entrywise nonnegative with unit column sums")
        return ChannelRep.from_kraus([S])
    if name == "swap":
        m, n = int(params["m"]), int(params["n"])
        return ChannelRep.from_kraus([_swap_matrix(m, n)])
    if name == "schur":
        A = linalg.as_hermitian(params["A"])
        if np.abs(np.diag(A) - 1).max() > 1e-9:
            raise BadParameter("Schur matrix must have unit diagonal")
        B = _cp_factor(A, "Schur matrix")
        return ChannelRep.from_kraus([np.diag(b) for b in B.T])
    if name == "fully_decohere":
        n = int(params.get("n", 2))
        return ChannelRep.from_kraus([np.diag(np.eye(n)[k]) for k in range(n)])
    if name == "sym_projection":
        n = int(params.get("n", 2))
        S = 0.5 * (np.eye(n * n) + _swap_matrix(n, n))
        return ChannelRep.from_kraus([S])
    raise BadParameter(f"unknown catalogue channel {name!r}")


CATALOGUE_NAMES = ("identity", "pauli_x", "classical_error", "measure_prepare", "partial_dephase",
                   "partial_trace", "tensor_prepare", "stochastic", "swap", "schur",
                   "fully_decohere", "sym_projection")


# fixtures from the theory ---------------------------------------------------------------


def cpdnn_not_cpcp_choi():
    """6x6 Choi matrix that is DNN but not CP (its lower 5x5 block contains the Horn-refuted state)."""
    return np.array([
        [3, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 1],
        [0, 1, 2, 1, 0, 0],
        [0, 0, 1, 2, 1, 0],
        [0, 0, 0, 1, 1, 1],
        [0, 1, 0, 0, 1, 3],
    ], dtype=float) / 6


def l1_counterexample():
    """Kraus operators and input state for which the l1 measure increases under a CPCP channel."""
    s = 1 / np.sqrt(2)
    A1 = np.array([[s, 0, 0], [s, 0, 0], [0, 1, 0]])
    A2 = np.zeros((3, 3))
    A2[2, 2] = 1.0
    rho = 0.5 * np.array([[1, -1, 0], [-1, 1, 0], [0, 0, 0]], dtype=complex)
    return ChannelRep.from_kraus([A1, A2]), rho
