"""Measures of non-negativity: 1-norm of pure states, robustness, trace distance, l1.

Robustness minimizes s over states sigma with (rho + s sigma)/(1 + s) in the
target cone; substituting tau = s sigma makes that a single conic program
(tau Hermitian PSD, rho + tau in the cone, minimize Tr tau). Trace distances
minimize ||rho - sigma||_tr over sigma in the cone, using rho - sigma = P - N
with P, N Hermitian PSD. CP itself is only bracketed, by DNN from below and
DD from above.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import channels, cones, linalg
from ._program import ProgramBuilder, evaluate, expr_sum
from .errors import (BadParameter, NotDensityMatrix, NotUnitNorm, SolverStalled,
                     ZeroVector)
from .solver import NONNEG, SOC, SOLVED, ConicProgram, solve

MIN_NET, MAX_NET = 8, 256
REVALIDATE_TOL = 1e-7


@dataclass
class MeasureResult:
    kind: str
    value: float = None
    lower: float = None
    upper: float = None
    certificates: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value is not None:
            self.lower = self.upper = self.value
        if self.lower is not None and self.upper is not None and self.lower > self.upper + 1e-9:
            raise ValueError(f"{self.kind}: lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def estimate(self):
        return self.value if self.value is not None else 0.5 * (self.lower + self.upper)

    def contains(self, x, slack=0.0):
        return self.lower - slack <= x <= self.upper + slack


@dataclass
class NetDecomposition:
    """v = sum_j phases[j] * vectors[j] with vectors[j] >= 0 and phases the k-th roots of unity."""

    k: int
    phases: np.ndarray
    vectors: np.ndarray  # k x n
    objective: float  # optimal value of the net program

    def reconstruct(self):
        return self.phases @ self.vectors

    @property
    def cost(self):
        return float(np.linalg.norm(self.vectors, axis=1).sum())


def _density(rho, tol=1e-9):
    try:
        rho = linalg.as_hermitian(rho)
    except Exception as exc:
        raise NotDensityMatrix(str(exc)) from exc
    if abs(np.trace(rho).real - 1) > tol * max(1, rho.shape[0]):
        raise NotDensityMatrix(f"trace is {np.trace(rho).real:.6g}, not 1")
    if np.linalg.eigvalsh(rho)[0] < -tol * max(1, rho.shape[0]):
        raise NotDensityMatrix("matrix is not PSD")
    return rho


def _unit(v):
    v = np.asarray(v, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ZeroVector("vector is zero")
    if abs(nrm - 1) > 1e-9:
        raise NotUnitNorm(f"vector has norm {nrm:.6g}, expected 1")
    return v


# 1-norm of non-negativity -------------------------------------------------------------


def net_error_factor(k):
    """Multiplicative gap 1 + 10 sin(pi / 2k) between the net value and the norm."""
    return 1 + 10 * np.sin(np.pi / (2 * k))


def _net_program(v, k):
    """SOC blocks (t_j, u_j), nonnegative copies w_j = u_j, and sum_j c_j u_j = v split into parts."""
    n = v.size
    phases = np.exp(2j * np.pi * np.arange(k) / k)
    soc_off = np.arange(k) * (n + 1)
    nn_off = k * (n + 1) + np.arange(k) * n
    N = k * (2 * n + 1)
    jj, ii = np.meshgrid(np.arange(k), np.arange(n), indexing="ij")
    u = (soc_off[jj] + 1 + ii).ravel()
    w = (nn_off[jj] + ii).ravel()
    copy_rows = 2 * n + np.arange(k * n)
    rows = np.concatenate([ii.ravel(), n + ii.ravel(), copy_rows, copy_rows])
    cols = np.concatenate([u, u, u, w])
    vals = np.concatenate([phases[jj].real.ravel(), phases[jj].imag.ravel(),
                           np.ones(k * n), -np.ones(k * n)])
    A = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(2 * n + k * n, N))
    b = np.concatenate([v.real, v.imag, np.zeros(k * n)])
    c = np.zeros(N)
    c[soc_off] = 1.0
    blocks = [SOC(n + 1)] * k + [NONNEG(n)] * k
    return ConicProgram(c, A, b, blocks), phases, soc_off


def _dual_norm_bound(w):
    """max over theta of ||(Re(e^{i theta} conj(w)))_+||, evaluated exactly.

    Between breakpoints theta = arg(w_i) +- pi/2 the active set is fixed and
    the squared norm is A + |Z| cos(2 theta + arg Z), so the maximum is at a
    breakpoint or at a critical point of that cosine.
    """
    w = np.asarray(w, dtype=complex)
    r, psi = np.abs(w), np.angle(w)
    live = r > 0
    if not live.any():
        return 0.0
    r, psi = r[live], psi[live]
    bps = np.sort(np.mod(np.concatenate([psi + np.pi / 2, psi - np.pi / 2]), 2 * np.pi))
    cands = [bps]
    edges = np.concatenate([bps, [bps[0] + 2 * np.pi]])
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        act = np.cos(mid - psi) > 0
        if not act.any():
            continue
        Z = 0.5 * np.sum(r[act] ** 2 * np.exp(-2j * psi[act]))
        base = -np.angle(Z) / 2
        crit = base + np.pi * np.arange(-2, 4) / 1.0
        cands.append(crit[(crit > a) & (crit < b)])
    theta = np.concatenate(cands)
    vals = np.maximum(r[None, :] * np.cos(theta[:, None] - psi[None, :]), 0.0)
    return float(np.sqrt(np.max(np.sum(vals ** 2, axis=1))))


def net_decomposition(v, k):
    """Solve the net program with k phases; returns (NetDecomposition, dual vector, status)."""
    v = np.asarray(v, dtype=complex).ravel()
    if k % 4 or k < 4:
        raise BadParameter("number of phases must be a positive multiple of 4")
    n = v.size
    prog, phases, soc_off = _net_program(v, k)
    sol = solve(prog)
    x = sol.x
    U = np.stack([x[o + 1:o + 1 + n] for o in soc_off])
    dec = NetDecomposition(k, phases, np.maximum(U, 0.0), float(sol.primal_objective))
    w = sol.y[:n] + 1j * sol.y[n:2 * n]
    return dec, w, sol


def _bracket_from_solve(v, dec, w, optimal):
    resid = v - dec.reconstruct()
    upper = dec.cost + 2 * np.linalg.norm(resid)
    D = _dual_norm_bound(w)
    dual_lower = np.real(np.vdot(w, v)) / D if D > 0 else 0.0
    theorem_lower = dec.objective / net_error_factor(dec.k) if optimal else 0.0
    return max(dual_lower, theorem_lower, np.linalg.norm(v)), upper, dual_lower


def nnorm_1(v, eps=1e-3):
    """Bracket on the 1-norm of non-negativity of v.

    The lower bound is the best of ||v||, the net-program guarantee and an
    exact dual bound Re(<w, v>) / D(w); the upper bound is the cost of the
    clipped decomposition plus twice the norm of its reconstruction error,
    capped by min(sqrt(n), 2) ||v||. The number of phases doubles from 8 to
    256 until the bracket width is at most 2 eps times the value.
    """
    v = np.asarray(v, dtype=complex).ravel()
    if not np.all(np.isfinite(v)):
        raise BadParameter("vector has non-finite entries")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ZeroVector("vector is zero")
    eps = float(eps)
    if not 0 < eps < 1:
        raise BadParameter("eps must lie in (0, 1)")
    n = v.size
    cap = min(np.sqrt(n), 2.0) * nrm
    lower, upper, best = nrm, cap, None
    k = MIN_NET
    history = []
    while k <= MAX_NET:
        dec, w, sol = net_decomposition(v, k)
        lo, up, dual_lo = _bracket_from_solve(v, dec, w, sol.status in SOLVED)
        history.append({"k": k, "status": sol.status, "objective": dec.objective, "lower": lo, "upper": up})
        lower = max(lower, lo)
        if up < upper:
            upper, best = up, dec
        if best is None:
            best = dec
        if upper - lower <= 2 * eps * lower:
            break
        k *= 2
    upper = max(upper, lower)
    return MeasureResult("nnorm", None, float(lower), float(upper),
                         {"net": best}, {"history": history, "eps": eps})


def nnorm_1_qubit(v):
    """Closed form sqrt(2 |min(Re(v1 conj v2), 0) + i Im(v1 conj v2)| + 1) for unit qubit vectors."""
    v = _unit(v)
    if v.size != 2:
        raise BadParameter("expected a 2-vector")
    z = v[0] * np.conj(v[1])
    return float(np.sqrt(2 * abs(min(z.real, 0.0) + 1j * z.imag) + 1))


def robustness_pure(v, eps=1e-3):
    """Bracket on the CP robustness of |v><v| from the 1-norm: value = norm^2 - 1."""
    v = np.asarray(v, dtype=complex).ravel()
    if np.linalg.norm(v) == 0:
        raise ZeroVector("vector is zero")
    v = _unit(v)
    r = nnorm_1(v, eps)
    cap = min(v.size - 1, 3)
    lo, up = r.lower ** 2 - 1, min(r.upper ** 2 - 1, cap)
    return MeasureResult("robustness-pure", None, float(min(lo, up)), float(up), r.certificates, r.info)


# closed forms ---------------------------------------------------------------------------


def qubit_closed_form(rho):
    """2 |min(Re rho_01, 0) + i Im rho_01|, shared by every measure on qubits."""
    rho = linalg.as_hermitian(rho)
    if rho.shape != (2, 2):
        raise BadParameter("expected a 2x2 matrix")
    z = rho[0, 1]
    return float(2 * abs(min(z.real, 0.0) + 1j * z.imag))


def l1_measure(rho):
    """Sum over entries of |min(Re rho_ij, 0) + i Im rho_ij|."""
    rho = linalg.as_hermitian(rho)
    return float(np.sum(np.abs(np.minimum(rho.real, 0.0) + 1j * rho.imag)))


def l1_coherence(rho):
    rho = linalg.as_hermitian(rho)
    return float(np.sum(np.abs(rho)) - np.sum(np.abs(np.diag(rho))))


# robustness -------------------------------------------------------------------------------


def _solve_or_raise(pb, what):
    prog = pb.build()
    sol = solve(prog)
    if sol.status not in SOLVED:
        raise SolverStalled(f"{what}: solver finished with status {sol.status} ({sol.message})")
    return sol


def _in_cone(M, cone, tol):
    test = cones.is_dnn if cone == "DNN" else cones.is_dd
    return test(M, tol).verdict == cones.IN


def robustness(rho, cone="DNN"):
    """Robustness of non-negativity with respect to DNN or DD, by one conic solve."""
    cone = cone.upper()
    if cone not in ("DNN", "DD"):
        raise BadParameter(f"robustness is computed exactly only for DNN and DD, not {cone}")
    rho = _density(rho)
    n = rho.shape[0]
    pb = ProgramBuilder()
    Rt, St = pb.herm_psd(n)
    Re, Im = rho.real, rho.imag
    for i in range(n):
        for j in range(i + 1, n):
            pb.eq(St[i, j], -Im[i, j])
    if cone == "DNN":
        X = pb.sym_psd(n)
        for i in range(n):
            for j in range(i, n):
                pb.eq(X[i, j] - Rt[i, j], Re[i, j])
                if i != j:
                    pb.ge(X[i, j])
    else:
        for i in range(n):
            off = expr_sum(Rt[i, j] + Re[i, j] for j in range(n) if j != i)
            pb.ge(Rt[i, i] + Re[i, i] - off)
            for j in range(i + 1, n):
                pb.ge(Rt[i, j] + Re[i, j])
    pb.minimize(expr_sum(Rt[i, i] for i in range(n)))
    sol = _solve_or_raise(pb, f"robustness ({cone})")
    tau = evaluate(Rt, sol.x) + 1j * evaluate(St, sol.x)
    tau = (tau + tau.conj().T) / 2
    s = max(float(np.trace(tau).real), 0.0)
    sigma = tau / s if s > 1e-12 else None
    mixed = (rho + tau) / (1 + s)
    certs = {"s": s, "sigma": sigma, "mixed": mixed}
    ok = _in_cone(mixed, cone, REVALIDATE_TOL) and (
        sigma is None or np.linalg.eigvalsh(sigma)[0] >= -REVALIDATE_TOL)
    return MeasureResult(f"robustness-{cone.lower()}", s, certificates=certs,
                         info={"revalidated": bool(ok), "gap": sol.gap, "status": sol.status,
                               "dual_objective": sol.dual_objective})


def robustness_cp_bounds(rho, effort="certify"):
    """Bracket on the CP robustness: DNN robustness and witnesses below, DD robustness capped at min(n - 1, 3) above."""
    rho = _density(rho)
    n = rho.shape[0]
    dnn = robustness(rho, "DNN")
    if n <= 4:
        return MeasureResult("robustness-cp", dnn.value, certificates={"dnn": dnn},
                             info={"route": "DNN equals CP for n <= 4"})
    dd = robustness(rho, "DD")
    lower, certs = dnn.value, {"dnn": dnn, "dd": dd}
    if effort == "certify":
        wit = cones.dual_witness_for(rho)
        if wit.verdict == cones.OUT:
            certs["witness"] = wit.certificate
            lower = max(lower, -wit.certificate.value)
    # the CP robustness never exceeds min(n - 1, 3), whatever the DD value
    upper = max(min(dd.value, min(n - 1, 3)), lower)
    return MeasureResult("robustness-cp", None, float(lower), float(upper), certs)


# trace distance -----------------------------------------------------------------------------


def trace_distance(rho, cone="DNN", mode="normalized"):
    """min ||rho - sigma||_tr over sigma in the cone; mode "normalized" fixes Tr sigma = 1.

    For cone="CP" only the bracket [DNN value, DD value] is reported.
    """
    cone = cone.upper()
    if mode not in ("normalized", "scaled"):
        raise BadParameter(f"mode must be 'normalized' or 'scaled', not {mode!r}")
    if cone == "CP":
        rho = _density(rho)
        lo = trace_distance(rho, "DNN", mode)
        if rho.shape[0] <= 4:
            return MeasureResult(f"trace-cp-{mode}", lo.value, certificates={"dnn": lo})
        up = trace_distance(rho, "DD", mode)
        return MeasureResult(f"trace-cp-{mode}", None, lo.value, max(up.value, lo.value),
                             {"dnn": lo, "dd": up})
    if cone not in ("DNN", "DD"):
        raise BadParameter(f"unknown cone {cone!r}")
    rho = _density(rho)
    n = rho.shape[0]
    pb = ProgramBuilder()
    Rp, Sp = pb.herm_psd(n)
    Rn, Sn = pb.herm_psd(n)
    if cone == "DNN":
        sig = pb.sym_psd(n)
        for i in range(n):
            for j in range(i + 1, n):
                pb.ge(sig[i, j])
    else:
        sig = np.empty((n, n), dtype=object)
        off = pb.nonneg(n * (n - 1) // 2)
        slack = pb.nonneg(n)
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                sig[i, j] = sig[j, i] = off[k]
                k += 1
        for i in range(n):
            sig[i, i] = slack[i] + expr_sum(sig[i, j] for j in range(n) if j != i)
    for i in range(n):
        for j in range(i, n):
            pb.eq(Rp[i, j] - Rn[i, j] + sig[i, j], rho.real[i, j])
            if i != j:
                pb.eq(Sp[i, j] - Sn[i, j], rho.imag[i, j])
    if mode == "normalized":
        pb.eq(expr_sum(sig[i, i] for i in range(n)), 1.0)
    pb.minimize(expr_sum(Rp[i, i] + Rn[i, i] for i in range(n)))
    sol = _solve_or_raise(pb, f"trace distance ({cone}, {mode})")
    sigma = evaluate(sig, sol.x)
    value = float(sol.primal_objective)
    achieved = linalg.trace_norm(rho - sigma)
    ok = _in_cone(sigma, cone, REVALIDATE_TOL) and abs(achieved - value) <= 1e-6
    return MeasureResult(f"trace-{cone.lower()}-{mode}", value, certificates={"sigma": sigma},
                         info={"revalidated": bool(ok), "achieved": achieved, "status": sol.status,
                               "scale": float(np.trace(sigma))})


# dispatch and the axiom suite -----------------------------------------------------------------


MEASURE_KINDS = ("robustness-dnn", "robustness-dd", "robustness-cp", "l1", "trace-dnn",
                 "trace-dnn-scaled", "trace-dd", "trace-dd-scaled", "trace-cp")


def measure_value(kind, rho):
    """Scalar value of a state measure (upper end of the bracket for CP-side kinds)."""
    if kind == "robustness-dnn":
        return robustness(rho, "DNN").value
    if kind == "robustness-dd":
        return robustness(rho, "DD").value
    if kind == "robustness-cp":
        return robustness_cp_bounds(rho).upper
    if kind == "l1":
        return l1_measure(rho)
    if kind.startswith("trace-"):
        parts = kind.split("-")
        mode = "scaled" if parts[-1] == "scaled" else "normalized"
        r = trace_distance(rho, parts[1].upper(), mode)
        return r.upper
    raise BadParameter(f"unknown measure kind {kind!r}")


def random_density(n, rng, rank=None):
    rank = rank or int(rng.integers(1, n + 1))
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_cp_state(n, rng):
    B = rng.random((n, int(rng.integers(1, 2 * n + 1))))
    B *= rng.random(B.shape) < 0.7
    if not B.any():
        B[0, 0] = 1.0
    rho = B @ B.T
    return rho / np.trace(rho)


def _random_cp_unit_diagonal(n, rng):
    M = random_cp_state(n, rng) + 1e-3 * np.eye(n)
    d = 1 / np.sqrt(np.diag(M))
    return M * np.outer(d, d)


def random_cpcp_channel(rng, max_in=3):
    """A catalogue channel with random parameters (trace-preserving entries only)."""
    name = rng.choice(["identity", "pauli_x", "classical_error", "measure_prepare", "partial_dephase",
                       "partial_trace", "tensor_prepare", "stochastic", "swap", "schur",
                       "fully_decohere"])
    n = int(rng.integers(2, max_in + 1))
    if name == "identity":
        return channels.catalogue(name, n=n)
    if name in ("pauli_x",):
        return channels.catalogue(name)
    if name == "classical_error":
        return channels.catalogue(name, p=rng.random())
    if name == "measure_prepare":
        m = int(rng.integers(2, 4))
        return channels.catalogue(name, states=[random_cp_state(m, rng) for _ in range(n)])
    if name == "partial_dephase":
        return channels.catalogue(name, p=rng.random(), n=n)
    if name == "partial_trace":
        return channels.catalogue(name, m=2, n=2)
    if name == "tensor_prepare":
        return channels.catalogue(name, sigma=random_cp_state(2, rng), n=2)
    if name == "stochastic":
        return channels.catalogue(name, S=np.eye(n)[rng.permutation(n)])
    if name == "swap":
        return channels.catalogue(name, m=2, n=2)
    if name == "schur":
        return channels.catalogue(name, A=_random_cp_unit_diagonal(n, rng))
    return channels.catalogue("fully_decohere", n=n)


def random_nonneg_instrument(n, rng, outcomes=None):
    """Nonnegative Kraus operators with one nonzero per row and sum A_i^T A_i = I."""
    outcomes = outcomes or int(rng.integers(2, 4))
    while True:
        ks = []
        for _ in range(outcomes):
            A = np.zeros((n, n))
            for r in range(n):
                if rng.random() < 0.7:
                    A[r, rng.integers(n)] = rng.random()
            ks.append(A)
        D = sum(A.T @ A for A in ks).diagonal()
        if D.min() > 1e-3:
            return [A / np.sqrt(D) for A in ks]


@dataclass
class AxiomReport:
    kind: str
    trials: int
    violations: list = field(default_factory=list)  # (axiom, lhs, rhs, instance)
    checked: dict = field(default_factory=dict)

    def count(self, axiom):
        return sum(1 for v in self.violations if v[0] == axiom)

    @property
    def passed(self):
        return not self.violations


def monotone_axiom_suite(kind, trials=200, seed=0, tol=1e-7, axioms=("C1", "C2", "C3", "C2b")):
    """Check freeness, monotonicity, convexity and strong monotonicity on random instances.

    C1 samples CP states, C2 random catalogue channels, C3 convex pairs and
    C2b instruments with nonnegative Kraus operators. For the l1 measure the
    known channel that increases it is checked first as a positive control.
    """
    rng = np.random.default_rng(seed)
    rep = AxiomReport(kind, trials, [], {a: 0 for a in axioms})

    def value(rho):
        return measure_value(kind, rho)

    def record(axiom, lhs, rhs, instance):
        rep.checked[axiom] += 1
        if lhs > rhs + tol:
            rep.violations.append((axiom, float(lhs), float(rhs), instance))

    if kind == "l1" and "C2" in axioms:
        ch, rho = channels.l1_counterexample()
        record("C2", value(channels.apply_channel(ch, rho)), value(rho), {"fixture": "l1 counterexample"})
    for t in range(trials):
        if "C1" in axioms:
            sigma = random_cp_state(int(rng.integers(2, 5)), rng)
            record("C1", value(sigma), 0.0, {"state": sigma})
        if "C2" in axioms:
            ch = random_cpcp_channel(rng)
            rho = random_density(ch.dim_in, rng)
            out = channels.apply_channel(ch, rho)
            out = (out + out.conj().T) / 2
            out /= np.trace(out).real
            record("C2", value(out), value(rho), {"choi": ch.choi, "state": rho})
        if "C3" in axioms:
            n = int(rng.integers(2, 5))
            r1, r2, p = random_density(n, rng), random_density(n, rng), rng.random()
            record("C3", value(p * r1 + (1 - p) * r2), p * value(r1) + (1 - p) * value(r2),
                   {"states": (r1, r2), "p": p})
        if "C2b" in axioms:
            n = int(rng.integers(2, 4))
            rho = random_density(n, rng)
            total = 0.0
            ks = random_nonneg_instrument(n, rng)
            for A in ks:
                out = A @ rho @ A.T
                p = np.trace(out).real
                if p > 1e-10:
                    total += p * value(out / p)
            record("C2b", total, value(rho), {"kraus": ks, "state": rho})
    return rep
