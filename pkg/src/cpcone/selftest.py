"""Golden checks of the known closed-form values, used by the CLI ``selftest`` verb."""

import time
from dataclasses import dataclass

import numpy as np

from . import channels, cones, fixtures, linalg, measures
from .errors import NotCP

S5 = np.sqrt(5)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float


def _close(a, b, tol):
    return abs(a - b) <= tol


def _checks():
    rng = np.random.default_rng(2024)
    rho5 = fixtures.dnn_not_cp_state()
    four = fixtures.fourier_state()
    H = cones.horn_matrix(1.0)

    def horn_lambda_max():
        lam = np.linalg.eigvalsh(H)[-1]
        return _close(lam, S5 + 1, 1e-12), f"lambda_max = {lam:.12f}"

    def tp_choi_partial_trace():
        ch = channels.catalogue("classical_error", p=0.3)
        err = np.abs(linalg.partial_trace(ch.choi, 2, 2, "second") - np.eye(2)).max()
        return err < 1e-12, f"max deviation {err:.1e}"

    def robustness_zero_on_dnn_state():
        v = measures.robustness(rho5, "DNN").value
        return abs(v) < 1e-7, f"value {v:.2e}"

    def dnn_state_is_dnn():
        return cones.is_dnn(rho5).verdict == cones.IN, "is_dnn"

    def y_plus_not_dnn():
        v = cones.is_dnn(fixtures.y_plus_state())
        return v.verdict == cones.OUT and v.certificate.kind == "imaginary", v.verdict

    def horn_refutes_state():
        v = cones.cp_membership(rho5, effort="certify")
        val = v.certificate.value if v.verdict == cones.OUT else None
        ok = v.verdict == cones.OUT and _close(val, -1 / 9, 1e-9) and cones.check_certificate(rho5, v)
        return ok, f"{v.verdict}, Tr(W rho) = {val}"

    def small_dnn_is_cp():
        B = rng.random((4, 3))
        R = B @ B.T + 0.1 * np.eye(4)
        v = cones.cp_membership(R / np.trace(R))
        return v.verdict == cones.IN and cones.check_certificate(R / np.trace(R), v), v.verdict

    def horn_outside_dnn_dual():
        return cones.copositive_level0(H).verdict == cones.OUT, "level 0"

    def refute_inconclusive_on_copositive():
        a = cones.copositive_refute(H).verdict
        b = cones.copositive_refute(fixtures.fourier_witness().real).verdict
        return a == b == cones.UNKNOWN, f"horn {a}, fourier {b}"

    def horn_family():
        ok1 = np.array_equal(H[0], [1, -1, 1, 1, -1])
        Wg = cones.horn_matrix(cones.GOLDEN_X)
        ok2 = np.abs(fixtures.fourier_witness().real - (S5 - 2) * Wg).max() < 1e-12
        return ok1 and ok2, "rows and golden-parameter identity"

    def horn_identity():
        worst = 0.0
        for _ in range(200):
            v = rng.random(5)
            lhs, rhs = cones.horn_certificate_eval(v)
            worst = max(worst, abs(lhs - rhs), -lhs)
        return worst < 1e-12, f"worst {worst:.1e}"

    def no_factorization_of_refuted_state():
        v = cones.cp_factorize_heuristic(rho5, 14, seeds=4, max_iter=1000)
        return v.verdict == cones.UNKNOWN, v.verdict

    def dd_cp_rank_bound():
        A = rng.random((5, 5))
        A = (A + A.T) / 2
        np.fill_diagonal(A, A.sum(axis=1) + 0.1)
        m = cones.cp_rank_upper(A / np.trace(A))
        return m is not None and m <= 14, f"m = {m}"

    def scaled_horn_witness():
        v = cones.dual_witness_for(rho5)
        val = -v.certificate.value
        return val >= 1 / (9 * S5 + 9) - 1e-9, f"{val:.10f}"

    def fourier_witness_value():
        v = cones.dual_witness_for(four)
        val = -v.certificate.value
        exact = -np.trace(fixtures.fourier_witness() @ four).real
        return _close(val, 14 - 5 * S5, 1e-6) and _close(exact, 14 - 5 * S5, 1e-12), f"{val:.10f}"

    def pauli_x_choi_permutation():
        J = channels.catalogue("pauli_x").choi.real
        J0 = channels.catalogue("identity", n=2).choi.real
        P = np.kron(np.eye(2), np.array([[0, 1], [1, 0]]))
        return np.array_equal(J, P @ J0 @ P), "J = P J_id P"

    def measure_basis_choi():
        V = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        ch = channels.measure_in_basis(V)
        J = sum(np.kron(np.outer(V[:, j], V[:, j].conj()).conj(), np.diag(np.eye(2)[j])) for j in range(2))
        return np.abs(ch.choi - J).max() < 1e-12, "choi formula"

    def partial_trace_kraus():
        ch = channels.catalogue("partial_trace", m=2, n=2)
        ks = channels.nonneg_kraus_from_choi(ch.choi, 4, 2)
        return ks is not None and channels.kraus_row_structure_check(ks), f"{len(ks)} operators"

    def cpdnn_choi_not_cp():
        try:
            channels.nonneg_kraus_from_choi(channels.cpdnn_not_cpcp_choi(), 2, 3)
        except NotCP:
            return True, "NotCP"
        return False, "no error"

    def cpdnn_channel():
        c = channels.classify(channels.ChannelRep.from_choi(channels.cpdnn_not_cpcp_choi(), 2, 3))
        return c.cpdnn and c.cpcp.verdict == cones.OUT, f"cpdnn {c.cpdnn}, cpcp {c.cpcp.verdict}"

    def basis_measurement_not_cpcp():
        c = channels.classify(channels.measure_in_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2)))
        return c.cpcp.verdict == cones.OUT, c.cpcp.verdict

    def swap_cpcp():
        c = channels.classify(channels.catalogue("swap", m=2, n=2))
        return c.cpcp.verdict == cones.IN, c.cpcp.verdict

    def l1_counterexample_kraus():
        ch, _ = channels.l1_counterexample()
        return channels.kraus_row_structure_check(ch.kraus), "rows"

    def unital_terms():
        fd = channels.unital_decompose(channels.catalogue("fully_decohere", n=3).kraus)
        ok1 = len(fd) == 1 and np.allclose(fd[0].schur, np.eye(3)) and fd[0].permutation == (0, 1, 2)
        ce = channels.unital_decompose(channels.catalogue("classical_error", p=0.3).kraus)
        ok2 = sorted(round(t.weight, 12) for t in ce) == [0.3, 0.7]
        return ok1 and ok2, f"{len(fd)} and {len(ce)} terms"

    def resourceful_channel_column():
        a, b, c = 0.3, -0.4, 0.5
        target = 0.5 * (np.eye(2) + a * channels.PAULI["X"] + b * channels.PAULI["Y"] + c * channels.PAULI["Z"])
        ch = channels.most_resourceful_channel(target)
        T = channels.pauli_standard(channels.ChannelRep.from_choi(ch.choi, 2, 2))
        return np.abs(T[:, 2] - [0, a, b, c]).max() < 1e-12, str(T[:, 2].round(12))

    def resourceful_channel_cp_preserving():
        ch = channels.most_resourceful_channel(np.diag([0.7, 0.3]))
        return channels.qubit_cp_preserving(ch), "part (a) conditions"

    def classical_error_qubit_cpcp():
        return channels.qubit_cpcp(channels.catalogue("classical_error", p=0.3)), "part (b) conditions"

    def unital_inequality_fails():
        T = np.diag([1.0, 0.5, 0.8, 0.5])
        ch = channels.channel_from_pauli(T)
        cp = np.linalg.eigvalsh(ch.choi)[0] >= -1e-12
        return cp and not channels.qubit_cpcp(ch), "T_xx < |T_yy|"

    def most_resourceful_fixed_point():
        ch = channels.most_resourceful_channel(fixtures.y_plus_state())
        T = ch.pauli_standard
        out = channels.apply_channel(ch, fixtures.y_plus_state())
        return (np.abs(T[1:, 2] - [0, 1, 0]).max() < 1e-12
                and np.abs(out - fixtures.y_plus_state()).max() < 1e-12), "(a, b, c) = (0, 1, 0)"

    def catalogue_facts():
        ok = channels.classify(channels.catalogue("classical_error", p=0.3)).cpcp.verdict == cones.IN
        s = channels.catalogue("schur", A=np.eye(3))
        f = channels.catalogue("fully_decohere", n=3)
        ok2 = np.abs(s.choi - f.choi).max() < 1e-12
        sp = channels.catalogue("sym_projection", n=2)
        c = channels.classify(sp)
        ok3 = len(sp.kraus) == 1 and sp.kraus[0].min() >= 0 and not c.trace_preserving
        return ok and ok2 and ok3, "classical error, schur(I), symmetric projection"

    def l1_increase():
        ch, rho = channels.l1_counterexample()
        out = channels.apply_channel(ch, rho)
        a, b = measures.l1_measure(rho), measures.l1_measure(out)
        return _close(a, 1, 1e-12) and _close(b, np.sqrt(2), 1e-12), f"{a} -> {b}"

    def nnorm_values():
        cases = [(np.array([1, -1]) / np.sqrt(2), np.sqrt(2)),
                 (np.array([1, -1, 1j]) / np.sqrt(3), np.sqrt(3))]
        cases += [(fixtures.phase_vector(n), 2.0) for n in (4, 10, 50)]
        details, ok = [], True
        for v, want in cases:
            r = measures.nnorm_1(v, 1e-3)
            good = r.contains(want, 1e-9) and r.upper - r.lower <= 2e-3 * want
            ok &= good
            details.append(f"n={v.size}: [{r.lower:.6f}, {r.upper:.6f}]")
        return ok, "; ".join(details)

    def nnorm_qubit():
        return _close(measures.nnorm_1_qubit(np.array([1, -1]) / np.sqrt(2)), np.sqrt(2), 1e-12), "sqrt 2"

    def fourier_robustness():
        a = measures.robustness(four, "DNN").value
        b = measures.robustness(four, "DD").value
        ok = _close(a, (3 + S5) / 2, 1e-6) and _close(b, 14 - 5 * S5, 1e-6)
        return ok, f"DNN {a:.9f}, DD {b:.9f}"

    def cp_robustness_brackets():
        r = measures.robustness_cp_bounds(rho5)
        f = measures.robustness_cp_bounds(four)
        ok = r.lower >= 1 / (9 * S5 + 9) - 1e-7 and _close(f.lower, 14 - 5 * S5, 1e-6) \
            and _close(f.upper, 14 - 5 * S5, 1e-6)
        return ok, f"lower {r.lower:.6f}; fourier [{f.lower:.8f}, {f.upper:.8f}]"

    def qubit_measures():
        worst = 0.0
        for _ in range(5):
            q = measures.random_density(2, rng)
            want = measures.qubit_closed_form(q)
            vals = [measures.robustness(q, "DNN").value,
                    measures.robustness_cp_bounds(q).value, measures.l1_measure(q),
                    measures.trace_distance(q, "DNN", "normalized").value,
                    measures.trace_distance(q, "DNN", "scaled").value]
            # the DD value agrees only when the smaller diagonal entry dominates Re q01
            if min(q[0, 0].real, q[1, 1].real) >= q[0, 1].real:
                vals.append(measures.robustness(q, "DD").value)
            worst = max(worst, max(abs(v - want) for v in vals))
        return worst < 1e-7, f"worst {worst:.1e}"

    def y_plus_trace_distance():
        v = measures.trace_distance(fixtures.y_plus_state()).value
        return _close(v, 1.0, 1e-7), f"{v:.10f}"

    def fourier_pure_robustness():
        r = measures.nnorm_1(fixtures.fourier_vector(), 1e-3)
        return r.contains(np.sqrt(15 - 5 * S5), 1e-9), f"[{r.lower:.6f}, {r.upper:.6f}]"

    def l1_suite_control():
        rep = measures.monotone_axiom_suite("l1", trials=1, axioms=("C2",))
        hit = [v for v in rep.violations if v[3].get("fixture")]
        return bool(hit) and _close(hit[0][1], np.sqrt(2), 1e-12), f"{len(rep.violations)} violation(s)"

    return [(f.__name__.replace("_", " "), f) for f in (
        horn_lambda_max, tp_choi_partial_trace, robustness_zero_on_dnn_state, dnn_state_is_dnn,
        y_plus_not_dnn, horn_refutes_state, small_dnn_is_cp, horn_outside_dnn_dual,
        refute_inconclusive_on_copositive, horn_family, horn_identity,
        no_factorization_of_refuted_state, dd_cp_rank_bound, scaled_horn_witness,
        fourier_witness_value, pauli_x_choi_permutation, measure_basis_choi, partial_trace_kraus,
        cpdnn_choi_not_cp, cpdnn_channel, basis_measurement_not_cpcp, swap_cpcp,
        l1_counterexample_kraus, unital_terms, resourceful_channel_column, resourceful_channel_cp_preserving,
        classical_error_qubit_cpcp, unital_inequality_fails, most_resourceful_fixed_point,
        catalogue_facts, l1_increase, nnorm_values, nnorm_qubit, fourier_robustness,
        cp_robustness_brackets, qubit_measures, y_plus_trace_distance, fourier_pure_robustness,
        l1_suite_control)]


def run_selftest():
    results = []
    for name, fn in _checks():
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(Check(name, bool(ok), str(detail), time.perf_counter() - t))
    return results
