import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpcone import channels, fixtures, measures
from cpcone.errors import BadParameter, NotDensityMatrix, NotUnitNorm, ZeroVector
from cpcone.measures import MeasureResult
from generators import random_unit_vector

seeds = st.integers(0, 2**32 - 1)
S5 = np.sqrt(5)
S2 = np.sqrt(2)
Y_PLUS = fixtures.y_plus_state()


def test_measure_result_rejects_inverted_bracket():
    with pytest.raises(ValueError):
        MeasureResult("nnorm", None, 2.0, 1.0)
    r = MeasureResult("l1", 0.5)
    assert r.lower == r.upper == r.estimate == 0.5


# 1-norm of non-negativity


@pytest.mark.parametrize("v, expected", [
    (np.array([1, -1]) / S2, S2),
    (np.array([1, -1, 1j]) / np.sqrt(3), np.sqrt(3)),
    (fixtures.phase_vector(6, "unit"), 2.0),
    (np.array([1.0, 2.0, 2.0]) / 3, 1.0),
])
def test_nnorm_examples(v, expected):
    r = measures.nnorm_1(v, eps=1e-3)
    assert r.contains(expected, 1e-9)
    assert r.upper - r.lower <= 2e-3 * expected + 1e-12


def test_nnorm_literal_phase_vector_is_not_unit():
    n = 9
    v = fixtures.phase_vector(n, "sqrt_n")
    assert np.linalg.norm(v) == pytest.approx(2 / np.sqrt(n))
    assert measures.nnorm_1(v).contains(4 / np.sqrt(n), 1e-9)


def test_nnorm_rejects_bad_input():
    with pytest.raises(ZeroVector):
        measures.nnorm_1(np.zeros(3))
    with pytest.raises(BadParameter):
        measures.nnorm_1(np.ones(2), eps=1.5)


def test_net_decomposition_reconstructs():
    v = random_unit_vector(5, np.random.default_rng(4))
    dec = measures.net_decomposition(v, 16)[0]
    assert np.abs(dec.reconstruct() - v).max() <= 1e-8
    assert dec.vectors.min() >= -1e-10
    assert np.allclose(np.abs(dec.phases), 1)
    with pytest.raises(BadParameter):
        measures.net_decomposition(v, 6)


def test_net_error_factor_values():
    assert measures.net_error_factor(4) == pytest.approx(1 + 10 * np.sin(np.pi / 8))
    assert measures.net_error_factor(256) < 1.07


@pytest.mark.parametrize("v, expected", [
    (np.array([1, 1]) / S2, 1.0),
    (np.array([1, -1]) / S2, S2),
    (np.array([1, 1j]) / S2, S2),
])
def test_nnorm_qubit_examples(v, expected):
    assert measures.nnorm_1_qubit(v) == pytest.approx(expected, abs=1e-12)
    assert measures.nnorm_1(v, eps=1e-4).contains(expected, 1e-9)


def test_nnorm_qubit_requires_unit_vector():
    with pytest.raises(NotUnitNorm):
        measures.nnorm_1_qubit(np.array([1.0, 1.0]))


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(2, 10))
def test_nnorm_brackets_are_nested(seed, n):
    v = random_unit_vector(n, np.random.default_rng(seed))
    coarse, fine = measures.nnorm_1(v, 1e-2), measures.nnorm_1(v, 1e-3)
    assert coarse.contains(fine.estimate, 1e-9)
    assert coarse.lower - 1e-9 <= fine.lower and fine.upper <= coarse.upper + 1e-9
    assert 1 - 1e-9 <= fine.lower and fine.upper <= min(np.sqrt(n), 2) + 1e-9


# robustness


def test_robustness_fourier_state():
    rho = fixtures.fourier_state()
    assert measures.robustness(rho, "DNN").value == pytest.approx((3 + S5) / 2, abs=1e-7)
    assert measures.robustness(rho, "DD").value == pytest.approx(14 - 5 * S5, abs=1e-7)
    r = measures.robustness_cp_bounds(rho)
    assert r.lower == pytest.approx(14 - 5 * S5, abs=1e-6)
    assert r.upper == pytest.approx(14 - 5 * S5, abs=1e-6)


def test_robustness_cp_lower_bound_for_dnn_state():
    r = measures.robustness_cp_bounds(fixtures.dnn_not_cp_state())
    assert r.lower >= 1 / (9 * S5 + 9) - 1e-7
    assert r.upper <= 3 + 1e-7


def test_robustness_certificates_revalidate():
    rng = np.random.default_rng(8)
    rho = measures.random_density(4, rng)
    for cone in ("DNN", "DD"):
        r = measures.robustness(rho, cone)
        assert r.info["revalidated"]
        s, sigma = r.certificates["s"], r.certificates["sigma"]
        assert np.allclose((rho + s * sigma) / (1 + s), r.certificates["mixed"])


def test_robustness_of_cp_state_is_zero():
    rho = measures.random_cp_state(4, np.random.default_rng(3))
    assert measures.robustness(rho, "DNN").value == pytest.approx(0, abs=1e-7)
    assert measures.robustness_cp_bounds(rho).upper == pytest.approx(0, abs=1e-7)


def test_qubit_dd_robustness_exceeds_shared_formula_with_small_diagonal():
    # real nonnegative and PSD but not DD: minimizing over tau = [[a, -x], [-x, 0.2 - x]]
    # gives 2 sqrt(0.08) - 0.4
    rho = np.array([[0.9, 0.3], [0.3, 0.1]])
    assert measures.qubit_closed_form(rho) == 0
    assert measures.robustness(rho, "DD").value == pytest.approx(0.4 * (S2 - 1), abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_qubit_dd_robustness_matches_formula_when_diagonal_dominates(seed):
    rho = measures.random_density(2, np.random.default_rng(seed))
    if min(rho[0, 0].real, rho[1, 1].real) >= rho[0, 1].real:
        assert measures.robustness(rho, "DD").value == pytest.approx(measures.qubit_closed_form(rho), abs=1e-7)


def test_robustness_rejects_bad_input():
    with pytest.raises(NotDensityMatrix):
        measures.robustness(np.eye(2), "DNN")
    with pytest.raises(BadParameter):
        measures.robustness(np.eye(2) / 2, "CP")


@settings(max_examples=6, deadline=None)
@given(seeds, st.integers(2, 6))
def test_robustness_sandwich_and_cap(seed, n):
    rho = measures.random_density(n, np.random.default_rng(seed))
    dnn, dd = measures.robustness(rho, "DNN").value, measures.robustness(rho, "DD").value
    cp = measures.robustness_cp_bounds(rho)
    assert dnn - 1e-7 <= cp.lower <= cp.upper <= dd + 1e-7
    assert cp.upper <= 3 + 1e-7


def test_robustness_pure_examples():
    r = measures.robustness_pure(np.array([1, -1]) / S2)
    assert r.contains(1.0, 1e-9)
    assert measures.robustness(np.full((2, 2), 0.5) * np.array([[1, -1], [-1, 1]]), "DNN").value == \
        pytest.approx(1, abs=1e-7)
    assert measures.robustness_pure(np.array([3.0, 4.0]) / 5).contains(0.0, 1e-9)
    r = measures.robustness_pure(fixtures.fourier_vector())
    assert r.contains(14 - 5 * S5, 1e-6)
    assert measures.nnorm_1(fixtures.fourier_vector()).contains(np.sqrt(15 - 5 * S5), 1e-9)


# l1 measure and coherence


def test_l1_counterexample_values():
    ch, rho = channels.l1_counterexample()
    assert measures.l1_measure(rho) == pytest.approx(1)
    assert measures.l1_measure(channels.apply_channel(ch, rho)) == pytest.approx(S2)


def test_l1_zero_exactly_on_nonnegative_matrices():
    assert measures.l1_measure(fixtures.dnn_not_cp_state()) == 0
    assert measures.l1_measure(Y_PLUS) == pytest.approx(1)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 8))
def test_l1_dominated_by_coherence(seed, n):
    rho = measures.random_density(n, np.random.default_rng(seed))
    assert measures.l1_measure(rho) <= measures.l1_coherence(rho) + 1e-12


# trace distance


def test_trace_distance_y_plus_state():
    for mode in ("normalized", "scaled"):
        r = measures.trace_distance(Y_PLUS, "DNN", mode)
        assert r.value == pytest.approx(1, abs=1e-7)
        assert r.info["revalidated"]


def test_trace_distance_of_cp_state_is_zero():
    rho = np.eye(3) / 3
    for cone in ("DNN", "DD", "CP"):
        for mode in ("normalized", "scaled"):
            assert measures.trace_distance(rho, cone, mode).upper == pytest.approx(0, abs=1e-7)


def test_trace_distance_rejects_bad_mode():
    with pytest.raises(BadParameter):
        measures.trace_distance(Y_PLUS, "DNN", "lambda")


def test_trace_distance_matches_reference_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(21)
    rho = measures.random_density(3, rng)
    S = cp.Variable((3, 3), symmetric=True)
    P, N = cp.Variable((3, 3), hermitian=True), cp.Variable((3, 3), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(P + N))),
                      [S >> 0, S >= 0, cp.trace(S) == 1, P >> 0, N >> 0, rho - S == P - N])
    prob.solve(solver="CLARABEL")
    assert measures.trace_distance(rho, "DNN").value == pytest.approx(prob.value, abs=1e-6)


# monotone axiom suite


def test_axiom_suite_dnn_robustness_is_clean():
    rep = measures.monotone_axiom_suite("robustness-dnn", trials=10, seed=1)
    assert rep.passed and all(c == 10 for c in rep.checked.values())


def test_axiom_suite_reproduces_l1_violation():
    rep = measures.monotone_axiom_suite("l1", trials=0, axioms=("C2",))
    assert rep.count("C2") == 1
    axiom, lhs, rhs, instance = rep.violations[0]
    assert lhs == pytest.approx(S2) and rhs == pytest.approx(1)
    assert instance == {"fixture": "l1 counterexample"}


def test_dd_robustness_is_not_free_on_cp_states():
    # rank one with positive entries, hence CP, but its rows are not diagonally dominant
    rho = np.full((3, 3), 1 / 3)
    assert measures.robustness(rho, "DNN").value == pytest.approx(0, abs=1e-7)
    assert measures.robustness(rho, "DD").value > 0.1


def test_measure_value_dispatch():
    assert measures.measure_value("l1", Y_PLUS) == pytest.approx(1)
    assert measures.measure_value("trace-dnn-scaled", Y_PLUS) == pytest.approx(1, abs=1e-7)
    with pytest.raises(BadParameter):
        measures.measure_value("entropy", Y_PLUS)
