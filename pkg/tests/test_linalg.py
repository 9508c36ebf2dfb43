import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from cpcone import cones, linalg
from cpcone.errors import DimensionMismatch, NonHermitian


def random_hermitian(n, rng):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (G + G.conj().T) / 2


seeds = st.integers(0, 2**32 - 1)


def test_eig_identity():
    assert np.allclose(linalg.eig_hermitian(np.eye(2)).eigenvalues, [1, 1])


def test_eig_pauli_z_ascending():
    assert np.allclose(linalg.eig_hermitian(np.diag([1.0, -1.0])).eigenvalues, [-1, 1])


def test_eig_horn_largest_eigenvalue():
    w = linalg.eig_hermitian(cones.horn_matrix(1.0)).eigenvalues
    assert w[-1] == pytest.approx(np.sqrt(5) + 1, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 24))
def test_eig_reconstruction_and_orthonormality(seed, n):
    H = random_hermitian(n, np.random.default_rng(seed))
    w, V = linalg.eig_hermitian(H)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(H - V @ np.diag(w) @ V.conj().T) <= 1e-10 * (1 + np.linalg.norm(H))
    assert np.abs(V.conj().T @ V - np.eye(n)).max() <= 1e-10


def test_eig_reconstruction_at_sixty():
    H = random_hermitian(60, np.random.default_rng(60))
    w, V = linalg.eig_hermitian(H)
    assert np.linalg.norm(H - V @ np.diag(w) @ V.conj().T) <= 1e-10 * (1 + np.linalg.norm(H))
    assert np.allclose(w, np.linalg.eigvalsh(H), atol=1e-10)


def test_eig_degenerate_cluster_is_deterministic():
    H = np.diag([2.0, 1.0, 1.0, 1.0])
    a, b = linalg.eig_hermitian(H), linalg.eig_hermitian(H.copy())
    assert np.array_equal(a.eigenvectors, b.eigenvectors)
    assert np.allclose(a.eigenvalues, [1, 1, 1, 2])


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        linalg.eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_trace_norm_values():
    assert linalg.trace_norm(np.zeros((3, 3))) == 0
    assert linalg.trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3)
    # difference of a qubit state with off-diagonal -1/2 and its nearest nonnegative state
    assert linalg.trace_norm(np.array([[0, -0.5], [-0.5, 0]])) == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_trace_norm_unitary_invariance(seed, r, c):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))
    U, V = unitary_group.rvs(r, random_state=rng) if r > 1 else np.eye(1), \
        unitary_group.rvs(c, random_state=rng) if c > 1 else np.eye(1)
    t = linalg.trace_norm(A)
    assert linalg.trace_norm(A.conj().T) == pytest.approx(t, abs=1e-8)
    assert linalg.trace_norm(U @ A @ V) == pytest.approx(t, abs=1e-8)


def test_partial_trace_of_maximally_entangled_state():
    v = (np.kron([1, 0], [1, 0]) + np.kron([0, 1], [0, 1])) / np.sqrt(2)
    M = np.outer(v, v)
    assert np.allclose(linalg.partial_trace(M, 2, 2, "first"), np.eye(2) / 2)
    assert np.allclose(linalg.partial_trace(M, 2, 2, "second"), np.eye(2) / 2)


def test_partial_trace_product_inputs():
    rng = np.random.default_rng(1)
    A, B = random_hermitian(2, rng), random_hermitian(3, rng)
    M = np.kron(A, B)
    assert np.allclose(linalg.partial_trace(M, 2, 3, "first"), np.trace(A) * B)
    assert np.allclose(linalg.partial_trace(M, 2, 3, "second"), np.trace(B) * A)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_partial_trace_linearity_and_adjointness(seed, a, b):
    rng = np.random.default_rng(seed)
    M, N = random_hermitian(a * b, rng), random_hermitian(a * b, rng)
    alpha, beta = rng.standard_normal(2)
    lhs = linalg.partial_trace(alpha * M + beta * N, a, b)
    rhs = alpha * linalg.partial_trace(M, a, b) + beta * linalg.partial_trace(N, a, b)
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.trace(linalg.partial_trace(M, a, b)) == pytest.approx(np.trace(M), abs=1e-10)
    A = random_hermitian(a, rng)
    assert np.trace(np.kron(A, np.eye(b)) @ M) == pytest.approx(
        np.trace(A @ linalg.partial_trace(M, a, b, "second")), abs=1e-10)


def test_partial_trace_rejects_bad_dimensions():
    with pytest.raises(DimensionMismatch):
        linalg.partial_trace(np.eye(5), 2, 2)
    with pytest.raises(ValueError):
        linalg.partial_trace(np.eye(4), 2, 2, "third")


def test_vec_mat_convention():
    assert np.array_equal(linalg.vec_mat(np.array([1, 2, 3, 4]), 2, 2), [[1, 3], [2, 4]])
    E = linalg.vec_mat(np.eye(6)[4], 2, 3)
    assert E.sum() == 1 and E[0, 2] == 1


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_vec_mat_round_trip(seed):
    A = np.random.default_rng(seed).standard_normal((3, 2))
    assert np.array_equal(linalg.vec_mat(linalg.mat_vec(A), 3, 2), A)


def test_vec_mat_rejects_wrong_length():
    with pytest.raises(DimensionMismatch):
        linalg.vec_mat(np.ones(5), 2, 2)


def test_matrix_json_round_trip():
    A = np.array([[1, 2j], [-2j, 3]])
    assert np.array_equal(linalg.matrix_from_json(linalg.matrix_to_json(A), hermitian=True), A)


@pytest.mark.parametrize("obj, field", [
    ({"rows": 2, "cols": 2}, "entries"),
    ({"rows": 2, "cols": 2, "entries": [[[1, 0], [0, 0]]]}, "entries"),
    ({"rows": 1, "cols": 2, "entries": [[[1, 0], "x"]]}, "entries[0][1]"),
    ({"rows": 0, "cols": 2, "entries": []}, "rows"),
])
def test_matrix_json_errors_name_the_field(obj, field):
    with pytest.raises(ValueError, match=field.replace("[", r"\[")):
        linalg.matrix_from_json(obj)


def test_matrix_json_hermitian_check():
    obj = linalg.matrix_to_json(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonHermitian):
        linalg.matrix_from_json(obj, hermitian=True)
