"""Named states and vectors with known non-negativity values."""

import numpy as np

from . import cones


def dnn_not_cp_state():
    """5x5 density matrix that is DNN but not CP; the Horn matrix gives Tr(W rho) = -1/9."""
    return np.array([
        [1, 1, 0, 0, 1],
        [1, 2, 1, 0, 0],
        [0, 1, 2, 1, 0],
        [0, 0, 1, 1, 1],
        [1, 0, 0, 1, 3],
    ], dtype=float) / 9


def fourier_vector(n=5):
    """Unit vector with entries omega^k / sqrt(n), omega = exp(2 pi i / n)."""
    return np.exp(2j * np.pi * np.arange(n) / n) / np.sqrt(n)


def fourier_state(n=5):
    v = fourier_vector(n)
    return np.outer(v, v.conj())


def fourier_witness():
    """I - 5(3 - sqrt 5)|v><v| for the five-dimensional Fourier vector; its real part is a scaled Horn-type matrix."""
    return np.eye(5) - 5 * (3 - np.sqrt(5)) * fourier_state(5)


def phase_vector(n, normalize="unit"):
    """(1, -1, i, -i, 0, ..., 0) scaled to unit norm, or by 1/sqrt(n) with normalize="sqrt_n"."""
    if n < 4:
        raise ValueError("phase_vector needs n >= 4")
    v = np.zeros(n, dtype=complex)
    v[:4] = [1, -1, 1j, -1j]
    return v / (2.0 if normalize == "unit" else np.sqrt(n))


def y_plus_state():
    """(I + Y)/2, the +1 eigenstate of Pauli Y."""
    return 0.5 * np.array([[1, -1j], [1j, 1]])


def horn_witness_scaled():
    """W_1 / lambda_max(W_1) = W_1 / (sqrt 5 + 1), a witness with W <= I."""
    return cones.horn_matrix(1.0) / (np.sqrt(5) + 1)


VALUES = {
    "horn_trace": -1 / 9,
    "horn_scaled_bound": 1 / (9 * np.sqrt(5) + 9),
    "fourier_robustness_dnn": (3 + np.sqrt(5)) / 2,
    "fourier_robustness_dd": 14 - 5 * np.sqrt(5),
    "fourier_robustness_cp": 14 - 5 * np.sqrt(5),
    "fourier_nnorm": np.sqrt(15 - 5 * np.sqrt(5)),
    "cpdnn_choi_horn_trace": -1 / 6,
}
