import itertools
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpcone import channels, cones, fixtures, linalg, measures
from cpcone.channels import PAULI, ChannelRep
from cpcone.cones import IN, OUT
from cpcone.errors import BadParameter, DimensionMismatch, NotCP, NotDensityMatrix, NotQubit, NotUnitalCPCP
from generators import random_one_per_row_kraus, random_qubit_channel

seeds = st.integers(0, 2**32 - 1)
X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]

CATALOGUE_CASES = [
    ("identity", {}), ("identity", {"n": 3}), ("pauli_x", {}), ("classical_error", {"p": 0.3}),
    ("measure_prepare", {"states": [np.diag([0.5, 0.5]), np.array([[0.5, 0.2], [0.2, 0.5]])]}),
    ("partial_dephase", {"p": 0.4, "n": 3}), ("partial_trace", {"m": 2, "n": 2}),
    ("tensor_prepare", {"sigma": np.array([[0.5, 0.2], [0.2, 0.5]])}),
    ("stochastic", {"S": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}), ("swap", {"m": 2, "n": 3}),
    ("schur", {"A": np.array([[1, 0.5], [0.5, 1]])}), ("fully_decohere", {"n": 3}),
    ("sym_projection", {}),
]


def random_state(n, rng):
    return measures.random_density(n, rng)


# representations


def test_identity_choi_is_maximally_entangled():
    J = channels.choi_from_kraus([np.eye(2)])
    w = np.array([1, 0, 0, 1.0])
    assert np.allclose(J, np.outer(w, w))


def test_pauli_x_choi_is_a_permutation_of_identity_choi():
    J = channels.choi_from_kraus([X])
    P = np.kron(np.eye(2), X.real)
    assert np.allclose(J, P @ channels.choi_from_kraus([np.eye(2)]) @ P.T)


def test_measure_in_basis_choi():
    V = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    J = channels.measure_in_basis(V).choi
    expected = sum(np.kron(np.outer(V[:, j], V[:, j].conj()).conj(), np.diag(np.eye(2)[j])) for j in range(2))
    assert np.allclose(J, expected)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_kraus_choi_round_trip(seed, n, m):
    rng = np.random.default_rng(seed)
    ks = [rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)) for _ in range(int(rng.integers(1, 4)))]
    J = channels.choi_from_kraus(ks)
    back = channels.kraus_from_choi(J, n, m)
    assert np.allclose(channels.choi_from_kraus(back), J)
    rho = random_state(n, rng)
    assert np.allclose(channels.apply_kraus(ks, rho), channels.apply_channel(ChannelRep.from_choi(J, n, m), rho))


def test_kraus_from_choi_rejects_non_psd():
    with pytest.raises(Exception):
        channels.kraus_from_choi(np.diag([1.0, -1.0, 1.0, 1.0]), 2, 2)


def test_channel_rep_validates_shapes():
    with pytest.raises(DimensionMismatch):
        ChannelRep.from_choi(np.eye(4), 2, 3)


def test_apply_identity():
    rho = random_state(3, np.random.default_rng(0))
    assert np.allclose(channels.apply_channel(channels.catalogue("identity", n=3), rho), rho)


def test_l1_counterexample_output():
    ch, rho = channels.l1_counterexample()
    out = channels.apply_channel(ch, rho)
    s = 1 / np.sqrt(2)
    expected = 0.5 * np.array([[0.5, 0.5, -s], [0.5, 0.5, -s], [-s, -s, 1]])
    assert np.allclose(out, expected)
    assert measures.l1_measure(rho) == pytest.approx(1)
    assert measures.l1_measure(out) == pytest.approx(np.sqrt(2))


def test_compose_and_convex_combination():
    rng = np.random.default_rng(1)
    a, b = channels.catalogue("classical_error", p=0.2), channels.catalogue("fully_decohere")
    rho = random_state(2, rng)
    ab = channels.compose(b, a)
    assert np.allclose(channels.apply_channel(ab, rho), channels.apply_channel(b, channels.apply_channel(a, rho)))
    mix = channels.convex_combination([0.25, 0.75], [a, b])
    assert np.allclose(channels.apply_channel(mix, rho),
                       0.25 * channels.apply_channel(a, rho) + 0.75 * channels.apply_channel(b, rho))


# nonnegative Kraus operators


def test_nonneg_kraus_identity_and_partial_trace():
    ks = channels.nonneg_kraus_from_choi(channels.catalogue("identity").choi, 2, 2)
    assert np.allclose(channels.choi_from_kraus(ks), channels.catalogue("identity").choi)
    assert all(A.min() >= -1e-12 for A in ks)
    pt = channels.catalogue("partial_trace", m=2, n=2)
    ks = channels.nonneg_kraus_from_choi(pt.choi, 4, 2)
    assert channels.kraus_row_structure_check(ks, 1e-7)


def test_nonneg_kraus_rejects_cpdnn_choi():
    with pytest.raises(NotCP):
        channels.nonneg_kraus_from_choi(channels.cpdnn_not_cpcp_choi(), 2, 3)


def test_kraus_row_structure_examples():
    assert channels.kraus_row_structure_check(channels.catalogue("partial_trace", m=2, n=2).kraus)
    ch, _ = channels.l1_counterexample()
    assert channels.kraus_row_structure_check(ch.kraus)
    assert not channels.kraus_row_structure_check([np.eye(2) + X.real])


# classification


@pytest.mark.parametrize("name, params", CATALOGUE_CASES)
def test_catalogue_channels_are_cpcp(name, params):
    ch = channels.catalogue(name, **params)
    c = channels.classify(ch)
    assert c.cpcp.verdict == IN
    assert cones.check_certificate(ch.choi, c.cpcp)
    assert c.trace_preserving == (name != "sym_projection")


@pytest.mark.parametrize("name, params", CATALOGUE_CASES)
def test_catalogue_channels_preserve_cp_states(name, params):
    ch = channels.catalogue(name, **params)
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    for _ in range(100):
        out = channels.apply_channel(ch, measures.random_cp_state(ch.dim_in, rng))
        out = (out + out.conj().T) / 2
        if np.trace(out).real > 1e-12:
            out = out / np.trace(out).real
            assert cones.cp_membership(out, effort="fast").verdict != OUT


def test_catalogue_errors():
    with pytest.raises(BadParameter):
        channels.catalogue("classical_error", p=1.5)
    with pytest.raises(BadParameter):
        channels.catalogue("stochastic", S=[[0.5, 0.5], [0.6, 0.5]])
    with pytest.raises(BadParameter):
        channels.catalogue("schur", A=np.array([[2.0, 0], [0, 1]]))
    with pytest.raises(BadParameter):
        channels.catalogue("nonexistent")


def test_sym_projection_kraus():
    ch = channels.catalogue("sym_projection")
    assert len(ch.kraus) == 1 and ch.kraus[0].min() >= 0
    assert not channels.classify(ch).trace_preserving


def test_schur_identity_is_fully_decohering():
    a = channels.catalogue("schur", A=np.eye(3))
    assert np.allclose(a.choi, channels.catalogue("fully_decohere", n=3).choi)


def test_cpdnn_not_cpcp_channel():
    choi = channels.cpdnn_not_cpcp_choi()
    c = channels.classify(ChannelRep.from_choi(choi, 2, 3))
    assert c.cpdnn and c.completely_positive and c.trace_preserving
    assert c.cpcp.verdict == OUT
    assert c.cpcp.certificate.value == pytest.approx(-1 / 6, abs=1e-9)
    assert cones.check_certificate(choi, c.cpcp)


def test_non_standard_measurement_is_cp_preserving_but_not_cpcp():
    ch = channels.measure_in_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    c = channels.classify(ch)
    assert c.cpcp.verdict == OUT and c.cp_preserving_qubit
    assert cones.check_certificate(ch.choi, c.cpcp)


def test_swap_is_cpcp():
    c = channels.classify(channels.catalogue("swap", m=2, n=2))
    assert c.cpcp.verdict == IN and c.unital


def test_classify_transpose_map():
    # the transpose map has the swap operator as its Choi matrix
    transpose = ChannelRep.from_choi(np.eye(4)[[0, 2, 1, 3]], 2, 2)
    c = channels.classify(transpose)
    assert c.hermiticity_preserving and c.trace_preserving
    assert not c.completely_positive and not c.cpdnn and c.cpcp.verdict == OUT


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_composition_closure(seed):
    rng = np.random.default_rng(seed)
    a = ChannelRep.from_kraus(random_one_per_row_kraus(2, 3, rng))
    b = ChannelRep.from_kraus(random_one_per_row_kraus(3, 2, rng))
    ab = channels.compose(b, a)
    assert all(A.min() >= 0 for A in ab.kraus)
    assert channels.classify(ab).cpcp.verdict == IN


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_convex_combination_closure(seed):
    rng = np.random.default_rng(seed)
    chs = [ChannelRep.from_kraus(random_one_per_row_kraus(3, 3, rng)) for _ in range(3)]
    w = rng.dirichlet(np.ones(3))
    mix = channels.convex_combination(w, chs)
    assert np.allclose(mix.choi, sum(wk * c.choi for wk, c in zip(w, chs)))
    v = channels.classify(mix).cpcp
    assert v.verdict == IN and cones.check_certificate(mix.choi, v)
    # Choi-only inputs of size 4 are decided exactly
    small = [ChannelRep.from_choi(channels.choi_from_kraus(random_one_per_row_kraus(2, 2, rng)), 2, 2)
             for _ in range(3)]
    assert channels.classify(channels.convex_combination(w, small)).cpcp.verdict == IN


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_certified_tp_channels_have_row_structured_kraus(seed, n, m):
    rng = np.random.default_rng(seed)
    ch = ChannelRep.from_choi(channels.choi_from_kraus(random_one_per_row_kraus(n, m, rng)), n, m)
    assert channels.classify(ch).cpcp.verdict == IN
    ks = channels.nonneg_kraus_from_choi(ch.choi, n, m)
    assert channels.kraus_row_structure_check(ks, 1e-6)


# unital decomposition


def test_unital_decompose_fully_decohering():
    terms = channels.unital_decompose(channels.catalogue("fully_decohere").kraus)
    assert len(terms) == 1
    assert terms[0].permutation == (0, 1) and np.allclose(terms[0].schur, np.eye(2))


def test_unital_decompose_permutation_channel():
    P = np.eye(3)[[2, 0, 1]]
    terms = channels.unital_decompose([P])
    assert len(terms) == 1 and np.allclose(terms[0].schur, np.ones((3, 3)))
    assert np.allclose(terms[0].matrix, P)


def test_unital_decompose_classical_error():
    terms = channels.unital_decompose(channels.catalogue("classical_error", p=0.3).kraus)
    assert sorted(t.weight for t in terms) == pytest.approx([0.3, 0.7])


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_unital_decompose_recombines(seed):
    rng = np.random.default_rng(seed)
    n = 3
    perms = [np.eye(n)[list(p)] for p in itertools.permutations(range(n))]
    w = rng.dirichlet(np.ones(3))
    ks = []
    for wk, idx in zip(w, rng.choice(len(perms), 3, replace=False)):
        B = np.abs(rng.standard_normal((n, 2)))
        B /= np.linalg.norm(B, axis=1, keepdims=True)  # unit-diagonal CP Schur matrix B B'
        ks += [np.sqrt(wk) * perms[idx] @ np.diag(b) for b in B.T]
    terms = channels.unital_decompose(ks)
    assert sum(t.weight for t in terms) == pytest.approx(1)
    rho = random_state(n, rng)
    assert np.allclose(channels.recombine_unital(terms, rho), channels.apply_kraus(ks, rho))


def test_unital_decompose_rejects_non_unital():
    with pytest.raises(NotUnitalCPCP):
        channels.unital_decompose(channels.catalogue("measure_prepare", states=[np.diag([1.0, 0])] * 2).kraus)


# qubit maps


def test_pauli_standard_examples():
    assert np.allclose(channels.pauli_standard(channels.catalogue("identity")), np.eye(4))
    assert np.allclose(channels.pauli_standard(channels.catalogue("fully_decohere")), np.diag([1, 0, 0, 1]))
    a, b, c = 0.3, 0.4, 0.5
    rho = 0.5 * (np.eye(2) + a * X + b * Y + c * Z)
    T = channels.pauli_standard(ChannelRep.from_choi(channels.most_resourceful_channel(rho).choi, 2, 2))
    assert np.allclose(T[:, 2], [0, a, b, c])


def test_pauli_round_trip():
    ch = random_qubit_channel(0, np.random.default_rng(3))
    T = channels.pauli_standard(ch)
    assert np.allclose(channels.channel_from_pauli(T).choi, ch.choi)


def test_pauli_standard_rejects_larger_maps():
    with pytest.raises(NotQubit):
        channels.pauli_standard(channels.catalogue("identity", n=3))


def test_qubit_cp_preserving_examples():
    assert channels.qubit_cp_preserving(channels.catalogue("identity"))
    y_conj = ChannelRep.from_kraus([Y])
    assert np.allclose(channels.pauli_standard(y_conj), np.diag([1, -1, 1, -1]))
    assert not channels.qubit_cp_preserving(y_conj)
    rho = 0.5 * (np.eye(2) + 0.6 * X - 0.8 * Z)
    assert channels.qubit_cp_preserving(channels.most_resourceful_channel(rho))


def test_qubit_cpcp_examples():
    assert channels.qubit_cpcp(channels.catalogue("classical_error", p=0.3))
    ch = channels.most_resourceful_channel(0.5 * (np.eye(2) + 0.5 * Y))
    assert not channels.qubit_cpcp(ch)
    assert channels.classify(ChannelRep.from_choi(ch.choi, 2, 2)).cpcp.verdict != IN
    T = np.diag([1.0, 0.5, 0.8, 0.0])
    assert not channels.qubit_cpcp(channels.channel_from_pauli(T))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(0, 4))
def test_qubit_cpcp_agrees_with_classify(seed, family):
    ch = random_qubit_channel(family, np.random.default_rng(seed))
    assert channels.qubit_cpcp(ch) == (channels.classify(ch).cpcp.verdict == IN)


def test_most_resourceful_channel_examples():
    y_plus = fixtures.y_plus_state()
    ch = channels.most_resourceful_channel(y_plus)
    assert np.allclose(channels.pauli_standard(ChannelRep.from_choi(ch.choi, 2, 2))[1:, 2], [0, 1, 0])
    assert np.allclose(channels.apply_channel(ch, y_plus), y_plus)
    ch = channels.most_resourceful_channel(np.eye(2) / 2)
    assert np.allclose(ch.pauli_standard[1:, 2], 0)
    zero = np.diag([1.0, 0.0])
    ch = channels.most_resourceful_channel(zero)
    assert np.allclose(ch.pauli_standard[1:, 2], [0, 0, 1])
    assert np.allclose(channels.apply_channel(ch, y_plus), zero)


def test_most_resourceful_channel_rejects_non_states():
    with pytest.raises(NotDensityMatrix):
        channels.most_resourceful_channel(np.diag([1.0, 1.0]))


def test_bloch_vector():
    assert np.allclose(channels.bloch_vector(fixtures.y_plus_state()), [0, 1, 0])
    with pytest.raises(NotQubit):
        channels.bloch_vector(np.eye(3) / 3)


def test_apply_channel_choi_and_kraus_agree_on_random_channels():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        ks = [rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)) for _ in range(2)]
        ch = ChannelRep.from_choi(channels.choi_from_kraus(ks), n, m)
        rho = random_state(n, rng)
        assert np.abs(channels.apply_channel(ch, rho) - channels.apply_kraus(ks, rho)).max() <= 1e-9


def test_partial_trace_channel_matches_linalg():
    rho = random_state(4, np.random.default_rng(5))
    out = channels.apply_channel(channels.catalogue("partial_trace", m=2, n=2), rho)
    assert np.allclose(out, linalg.partial_trace(rho, 2, 2, "first"))
