import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from qauth.clifford import (
    CliffordElement,
    cnot,
    compose,
    conjugate,
    enumerate_all,
    hadamard,
    inverse,
    phase_gate,
    randomization_counts,
    sample_uniform,
    to_unitary,
)
from qauth.pauli import PauliOperator, enumerate_paulis, to_matrix


def _same_up_to_phase(a, b):
    k = np.flatnonzero(np.abs(b.ravel()) > 1e-9)[0]
    phase = a.ravel()[k] / b.ravel()[k]
    return np.isclose(abs(phase), 1) and np.allclose(a, phase * b, atol=1e-9)


def test_single_qubit_group_order():
    group = enumerate_all(1)
    assert len(group) == 24
    assert len(set(group)) == 24


def test_two_qubit_group_order():
    assert len(enumerate_all(2, allow_two_qubits=True)) == 11520


def test_two_qubit_enumeration_guard():
    with pytest.raises(ValueError):
        enumerate_all(2)


def test_randomization_counts_table():
    group = enumerate_all(1)
    for p in enumerate_paulis(1)[1:]:
        for q in enumerate_paulis(1)[1:]:
            assert randomization_counts(p, q, group) == 8


def test_hadamard_images():
    h = hadamard(1, 0)
    assert conjugate(h, PauliOperator.from_label("X")) == PauliOperator.from_label("Z")
    assert conjugate(h, PauliOperator.from_label("Y")) == PauliOperator.from_label("-Y")


def test_identity_fixes_paulis():
    e = CliffordElement.identity(2)
    for p in enumerate_paulis(2):
        assert conjugate(e, p) == p


def test_invalid_tableau():
    x = PauliOperator.from_label("X")
    with pytest.raises(ValueError):
        CliffordElement(1, (x,), (x,))


@pytest.mark.parametrize("gate", [hadamard(2, 1), phase_gate(2, 0), cnot(2, 0, 1), cnot(2, 1, 0)])
def test_unitary_realizes_tableau(gate):
    u = to_unitary(gate)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    for p in enumerate_paulis(2):
        assert np.allclose(u @ to_matrix(p) @ u.conj().T, to_matrix(conjugate(gate, p)), atol=1e-12)


def test_cnot_matrix_up_to_phase():
    # control qubit 0 (low bit), target qubit 1
    expected = np.eye(4)[:, [0, 3, 2, 1]]
    assert _same_up_to_phase(to_unitary(cnot(2, 0, 1)), expected)


@given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(1, 3))
def test_compose_matches_matrix_product(s1, s2, n):
    a, b = sample_uniform(n, s1), sample_uniform(n, s2)
    assert _same_up_to_phase(to_unitary(compose(a, b)), to_unitary(a) @ to_unitary(b))


@given(st.integers(0, 2**32), st.integers(1, 4))
def test_inverse(seed, n):
    c = sample_uniform(n, seed)
    assert compose(c, inverse(c)) == CliffordElement.identity(n)


@given(st.integers(0, 2**32), st.integers(1, 5))
def test_sample_is_valid_and_seeded(seed, n):
    assert sample_uniform(n, seed) == sample_uniform(n, seed)


def test_sampling_is_uniform_on_one_qubit():
    group = enumerate_all(1)
    index = {c: i for i, c in enumerate(group)}
    rng = np.random.default_rng(7)
    counts = np.zeros(len(group))
    for _ in range(4800):
        counts[index[sample_uniform(1, rng)]] += 1
    assert counts.min() > 0
    # frozen seed; uniform null is not rejected at the 0.1% level
    assert chisquare(counts).pvalue > 1e-3


def test_sampling_hits_all_two_qubit_pauli_images():
    rng = np.random.default_rng(3)
    x0 = PauliOperator.single(2, 0, "X")
    images = {conjugate(sample_uniform(2, rng), x0).unsigned() for _ in range(600)}
    assert len(images) == 15


def test_serialization_round_trip():
    c = sample_uniform(3, 11)
    assert CliffordElement.from_dict(c.to_dict()) == c


def test_unitary_size_guard():
    with pytest.raises(ValueError):
        to_unitary(CliffordElement.identity(7))
