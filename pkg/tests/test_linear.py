import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qauth import linear as lin
from qauth.linear import DensityState, FlaggedOutput, SubsystemLayout
from qauth.pauli import PauliOperator, enumerate_paulis, to_matrix


def _random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m)


def _ptrace_oracle(m, dims, keep):
    """Partial trace by reshaping; ``dims`` lists subsystem dims from most significant."""
    k = len(dims)
    t = m.reshape(dims + dims)
    letters = "abcdefghij"
    rows = list(letters[:k])
    cols = [rows[i] if i not in keep else letters[k + i] for i in range(k)]
    out = [rows[i] for i in keep] + [cols[i] for i in keep]
    res = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    d = int(np.prod([dims[i] for i in keep]))
    return res.reshape(d, d)


seeds = st.integers(0, 2**32)


def test_layout_qubit_offsets():
    layout = SubsystemLayout.of(("M", 2), ("T", 1), ("R", 3))
    assert layout.qubits("T") == [2]
    assert layout.qubits("R") == [3, 4, 5]
    assert layout.dim == 64
    with pytest.raises(KeyError):
        layout.size("Q")


def test_layout_rejects_duplicates_and_cap():
    with pytest.raises(ValueError):
        SubsystemLayout.of(("A", 1), ("A", 1))
    with pytest.raises(ValueError):
        SubsystemLayout.of(("A", lin.QUBIT_CAP + 1))


def test_checked_rejects_bad_matrices():
    layout = SubsystemLayout.of(("M", 1))
    with pytest.raises(ValueError):
        DensityState.checked(layout, np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityState.checked(layout, np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityState.checked(layout, np.eye(2))


@given(seeds)
def test_product_is_kron_with_first_state_low(seed):
    rng = np.random.default_rng(seed)
    a = DensityState(SubsystemLayout.of(("A", 1)), _random_density(2, rng))
    b = DensityState(SubsystemLayout.of(("B", 2)), _random_density(4, rng))
    ab = lin.product(a, b)
    np.testing.assert_allclose(ab.matrix, np.kron(b.matrix, a.matrix))
    assert ab.layout.labels == ("A", "B")


@given(seeds)
def test_partial_trace_matches_reshape_oracle(seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout.of(("A", 1), ("B", 2), ("C", 1))
    s = DensityState(layout, _random_density(16, rng))
    # oracle dims run from the most significant register (C) down to A
    dims = [2, 4, 2]
    np.testing.assert_allclose(lin.partial_trace(s, ["A", "C"]).matrix, _ptrace_oracle(s.matrix, dims, [0, 2]), atol=1e-12)
    np.testing.assert_allclose(lin.partial_trace(s, ["B"]).matrix, _ptrace_oracle(s.matrix, dims, [1]), atol=1e-12)


@given(seeds)
def test_apply_unitary_matches_full_kron(seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout.of(("A", 1), ("B", 1), ("C", 1))
    s = DensityState(layout, _random_density(8, rng))
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    full = np.kron(u, np.eye(2))  # acts on B (low of u) and C
    out = lin.apply_unitary(s, u, ["B", "C"])
    np.testing.assert_allclose(out.matrix, full @ s.matrix @ full.conj().T, atol=1e-12)


def test_apply_unitary_label_order_matters():
    layout = SubsystemLayout.of(("A", 1), ("B", 1))
    s = lin.basis_state(layout, 0b01)  # A=1, B=0
    x_on_first = np.kron(np.eye(2), to_matrix(PauliOperator.from_label("X")))
    assert np.isclose(lin.apply_unitary(s, x_on_first, ["B", "A"]).matrix[0b11, 0b11], 1)
    assert np.isclose(lin.apply_unitary(s, x_on_first, ["A", "B"]).matrix[0b00, 0b00], 1)


@given(seeds)
def test_apply_to_vectors_matches_dense(seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout.of(("A", 2), ("B", 1))
    vecs = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    op = rng.normal(size=(2, 2))
    np.testing.assert_allclose(lin.apply_to_vectors(layout, vecs, op, ["B"]), np.kron(op, np.eye(4)) @ vecs, atol=1e-12)


@given(seeds)
def test_reorder_round_trip(seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout.of(("A", 1), ("B", 2), ("C", 1))
    s = DensityState(layout, _random_density(16, rng))
    r = lin.reorder(s, ["C", "A", "B"])
    assert r.layout.labels == ("C", "A", "B")
    assert lin.reorder(r, ["A", "B", "C"]).allclose(s, 1e-12)
    np.testing.assert_allclose(lin.partial_trace(r, ["B"]).matrix, lin.partial_trace(s, ["B"]).matrix, atol=1e-12)


def test_reorder_of_product_swaps_kron():
    rng = np.random.default_rng(1)
    a = DensityState(SubsystemLayout.of(("A", 1)), _random_density(2, rng))
    b = DensityState(SubsystemLayout.of(("B", 1)), _random_density(2, rng))
    swapped = lin.reorder(lin.product(a, b), ["B", "A"])
    np.testing.assert_allclose(swapped.matrix, lin.product(b, a).matrix, atol=1e-12)


def test_trace_distance_known_values():
    layout = SubsystemLayout.of(("M", 1))
    zero, one = lin.basis_state(layout, 0), lin.basis_state(layout, 1)
    assert lin.trace_distance(zero, one) == pytest.approx(1.0)
    assert lin.trace_distance(zero, zero) == pytest.approx(0.0)
    plus = lin.pure_state(layout, np.array([1, 1]) / np.sqrt(2))
    assert lin.trace_distance(zero, plus) == pytest.approx(np.sqrt(0.5))


@given(seeds)
def test_trace_distance_is_a_metric_bounded_by_one(seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout.of(("M", 2))
    a, b, c = (DensityState(layout, _random_density(4, rng)) for _ in range(3))
    dab, dbc, dac = lin.trace_distance(a, b), lin.trace_distance(b, c), lin.trace_distance(a, c)
    assert 0 <= dab <= 1 + 1e-12
    assert dac <= dab + dbc + 1e-12
    assert dab == pytest.approx(lin.trace_distance(b, a))


def test_flagged_distance_sums_branches():
    layout = SubsystemLayout.of(("M", 1))
    zero, one = lin.basis_state(layout, 0), lin.basis_state(layout, 1)
    a = FlaggedOutput(zero.scaled(0.5), one.scaled(0.5))
    b = FlaggedOutput(zero.scaled(0.25), one.scaled(0.75))
    assert lin.flagged_distance(a, b) == pytest.approx(0.25)


def test_maximally_entangled_marginals():
    s = lin.maximally_entangled("M", "R", 2)
    assert s.purity() == pytest.approx(1.0)
    np.testing.assert_allclose(lin.partial_trace(s, ["M"]).matrix, np.eye(4) / 4, atol=1e-12)


def test_bell_vectors_are_orthonormal():
    vs = np.array([lin.bell_vector(2, p) for p in enumerate_paulis(2)])
    np.testing.assert_allclose(vs.conj() @ vs.T, np.eye(16), atol=1e-12)


def test_bell_projector():
    allowed = [PauliOperator.from_label(s) for s in ("I", "Z")]
    p = lin.bell_subspace_projector(1, allowed)
    assert lin.is_projector(p)
    assert np.trace(p).real == pytest.approx(2)
    with pytest.raises(ValueError):
        lin.bell_subspace_projector(1, [PauliOperator.from_label("X"), PauliOperator.from_label("-X")])


def test_project_rejects_non_projector():
    s = lin.zero_state("M", 1)
    with pytest.raises(ValueError):
        lin.project(s, np.array([[1, 1], [0, 0]]))


def test_merge_split_inverse():
    layout = SubsystemLayout.of(("A", 1), ("B", 2), ("C", 1))
    s = lin.basis_state(layout, 5)
    merged = lin.merge(s, ["A", "B"], "AB")
    assert merged.layout.entries == (("AB", 3), ("C", 1))
    assert lin.split(merged, "AB", [("A", 1), ("B", 2)]).allclose(s)
    with pytest.raises(ValueError):
        lin.merge(s, ["A", "C"], "AC")


@given(seeds)
def test_apply_kraus_trace_preserving(seed):
    rng = np.random.default_rng(seed)
    # amplitude-damping style Kraus pair on A, which then becomes 1 qubit wide
    gamma = rng.random()
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    s = DensityState(SubsystemLayout.of(("A", 1), ("B", 1)), _random_density(4, rng))
    out = lin.apply_kraus(s, [k0, k1], "A", 1)
    assert out.trace_weight == pytest.approx(1.0)
    expected = sum(np.kron(np.eye(2), k) @ s.matrix @ np.kron(np.eye(2), k).conj().T for k in (k0, k1))
    np.testing.assert_allclose(out.matrix, expected, atol=1e-12)
