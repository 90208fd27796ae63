import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qauth.channel import build_keyed_channel, kraus_superop
from qauth.linear import DensityState, SubsystemLayout, zero_state


@given(st.integers(0, 2**32))
def test_superop_matches_kraus_sum(seed):
    rng = np.random.default_rng(seed)
    kraus = rng.normal(size=(3, 2, 4)) + 1j * rng.normal(size=(3, 2, 4))
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    direct = sum(k @ x @ k.conj().T for k in kraus)
    np.testing.assert_allclose((kraus_superop(kraus) @ x.reshape(-1)).reshape(2, 2), direct, atol=1e-12)


def _trivial_channel(attack, batches=1, n_keys=4):
    # one message qubit, one |0> trap, identity keys: the real channel is just the attack
    keys = np.stack([np.eye(4)] * n_keys)
    return build_keyed_channel(
        keys,
        attack,
        r_qubits=0,
        block_qubits=1,
        trap_basis=np.eye(2),
        encoder=np.eye(2),
        decoder_kraus=np.eye(2)[None],
        omega=np.diag([1.0, 0.0]),
        batches=batches,
    )


def test_identity_attack_accepts_everything():
    ch = _trivial_channel(np.eye(4))
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    s = DensityState(SubsystemLayout.of(("M", 1), ("R", 0)), rho)
    out = ch.apply(s)
    np.testing.assert_allclose(out.acc.matrix, rho, atol=1e-12)
    assert out.rej_weight == pytest.approx(0.0)
    assert ch.weight_stderr(s) == 0.0


def test_trap_flip_rejects_into_omega():
    x_on_trap = np.kron(np.array([[0, 1], [1, 0]]), np.eye(2))
    ch = _trivial_channel(x_on_trap, batches=2)
    s = DensityState(SubsystemLayout.of(("M", 1), ("R", 0)), np.diag([0.0, 1.0]))
    out = ch.apply(s)
    assert out.acc_weight == pytest.approx(0.0)
    np.testing.assert_allclose(out.rej.matrix, np.diag([1.0, 0.0]), atol=1e-12)
    assert len(ch.apply_batches(s)) == 2
    np.testing.assert_allclose(ch.acc_weights(s), np.zeros(4), atol=1e-12)


def test_layout_mismatch():
    ch = _trivial_channel(np.eye(4))
    with pytest.raises(ValueError):
        ch.apply(zero_state("M", 1))
