"""
Key-averaged flagged channels in superoperator form.

For every key the real-world map (encode, attack, decode) is linear in the
input ``rho_MR``.  We collect its Kraus operators for all keys at once,
sum them into superoperators and keep per-batch partial sums so sampled
key averages come with batch-means error bars.

Superoperators act on row-major vectorized matrices:
``vec(K X K^dag) = (K (x) conj(K)) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qauth.linear import DensityState, FlaggedOutput, SubsystemLayout, product


def kraus_superop(kraus: np.ndarray) -> np.ndarray:
    """Sum of ``K (x) conj(K)`` over all leading axes of ``kraus`` (..., out, in)."""
    k = kraus.reshape((-1,) + kraus.shape[-2:])
    s = np.einsum("kab,kcd->acbd", k, k.conj())
    return s.reshape(k.shape[1] ** 2, k.shape[2] ** 2)


@dataclass(frozen=True, eq=False)
class KeyedChannel:
    """Average over ``n_keys`` keys of a flagged channel on [M, R].

    ``acc`` maps ``vec(rho_MR)`` to the accepted ``vec`` on [M, R]; ``rej``
    maps it to the rejected reference-system operator, which is tensored
    with ``omega`` on M.
    """

    m_qubits: int
    r_qubits: int
    n_keys: int
    acc: np.ndarray
    rej: np.ndarray
    batch_acc: np.ndarray
    batch_rej: np.ndarray
    acc_effects: np.ndarray  # per key: sum_s K^dag K over accept Kraus operators
    omega: np.ndarray

    @property
    def layout(self) -> SubsystemLayout:
        return SubsystemLayout.of(("M", self.m_qubits), ("R", self.r_qubits))

    def _output(self, acc_s: np.ndarray, rej_s: np.ndarray, rho: DensityState) -> FlaggedOutput:
        d = self.layout.dim
        dr = 1 << self.r_qubits
        v = rho.matrix.reshape(-1)
        acc = (acc_s @ v).reshape(d, d)
        rej_r = (rej_s @ v).reshape(dr, dr)
        rej = product(
            DensityState(SubsystemLayout.of(("M", self.m_qubits)), self.omega),
            DensityState(SubsystemLayout.of(("R", self.r_qubits)), rej_r),
        )
        return FlaggedOutput(DensityState(self.layout, acc), rej)

    def _check_input(self, rho: DensityState) -> None:
        if rho.layout != self.layout:
            raise ValueError(f"expected input layout {self.layout.entries}, got {rho.layout.entries}")

    def apply(self, rho: DensityState) -> FlaggedOutput:
        self._check_input(rho)
        return self._output(self.acc, self.rej, rho)

    def apply_batches(self, rho: DensityState) -> list[FlaggedOutput]:
        self._check_input(rho)
        return [self._output(a, r, rho) for a, r in zip(self.batch_acc, self.batch_rej)]

    def acc_weights(self, rho: DensityState) -> np.ndarray:
        """Acceptance probability of every individual key."""
        self._check_input(rho)
        return np.einsum("kab,ba->k", self.acc_effects, rho.matrix).real

    def weight_stderr(self, rho: DensityState) -> float:
        """Standard error of the key-averaged acceptance (equal for the reject branch)."""
        w = self.acc_weights(rho)
        if len(w) < 2:
            return 0.0
        return float(w.std(ddof=1) / np.sqrt(len(w)))


def build_keyed_channel(
    key_unitaries: np.ndarray,
    attack: np.ndarray,
    *,
    r_qubits: int,
    block_qubits: int,
    trap_basis: np.ndarray,
    encoder: np.ndarray,
    decoder_kraus: np.ndarray,
    omega: np.ndarray,
    batches: int = 1,
) -> KeyedChannel:
    """Average the real-world channel of a trap-based code over the given keys.

    The codeword register holds ``block_qubits`` message-block qubits
    followed by trap qubits.  ``trap_basis`` is a unitary on the traps whose
    column 0 is the prepared trap state; its other columns span the
    rejecting outcomes.  ``encoder`` is the isometry M -> block and
    ``decoder_kraus`` (s, dim M, dim block) the decoding channel applied to
    accepted blocks.  ``key_unitaries[k]`` is the keyed unitary applied to
    the codeword at encoding time (its inverse is applied at decoding).
    """
    w = np.asarray(key_unitaries, dtype=complex)
    n_keys, dc, _ = w.shape
    dr = 1 << r_qubits
    db = 1 << block_qubits
    dt = dc // db
    dm = encoder.shape[1]
    if attack.shape != (dc * dr, dc * dr):
        raise ValueError("attack dimension does not match codeword and reference")
    batches = max(1, min(batches, n_keys))

    u4 = attack.reshape(dr, dc, dr, dc)
    # V_k = (W_k^dag (x) I) U (W_k (x) I), indices (key, r, c, s, c')
    v = np.einsum("kac,rcsd,kdb->krasb", w.conj().transpose(0, 2, 1), u4, w, optimize=True)
    v = v.reshape(n_keys, dr, dt, db, dr, dt, db)
    trap_in = trap_basis[:, 0]
    v = np.einsum("krtmsuq,u->krtmsq", v, trap_in)
    v = np.einsum("krtmsq,tb->kbrmsq", v, trap_basis.conj())
    v = np.einsum("kbrmsq,qi->kbrmsi", v, encoder)  # input block <- message

    # accepted: decode block back to M, output index (r, m_out)
    acc = np.einsum("jom,krmsi->kjrosi", decoder_kraus, v[:, 0])
    acc = acc.reshape(n_keys, len(decoder_kraus), dr * dm, dr * dm)
    # rejected: trace out the block as well, output on R only
    rej = v[:, 1:].transpose(0, 1, 3, 2, 4, 5)  # (k, b, m_block, r, s, i)
    rej = rej.reshape(n_keys, -1, dr, dr * dm)

    chunks = np.array_split(np.arange(n_keys), batches)
    sizes = np.array([len(c) for c in chunks], dtype=float)
    sum_acc = np.stack([kraus_superop(acc[c]) for c in chunks])
    sum_rej = np.stack([kraus_superop(rej[c]) for c in chunks])
    batch_acc = sum_acc / sizes[:, None, None]
    batch_rej = sum_rej / sizes[:, None, None]
    effects = np.einsum("ksab,ksac->kbc", acc.conj(), acc)
    return KeyedChannel(
        m_qubits=int(np.log2(dm)),
        r_qubits=r_qubits,
        n_keys=n_keys,
        acc=sum_acc.sum(axis=0) / n_keys,
        rej=sum_rej.sum(axis=0) / n_keys,
        batch_acc=batch_acc,
        batch_rej=batch_rej,
        acc_effects=effects,
        omega=np.asarray(omega, dtype=complex),
    )
