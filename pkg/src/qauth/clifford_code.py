"""
The Clifford authentication code.

Encoding appends ``d`` traps in |0> to an ``n``-qubit message and applies a
keyed Clifford to all ``n + d`` qubits (register C, message block first).
Decoding undoes the Clifford and accepts iff every trap reads 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qauth import linear as lin
from qauth.adversary import AttackUnitary
from qauth.channel import KeyedChannel, build_keyed_channel
from qauth.clifford import CliffordElement, enumerate_all, sample_uniform, to_unitary
from qauth.linear import DensityState, FlaggedOutput


@dataclass(frozen=True)
class CliffordCodeParams:
    n: int
    d: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need at least one message qubit and one trap")
        if self.n + self.d > lin.QUBIT_CAP:
            raise ValueError("codeword exceeds the simulation cap")

    @property
    def codeword_qubits(self) -> int:
        return self.n + self.d


@dataclass(frozen=True)
class KeyStrategy:
    """``exhaustive`` over the whole key set, or ``sampled`` with ``count`` keys."""

    kind: str = "sampled"
    count: int = 10_000
    seed: int = 0
    batches: int = 20

    def __post_init__(self):
        if self.kind not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown key strategy {self.kind!r}")


def default_omega(n: int) -> np.ndarray:
    """Replacement message on reject: |0...0><0...0|."""
    return lin.zero_state("M", n).matrix


def _check_key(key: CliffordElement, n_qubits: int) -> None:
    if key.n != n_qubits:
        raise ValueError(f"key acts on {key.n} qubits, codeword has {n_qubits}")


def encode(key: CliffordElement, rho: DensityState, d: int) -> DensityState:
    """Replace register M by the codeword register C = C_k (M (x) |0><0|^d) C_k^dag."""
    n = rho.layout.size("M")
    _check_key(key, n + d)
    others = [lab for lab in rho.layout.labels if lab != "M"]
    s = lin.product(rho, lin.zero_state("T", d))
    s = lin.reorder(s, ["M", "T"] + others)
    s = lin.apply_unitary(s, to_unitary(key), ["M", "T"])
    s = lin.merge(s, ["M", "T"], "C")
    return _restore_order(s, rho.layout.labels, {"M": "C"})


def _restore_order(s: DensityState, order, rename) -> DensityState:
    return lin.reorder(s, [rename.get(lab, lab) for lab in order])


def decode(
    key: CliffordElement, rho: DensityState, n: int, omega: np.ndarray | None = None
) -> FlaggedOutput:
    """Undo the key, check the traps, return flagged branches on [M, ...]."""
    d = rho.layout.size("C") - n
    _check_key(key, n + d)
    if d < 1:
        raise ValueError("codeword has no trap qubits")
    order = rho.layout.labels
    s = lin.split(rho, "C", [("M", n), ("T", d)])
    s = lin.apply_unitary(s, to_unitary(key).conj().T, ["M", "T"])
    p_acc = lin.zero_state("T", d).matrix
    acc = lin.partial_trace(lin.project(s, p_acc, ["T"]), [lab for lab in s.layout.labels if lab != "T"])
    acc = _restore_order(acc, order, {"C": "M"})
    rej_full = lin.project(s, np.eye(1 << d) - p_acc, ["T"])
    rest = lin.partial_trace(rej_full, [lab for lab in s.layout.labels if lab not in ("M", "T")])
    om = default_omega(n) if omega is None else omega
    rej = lin.product(DensityState(lin.SubsystemLayout.of(("M", n)), om), rest)
    rej = _restore_order(rej, order, {"C": "M"})
    return FlaggedOutput(acc, rej)


def real_channel(
    key: CliffordElement,
    attack: AttackUnitary,
    rho: DensityState,
    d: int,
    omega: np.ndarray | None = None,
) -> FlaggedOutput:
    """Encode, apply the attack to [C, R], decode.  ``rho`` has layout [M, R]."""
    n = rho.layout.size("M")
    if attack.n_c != n + d or attack.r_qubits != rho.layout.size("R"):
        raise ValueError("attack dimensions do not match codeword and reference")
    enc = encode(key, rho, d)
    attacked = lin.apply_unitary(enc, attack.matrix, ["C", "R"])
    return decode(key, attacked, n, omega)


def key_set(params: CliffordCodeParams, strategy: KeyStrategy) -> list[CliffordElement]:
    m = params.codeword_qubits
    if strategy.kind == "exhaustive":
        if m > 2:
            raise ValueError(f"exhaustive key average infeasible for {m}-qubit codewords")
        return enumerate_all(m, allow_two_qubits=True)
    rng = np.random.default_rng(strategy.seed)
    return [sample_uniform(m, rng) for _ in range(strategy.count)]


def key_unitaries(keys: list[CliffordElement]) -> np.ndarray:
    return np.stack([to_unitary(k) for k in keys])


def keyed_channel(
    params: CliffordCodeParams,
    attack: AttackUnitary,
    strategy: KeyStrategy,
    omega: np.ndarray | None = None,
    keys: list[CliffordElement] | None = None,
    unitaries: np.ndarray | None = None,
) -> KeyedChannel:
    """Key-averaged real-world channel as superoperators.

    Pass ``unitaries`` (dense key unitaries, stacked) to reuse one key set
    across many attacks.
    """
    if attack.n_c != params.codeword_qubits:
        raise ValueError("attack does not act on the codeword")
    if unitaries is None:
        unitaries = key_unitaries(key_set(params, strategy) if keys is None else keys)
    batches = strategy.batches if strategy.kind == "sampled" else 1
    dm = 1 << params.n
    return build_keyed_channel(
        unitaries,
        attack.matrix,
        r_qubits=attack.r_qubits,
        block_qubits=params.n,
        trap_basis=np.eye(1 << params.d),
        encoder=np.eye(dm),
        decoder_kraus=np.eye(dm)[None],
        omega=default_omega(params.n) if omega is None else omega,
        batches=batches,
    )


@dataclass(frozen=True, eq=False)
class KeyedAverage:
    output: FlaggedOutput
    acc_stderr: float
    rej_stderr: float
    n_keys: int


def keyed_average(
    params: CliffordCodeParams,
    attack: AttackUnitary,
    rho: DensityState,
    strategy: KeyStrategy,
    omega: np.ndarray | None = None,
) -> KeyedAverage:
    """Average of ``real_channel`` over keys, with standard errors of the branch weights."""
    ch = keyed_channel(params, attack, strategy, omega)
    err = ch.weight_stderr(rho) if strategy.kind == "sampled" else 0.0
    return KeyedAverage(ch.apply(rho), err, err, ch.n_keys)
