"""
The trap authentication code.

A one-qubit message is encoded with an error-correcting code into ``n``
qubits (block B), padded with ``n`` traps in |0> (T0) and ``n`` traps in |+>
(TP), then a keyed permutation and a keyed Pauli are applied to all ``3n``
positions.  The codeword register C lists B first, then T0, then TP.

Decoding undoes the key, measures T0 in the computational basis and TP in
the Hadamard basis, accepts iff every trap is unchanged, and runs the
code's correct-then-decode map on B.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from qauth import linear as lin
from qauth.adversary import AttackUnitary, PauliDecomposition
from qauth.channel import KeyedChannel, build_keyed_channel
from qauth.linear import DensityState, FlaggedOutput, SubsystemLayout
from qauth.pauli import (
    PauliOperator,
    QubitPartition,
    all_permutations,
    conjugate_by_permutation,
    enumerate_paulis,
    permutation_unitary,
    to_matrix,
    undetected_by_traps,
)

_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_PLUS = np.full((2, 2), 0.5)
_ZERO = np.array([[1.0, 0.0], [0.0, 0.0]])
# one-qubit logical Paulis indexed by 2*x + z
_LOGICAL = tuple(PauliOperator(1, code >> 1, code & 1) for code in range(4))


def _power_kron(m: np.ndarray, k: int) -> np.ndarray:
    out = np.ones((1, 1))
    for _ in range(k):
        out = np.kron(m, out)
    return out


@dataclass(frozen=True, eq=False)
class ECCode:
    """A one-logical-qubit stabilizer code with a minimum-weight lookup decoder.

    ``corrections[s]`` is the Pauli applied on syndrome ``s`` (bit k set iff
    stabilizer k anticommutes with the error).
    """

    name: str
    n: int
    t: int
    stabilizers: tuple[PauliOperator, ...]
    logical_x: PauliOperator
    logical_z: PauliOperator
    corrections: tuple[PauliOperator, ...]

    def syndrome(self, p: PauliOperator) -> int:
        s = 0
        for k, g in enumerate(self.stabilizers):
            if not g.commutes_with(p):
                s |= 1 << k
        return s

    def logical_of(self, error: PauliOperator) -> PauliOperator:
        """One-qubit Pauli left on the logical qubit after correcting ``error`` (phase dropped)."""
        if error.n != self.n:
            raise ValueError(f"error acts on {error.n} qubits, code has {self.n}")
        r = self.corrections[self.syndrome(error)] * error
        x = 0 if r.commutes_with(self.logical_z) else 1
        z = 0 if r.commutes_with(self.logical_x) else 1
        return PauliOperator(1, x, z)

    @cached_property
    def encoder(self) -> np.ndarray:
        """Isometry (2**n, 2) from the message qubit onto the code space."""
        dim = 1 << self.n
        proj = np.eye(dim, dtype=complex)
        for g in self.stabilizers:
            proj = proj @ (np.eye(dim) + to_matrix(g)) / 2
        zero = proj[:, 0] / np.linalg.norm(proj[:, 0])
        one = to_matrix(self.logical_x) @ zero
        return np.stack([zero, one], axis=1)

    @cached_property
    def decoder_kraus(self) -> np.ndarray:
        """Kraus operators ``E^dag C_s Pi_s`` of correct-then-decode, shape (2**r, 2, 2**n)."""
        dim = 1 << self.n
        mats = [to_matrix(g) for g in self.stabilizers]
        out = []
        for s in range(1 << len(self.stabilizers)):
            proj = np.eye(dim, dtype=complex)
            for k, g in enumerate(mats):
                sign = -1 if (s >> k) & 1 else 1
                proj = proj @ (np.eye(dim) + sign * g) / 2
            out.append(self.encoder.conj().T @ to_matrix(self.corrections[s]) @ proj)
        return np.array(out)

    @cached_property
    def logical_table(self) -> np.ndarray:
        """``2*x + z`` code of ``logical_of`` for every block Pauli, indexed by ``x * 2**n + z``."""
        dim = 1 << self.n
        table = np.empty(dim * dim, dtype=np.int8)
        for x in range(dim):
            for z in range(dim):
                lp = self.logical_of(PauliOperator(self.n, x, z))
                table[x * dim + z] = 2 * lp.x + lp.z
        return table


def _lookup_corrections(n: int, stabilizers, t: int) -> tuple[PauliOperator, ...]:
    def syn(p):
        return sum(1 << k for k, g in enumerate(stabilizers) if not g.commutes_with(p))

    table: dict[int, PauliOperator] = {}
    for w in range(t + 1):
        for support in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                p = PauliOperator.identity(n)
                for q, ch in zip(support, letters):
                    p = p * PauliOperator.single(n, q, ch)
                table.setdefault(syn(p), p)
    identity = PauliOperator.identity(n)
    return tuple(table.get(s, identity) for s in range(1 << len(stabilizers)))


def trivial_code() -> ECCode:
    x, z = PauliOperator.from_label("X"), PauliOperator.from_label("Z")
    return ECCode("trivial", 1, 0, (), x, z, (PauliOperator.identity(1),))


def five_qubit_code() -> ECCode:
    gens = tuple(PauliOperator.from_label(s) for s in ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"))
    return ECCode(
        "five_qubit",
        5,
        1,
        gens,
        PauliOperator.from_label("XXXXX"),
        PauliOperator.from_label("ZZZZZ"),
        _lookup_corrections(5, gens, 1),
    )


CODES = {"trivial": trivial_code, "five_qubit": five_qubit_code}


def get_code(name: str) -> ECCode:
    try:
        return CODES[name]()
    except KeyError:
        raise ValueError(f"unknown error-correcting code {name!r} (choose from {sorted(CODES)})") from None


def ec_encode(code: ECCode, rho: DensityState, label: str = "M") -> DensityState:
    """Replace the one-qubit register ``label`` by its ``n``-qubit encoding."""
    if rho.layout.size(label) != 1:
        raise ValueError("the code encodes exactly one qubit")
    return lin.apply_kraus(rho, [code.encoder], label, code.n)


def ec_decode(code: ECCode, rho: DensityState, label: str = "M") -> DensityState:
    if rho.layout.size(label) != code.n:
        raise ValueError(f"register {label!r} does not hold {code.n} qubits")
    return lin.apply_kraus(rho, list(code.decoder_kraus), label, 1)


# -- keys ------------------------------------------------------------------


@dataclass(frozen=True)
class TrapKey:
    """Permutation of the ``3n`` codeword positions and a phase-free Pauli mask."""

    perm: tuple[int, ...]
    pauli: PauliOperator

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(int(v) for v in self.perm))
        m = len(self.perm)
        if m % 3 or sorted(self.perm) != list(range(m)):
            raise ValueError(f"key permutation {self.perm} is not a permutation of 3n indices")
        if self.pauli.n != m or self.pauli.phase_exp:
            raise ValueError("key Pauli must be phase-free on the whole codeword")

    @property
    def n(self) -> int:
        return len(self.perm) // 3

    def unitary(self) -> np.ndarray:
        """``P_k2 pi_k1``, the map applied to the codeword at encoding time."""
        return to_matrix(self.pauli) @ permutation_unitary(self.perm)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "TrapKey":
        m = 3 * n
        perm = tuple(int(v) for v in rng.permutation(m))
        x, z = (int(v) for v in rng.integers(0, 1 << m, size=2))
        return cls(perm, PauliOperator(m, x, z))


def all_keys(n: int) -> list[TrapKey]:
    """Every key, permutations outer and Paulis inner (384 keys at ``n == 1``)."""
    return [TrapKey(p, q) for p in all_permutations(3 * n) for q in enumerate_paulis(3 * n)]


def partition(code: ECCode) -> QubitPartition:
    return QubitPartition(code.n, code.n, code.n)


def _check_key(key: TrapKey, code: ECCode) -> None:
    if key.n != code.n:
        raise ValueError(f"key covers {3 * key.n} positions, code needs {3 * code.n}")


def trap_basis(n: int) -> np.ndarray:
    """Unitary on [T0, TP] whose column 0 is |0...0>|+...+>."""
    return np.kron(_power_kron(_H, n), np.eye(1 << n))


def accept_projector(n: int) -> np.ndarray:
    """|0..0><0..0| on T0 (low) and |+..+><+..+| on TP (high)."""
    return np.kron(_power_kron(_PLUS, n), _power_kron(_ZERO, n))


# -- dense path ------------------------------------------------------------


def encode(key: TrapKey, code: ECCode, rho: DensityState) -> DensityState:
    """Replace the one-qubit register M with the ``3n``-qubit codeword register C."""
    _check_key(key, code)
    n = code.n
    order = rho.layout.labels
    others = [lab for lab in order if lab != "M"]
    s = ec_encode(code, rho)
    traps = DensityState(SubsystemLayout.of(("T0", n), ("TP", n)), accept_projector(n))
    s = lin.reorder(lin.product(s, traps), ["M", "T0", "TP"] + others)
    s = lin.apply_unitary(s, key.unitary(), ["M", "T0", "TP"])
    s = lin.merge(s, ["M", "T0", "TP"], "C")
    return lin.reorder(s, ["C" if lab == "M" else lab for lab in order])


def decode(
    key: TrapKey, code: ECCode, rho: DensityState, omega: np.ndarray | None = None
) -> FlaggedOutput:
    """Un-key, check both trap blocks, decode the accepted block; output on [M, ...]."""
    _check_key(key, code)
    n = code.n
    if rho.layout.size("C") != 3 * n:
        raise ValueError(f"register C must hold {3 * n} qubits")
    order = ["M" if lab == "C" else lab for lab in rho.layout.labels]
    s = lin.split(rho, "C", [("B", n), ("T0", n), ("TP", n)])
    s = lin.apply_unitary(s, key.unitary().conj().T, ["B", "T0", "TP"])
    p_acc = accept_projector(n)
    acc = lin.project(s, p_acc, ["T0", "TP"])
    acc = lin.partial_trace(acc, [lab for lab in s.layout.labels if lab not in ("T0", "TP")])
    acc = ec_decode(code, lin.relabel(acc, {"B": "M"}))
    rej = lin.project(s, np.eye(p_acc.shape[0]) - p_acc, ["T0", "TP"])
    rest = lin.partial_trace(rej, [lab for lab in s.layout.labels if lab not in ("B", "T0", "TP")])
    om = lin.zero_state("M", 1).matrix if omega is None else omega
    rej = lin.product(DensityState(SubsystemLayout.of(("M", 1)), om), rest)
    return FlaggedOutput(lin.reorder(acc, order), lin.reorder(rej, order))


def real_channel(
    key: TrapKey,
    code: ECCode,
    attack: AttackUnitary,
    rho: DensityState,
    omega: np.ndarray | None = None,
) -> FlaggedOutput:
    """Encode, apply the attack to [C, R], decode.  ``rho`` has layout [M, R]."""
    if attack.n_c != 3 * code.n or attack.r_qubits != rho.layout.size("R"):
        raise ValueError("attack dimensions do not match codeword and reference")
    enc = encode(key, code, rho)
    attacked = lin.apply_unitary(enc, attack.matrix, ["C", "R"])
    return decode(key, code, attacked, omega)


def keyed_channel(
    code: ECCode,
    attack: AttackUnitary,
    keys: list[TrapKey] | None = None,
    omega: np.ndarray | None = None,
) -> KeyedChannel:
    """Average of ``real_channel`` over ``keys`` (default: all keys) as superoperators."""
    n = code.n
    if attack.n_c != 3 * n:
        raise ValueError("attack does not act on the codeword")
    if keys is None:
        keys = all_keys(n)
    for k in keys:
        _check_key(k, code)
    unitaries = np.stack([k.unitary() for k in keys])
    return build_keyed_channel(
        unitaries,
        attack.matrix,
        r_qubits=attack.r_qubits,
        block_qubits=n,
        trap_basis=trap_basis(n),
        encoder=code.encoder,
        decoder_kraus=code.decoder_kraus,
        omega=lin.zero_state("M", 1).matrix if omega is None else omega,
    )


# -- symbolic path ---------------------------------------------------------


@dataclass(frozen=True)
class PauliOutcome:
    """Result of a Pauli attack under one key: acceptance and, if accepted, the logical error."""

    accepted: bool
    logical_pauli: PauliOperator | None


def symbolic_pauli_outcome(key: TrapKey, code: ECCode, attack: PauliOperator) -> PauliOutcome:
    """Decode a Pauli attack without dense matrices.

    The key's Pauli mask only changes the attack's sign, so the outcome is
    decided by where the permutation moves each attack letter.
    """
    _check_key(key, code)
    if not isinstance(attack, PauliOperator):
        raise TypeError("symbolic decoding needs a Pauli attack")
    if attack.n != 3 * code.n:
        raise ValueError(f"attack acts on {attack.n} qubits, codeword has {3 * code.n}")
    q = conjugate_by_permutation(attack, key.perm)
    if not undetected_by_traps(q, partition(code)):
        return PauliOutcome(False, None)
    return PauliOutcome(True, code.logical_of(q.restrict(0, code.n)))


@dataclass(frozen=True, eq=False)
class PermutationOutcomes:
    """Per-permutation outcomes of one Pauli attack.

    ``undetected``: traps unchanged.  ``block_weight``: non-identity letters
    landing on the message block.  ``logical``: ``2*x + z`` code of the
    logical error left after correction.
    """

    undetected: np.ndarray
    block_weight: np.ndarray
    logical: np.ndarray


def trap_landing(n: int, attack: PauliOperator, perms: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Where a Pauli's letters land under each row of ``perms`` (shape (k, 3n)).

    Returns ``undetected`` (both trap blocks unchanged) and the X and Z
    bit arrays of the message block, shape (k, n).
    """
    m = 3 * n
    perms = np.asarray(perms, dtype=np.intp)
    if perms.ndim != 2 or perms.shape[1] != m:
        raise ValueError(f"expected permutations of {m} positions")
    if attack.n != m:
        raise ValueError(f"attack acts on {attack.n} qubits, codeword has {m}")
    bits = np.arange(m)
    px = np.broadcast_to((attack.x >> bits) & 1, perms.shape)
    pz = np.broadcast_to((attack.z >> bits) & 1, perms.shape)
    # the letter on position i lands on position perm[i]
    qx = np.zeros(perms.shape, dtype=np.int64)
    qz = np.zeros(perms.shape, dtype=np.int64)
    np.put_along_axis(qx, perms, px, axis=1)
    np.put_along_axis(qz, perms, pz, axis=1)
    undetected = ~(qx[:, n:2 * n].any(axis=1) | qz[:, 2 * n:].any(axis=1))
    return undetected, qx[:, :n], qz[:, :n]


def permutation_outcomes(code: ECCode, attack: PauliOperator, perms: np.ndarray) -> PermutationOutcomes:
    """Vectorized ``symbolic_pauli_outcome`` over the rows of ``perms`` (shape (k, 3n))."""
    n = code.n
    undetected, bx, bz = trap_landing(n, attack, perms)
    weights = 1 << np.arange(n)
    index = (bx @ weights) * (1 << n) + bz @ weights
    return PermutationOutcomes(undetected, (bx | bz).sum(axis=1), code.logical_table[index])


def sample_permutations(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return np.argsort(rng.random((count, m)), axis=1)


def twirled_channel(
    code: ECCode,
    decomp: PauliDecomposition,
    rho: DensityState,
    perms: np.ndarray | None = None,
    omega: np.ndarray | None = None,
) -> FlaggedOutput:
    """Key average of the real channel after the Pauli part of the key is averaged out.

    Every component ``A_P`` contributes incoherently; for each permutation
    it is either rejected or accepted with the logical error found
    symbolically.  ``perms`` defaults to every permutation of ``3n``
    positions.
    """
    n = code.n
    if decomp.n_c != 3 * n:
        raise ValueError("decomposition does not cover the codeword")
    if perms is None:
        perms = np.array(all_permutations(3 * n))
    k = len(perms)
    dr = decomp.r_dim
    acc = np.zeros((2 * dr, 2 * dr), dtype=complex)
    rej_r = np.zeros((dr, dr), dtype=complex)
    rho4 = rho.matrix.reshape(dr, 2, dr, 2)
    rho_r = np.einsum("rasa->rs", rho4)
    for p, a in zip(decomp.paulis, decomp.components):
        if not np.any(a):
            continue
        out = permutation_outcomes(code, p, perms)
        ok = out.undetected
        counts = np.bincount(out.logical[ok], minlength=4)
        for code_l, c in enumerate(counts):
            if c:
                op = np.kron(a, to_matrix(_LOGICAL[code_l]))
                acc += (c / k) * op @ rho.matrix @ op.conj().T
        frac_rej = 1.0 - ok.sum() / k
        if frac_rej:
            rej_r += frac_rej * a @ rho_r @ a.conj().T
    om = lin.zero_state("M", 1).matrix if omega is None else omega
    layout = rho.layout
    rej = np.kron(rej_r, om)
    return FlaggedOutput(DensityState(layout, acc), DensityState(layout, rej))
