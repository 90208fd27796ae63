"""
Symbolic n-qubit Pauli operators.

A Pauli is stored as two bit masks plus a phase exponent::

    P = i**phase_exp * L_0 (x) L_1 (x) ... (x) L_{n-1}

where the letter ``L_j`` on qubit ``j`` is read off from bit ``j`` of the
masks: (x, z) = (0, 0) -> I, (0, 1) -> Z, (1, 0) -> X, (1, 1) -> Y.
Letters are Hermitian, so a Pauli with ``phase_exp == 0`` is one of the
4**n "phase-free" Paulis.  Since Y = iXZ, the letter string equals
``i**popcount(x & z) * X**x Z**z``.

Dense matrices use little-endian ordering: qubit 0 is the least
significant bit of a basis-state index.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ENUMERATION_LIMIT = 10
MATRIX_LIMIT = 12

_LETTERS = {(0, 0): "I", (0, 1): "Z", (1, 0): "X", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}
_PREFIX_OUT = {0: "", 1: "+i", 2: "-", 3: "-i"}
_PREFIX_IN = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}
_LITERAL = re.compile(r"^([+-]?i?)([IXYZ]*)$")

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int
    z: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit in {self.n} qubits")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, 0, 0)

    @classmethod
    def from_label(cls, label: str) -> "PauliOperator":
        """Parse a literal such as ``"XIZ"``, ``"-Y"`` or ``"-iXIZ"``."""
        m = _LITERAL.match(label.strip().replace("−", "-"))
        if m is None or not m.group(2):
            raise ValueError(f"malformed Pauli literal {label!r}")
        prefix, letters = m.groups()
        x = z = 0
        for j, ch in enumerate(letters):
            bx, bz = _BITS[ch]
            x |= bx << j
            z |= bz << j
        return cls(len(letters), x, z, _PREFIX_IN[prefix])

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOperator":
        """``letter`` on ``qubit``, identity elsewhere."""
        bx, bz = _BITS[letter]
        return cls(n, bx << qubit, bz << qubit)

    # -- inspection -------------------------------------------------------

    @property
    def letters(self) -> str:
        return "".join(
            _LETTERS[(self.x >> j) & 1, (self.z >> j) & 1] for j in range(self.n)
        )

    def __str__(self) -> str:
        return _PREFIX_OUT[self.phase_exp] + self.letters

    def __repr__(self) -> str:
        return f"PauliOperator({str(self)!r})"

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        """True for the identity up to phase."""
        return self.x == 0 and self.z == 0

    def unsigned(self) -> "PauliOperator":
        """Same letters, phase dropped."""
        return PauliOperator(self.n, self.x, self.z)

    def equal_mod_phase(self, other: "PauliOperator") -> bool:
        return self.n == other.n and self.x == other.x and self.z == other.z

    def commutes_with(self, other: "PauliOperator") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def restrict(self, start: int, stop: int) -> "PauliOperator":
        """Phase-free letters on qubits ``start..stop-1``."""
        width = stop - start
        mask = (1 << width) - 1
        return PauliOperator(width, (self.x >> start) & mask, (self.z >> start) & mask)

    def letter_counts(self) -> tuple[int, int, int]:
        """Number of (X, Y, Z) letters."""
        y = self.x & self.z
        return _popcount(self.x & ~y), _popcount(y), _popcount(self.z & ~y)

    def to_matrix(self) -> np.ndarray:
        return to_matrix(self)


@dataclass(frozen=True)
class QubitPartition:
    """Block sizes of a codeword: message, |0>-traps, |+>-traps (in qubit order)."""

    message: int
    trap0: int
    trapplus: int = 0

    def __post_init__(self):
        if min(self.message, self.trap0, self.trapplus) < 0:
            raise ValueError("block sizes must be nonnegative")

    @property
    def total(self) -> int:
        return self.message + self.trap0 + self.trapplus


def _check_same_size(a: PauliOperator, b: PauliOperator) -> None:
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} qubits")


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Phase-exact product ``a @ b``."""
    _check_same_size(a, b)
    # letters -> i^{|x&z|} X^x Z^z; moving Z^{z_a} past X^{x_b} costs (-1)^{|z_a & x_b|}
    e = (
        a.phase_exp
        + b.phase_exp
        + _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        + 2 * _popcount(a.z & b.x)
    )
    x, z = a.x ^ b.x, a.z ^ b.z
    return PauliOperator(a.n, x, z, e - _popcount(x & z))


def weight(p: PauliOperator) -> int:
    return p.weight


def tensor(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """``a`` on the low qubits, ``b`` on the following ones."""
    return PauliOperator(
        a.n + b.n, a.x | (b.x << a.n), a.z | (b.z << a.n), a.phase_exp + b.phase_exp
    )


def _check_permutation(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(v) for v in perm)
    if len(perm) != n or sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of {n} indices: {perm}")
    return perm


def conjugate_by_permutation(p: PauliOperator, perm: Sequence[int]) -> PauliOperator:
    """Move the letter on qubit ``i`` to qubit ``perm[i]``.

    This is ``pi^dag P pi`` for ``pi = permutation_unitary(perm)``.
    Conjugating by ``sigma`` and then ``tau`` equals conjugating once by
    ``tau o sigma``.
    """
    perm = _check_permutation(perm, p.n)
    x = z = 0
    for i, target in enumerate(perm):
        x |= ((p.x >> i) & 1) << target
        z |= ((p.z >> i) & 1) << target
    return PauliOperator(p.n, x, z, p.phase_exp)


def permutation_unitary(perm: Sequence[int]) -> np.ndarray:
    """Real permutation matrix ``pi`` with ``pi^dag P pi`` relocating qubit i to perm[i]."""
    n = len(perm)
    perm = _check_permutation(perm, n)
    dim = 1 << n
    # pi|b> = |b'> with b'_i = b_{perm[i]}
    out = np.zeros((dim, dim))
    for b in range(dim):
        bp = 0
        for i, src in enumerate(perm):
            bp |= ((b >> src) & 1) << i
        out[bp, b] = 1.0
    return out


def enumerate_paulis(n: int, limit: int = ENUMERATION_LIMIT) -> list[PauliOperator]:
    """All 4**n phase-free Paulis, ordered by (x_mask, z_mask)."""
    if n > limit:
        raise ValueError(f"refusing to enumerate 4**{n} Paulis (limit n <= {limit})")
    dim = 1 << n
    return [PauliOperator(n, x, z) for x in range(dim) for z in range(dim)]


def undetected_by_traps(p: PauliOperator, part: QubitPartition) -> bool:
    """True iff ``p`` leaves |0> traps and |+> traps unchanged (up to phase).

    The message block is unconstrained; |0>-traps admit only I/Z and
    |+>-traps only I/X.
    """
    if part.total != p.n:
        raise ValueError(f"partition covers {part.total} qubits, Pauli has {p.n}")
    lo = part.message
    mid = lo + part.trap0
    trap0_bits = ((1 << mid) - 1) ^ ((1 << lo) - 1)
    plus_bits = ((1 << p.n) - 1) ^ ((1 << mid) - 1)
    return not (p.x & trap0_bits) and not (p.z & plus_bits)


def accepted_by_simulator(p: PauliOperator, part: QubitPartition, t: int) -> bool:
    """Trap-undetected and at most ``t`` non-identity letters on the message block."""
    return undetected_by_traps(p, part) and p.restrict(0, part.message).weight <= t


def to_matrix(p: PauliOperator, limit: int = MATRIX_LIMIT) -> np.ndarray:
    if p.n > limit:
        raise ValueError(f"dense matrix for {p.n} qubits exceeds limit {limit}")
    out = np.ones((1, 1), dtype=complex)
    # little-endian: qubit 0 is the rightmost Kronecker factor
    for ch in p.letters:
        out = np.kron(_SINGLE[ch], out)
    return (1j ** p.phase_exp) * out


def all_permutations(n: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(n)))
