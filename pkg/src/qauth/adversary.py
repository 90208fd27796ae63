"""
Unitary attacks on the codeword register C jointly with a reference R.

Attack matrices act on the layout [C, R]: C occupies the low qubits.
Any such unitary expands as ``U = sum_P P (x) A_P`` over phase-free Paulis
on C, with operator-valued coefficients ``A_P`` on R.  The weight
``w_P = tr(A_P^dag A_P) / dim(R)`` plays the role of ``|alpha_P|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qauth.pauli import PauliOperator, enumerate_paulis, to_matrix

DECOMPOSE_LIMIT = 6
UNITARY_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class AttackUnitary:
    matrix: np.ndarray
    n_c: int
    r_qubits: int = 0
    name: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = 1 << (self.n_c + self.r_qubits)
        if m.shape != (dim, dim):
            raise ValueError(f"attack of shape {m.shape} does not act on {self.n_c}+{self.r_qubits} qubits")
        if np.abs(m.conj().T @ m - np.eye(dim)).max() > UNITARY_ATOL:
            raise ValueError("attack matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def r_dim(self) -> int:
        return 1 << self.r_qubits

    @property
    def c_dim(self) -> int:
        return 1 << self.n_c


@dataclass(frozen=True, eq=False)
class PauliDecomposition:
    """Components ``A_P`` of an attack, in ``enumerate_paulis`` order."""

    n_c: int
    r_qubits: int
    paulis: tuple[PauliOperator, ...]
    components: np.ndarray  # shape (4**n_c, r_dim, r_dim)

    @property
    def r_dim(self) -> int:
        return 1 << self.r_qubits

    @property
    def weights(self) -> np.ndarray:
        c = self.components
        return np.einsum("pij,pij->p", c.conj(), c).real / self.r_dim

    def component(self, p: PauliOperator) -> np.ndarray:
        return self.components[p.x * (1 << self.n_c) + p.z]

    def weight(self, p: PauliOperator) -> float:
        a = self.component(p)
        return float(np.vdot(a, a).real / self.r_dim)

    def reconstruct(self) -> np.ndarray:
        dim = 1 << (self.n_c + self.r_qubits)
        out = np.zeros((dim, dim), dtype=complex)
        for p, a in zip(self.paulis, self.components):
            out += np.kron(a, to_matrix(p))
        return out


def decompose(attack: AttackUnitary) -> PauliDecomposition:
    """``A_P = tr_C[(P (x) I) U] / 2**n_C`` for every phase-free P."""
    if attack.n_c > DECOMPOSE_LIMIT:
        raise ValueError(f"decomposition limited to {DECOMPOSE_LIMIT} codeword qubits")
    dc, dr = attack.c_dim, attack.r_dim
    u4 = attack.matrix.reshape(dr, dc, dr, dc)
    paulis = tuple(enumerate_paulis(attack.n_c))
    comps = np.empty((len(paulis), dr, dr), dtype=complex)
    for k, p in enumerate(paulis):
        comps[k] = np.einsum("ab,rbsa->rs", to_matrix(p), u4) / dc
    return PauliDecomposition(attack.n_c, attack.r_qubits, paulis, comps)


# -- generators ------------------------------------------------------------


def identity_attack(n_c: int, r_qubits: int = 0) -> AttackUnitary:
    return AttackUnitary(np.eye(1 << (n_c + r_qubits)), n_c, r_qubits, "identity")


def pauli_attack(p: PauliOperator | str, r_qubits: int = 0) -> AttackUnitary:
    """``P (x) I_R``."""
    if isinstance(p, str):
        p = PauliOperator.from_label(p)
    return AttackUnitary(
        np.kron(np.eye(1 << r_qubits), to_matrix(p)), p.n, r_qubits, f"pauli:{p}"
    )


def random_pauli_attack(n_c: int, seed, r_qubits: int = 0) -> AttackUnitary:
    """Uniform over the non-identity phase-free Paulis, tensored with I_R."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4**n_c))
    return pauli_attack(enumerate_paulis(n_c)[k], r_qubits)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unitary_attack(n_c: int, r_qubits: int, seed) -> AttackUnitary:
    rng = np.random.default_rng(seed)
    u = haar_unitary(1 << (n_c + r_qubits), rng)
    return AttackUnitary(u, n_c, r_qubits, f"haar:{seed}" if isinstance(seed, int) else "haar")


def pauli_conjugated(attack: AttackUnitary, q: PauliOperator) -> AttackUnitary:
    """``(Q (x) I) U (Q (x) I)``: every ``A_P`` picks up a sign, weights unchanged."""
    qm = np.kron(np.eye(attack.r_dim), to_matrix(q))
    return AttackUnitary(qm @ attack.matrix @ qm, attack.n_c, attack.r_qubits, f"{attack.name}^{q}")


def pauli_relabeled(attack: AttackUnitary, q: PauliOperator) -> AttackUnitary:
    """``(Q (x) I) U``: the weight profile is permuted by ``P -> QP``."""
    qm = np.kron(np.eye(attack.r_dim), to_matrix(q))
    return AttackUnitary(qm @ attack.matrix, attack.n_c, attack.r_qubits, f"{q}*{attack.name}")


# -- text formats ----------------------------------------------------------


def _parse_entry(token: str) -> complex:
    return complex(token.replace("i", "j"))


def read_matrix(path: str | Path) -> np.ndarray:
    """Read one matrix row per line, entries like ``0.5-0.5i`` separated by whitespace.

    Blank lines and lines starting with ``#`` are ignored.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([_parse_entry(tok) for tok in line.split()])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: cannot parse complex entries") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError(f"{path}: matrix must be square")
    return np.array(rows, dtype=complex)


def format_entry(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def write_matrix(path: str | Path, matrix: np.ndarray) -> None:
    lines = [" ".join(format_entry(complex(z)) for z in row) for row in np.asarray(matrix)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_attack(spec: str, n_c: int, r_qubits: int = 0) -> AttackUnitary:
    """Build an attack from ``identity``, ``pauli:<literal>``, ``haar:<seed>`` or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    if kind == "identity" and not arg:
        return identity_attack(n_c, r_qubits)
    if kind == "pauli":
        p = PauliOperator.from_label(arg)
        if p.n != n_c:
            raise ValueError(f"Pauli {arg!r} has {p.n} qubits, codeword has {n_c}")
        return pauli_attack(p.unsigned(), r_qubits)
    if kind == "haar":
        return random_unitary_attack(n_c, r_qubits, int(arg))
    if kind == "file":
        return AttackUnitary(read_matrix(arg), n_c, r_qubits, spec)
    raise ValueError(f"unknown attack spec {spec!r}")
