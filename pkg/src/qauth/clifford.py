"""
Clifford unitaries as tableaux of generator images.

A Clifford ``C`` is identified (modulo global phase) by the Paulis
``C X_j C^dag`` and ``C Z_j C^dag``.  Every image is a Hermitian Pauli,
i.e. a letter string with sign +1 or -1.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from qauth.pauli import PauliOperator, multiply, to_matrix

SAMPLING_LIMIT = 20
UNITARY_LIMIT = 6


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class CliffordElement:
    n: int
    image_x: tuple[PauliOperator, ...]
    image_z: tuple[PauliOperator, ...]

    def __post_init__(self):
        object.__setattr__(self, "image_x", tuple(self.image_x))
        object.__setattr__(self, "image_z", tuple(self.image_z))
        if len(self.image_x) != self.n or len(self.image_z) != self.n:
            raise ValueError("need exactly one X image and one Z image per qubit")
        images = self.image_x + self.image_z
        for p in images:
            if p.n != self.n:
                raise ValueError("generator image has the wrong qubit count")
            if p.phase_exp % 2:
                raise ValueError(f"image {p} is not Hermitian")
        for j in range(self.n):
            for k in range(self.n):
                if not self.image_x[j].commutes_with(self.image_x[k]):
                    raise ValueError("X images must commute")
                if not self.image_z[j].commutes_with(self.image_z[k]):
                    raise ValueError("Z images must commute")
                anticommute = not self.image_x[j].commutes_with(self.image_z[k])
                if anticommute != (j == k):
                    raise ValueError("images violate the symplectic condition")

    @classmethod
    def identity(cls, n: int) -> "CliffordElement":
        return cls(
            n,
            tuple(PauliOperator.single(n, j, "X") for j in range(n)),
            tuple(PauliOperator.single(n, j, "Z") for j in range(n)),
        )

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        return conjugate(self, p)

    def __matmul__(self, other: "CliffordElement") -> "CliffordElement":
        return compose(self, other)

    def to_dict(self) -> dict[str, str]:
        """Serialize as ``{"X1": "Z", "Z1": "X"}`` (qubits numbered from 1)."""
        out = {}
        for j in range(self.n):
            out[f"X{j + 1}"] = str(self.image_x[j])
            out[f"Z{j + 1}"] = str(self.image_z[j])
        return out

    @classmethod
    def from_dict(cls, data: dict[str, str]) -> "CliffordElement":
        n = len(data) // 2
        if len(data) != 2 * n or n == 0:
            raise ValueError("expected one X and one Z entry per qubit")
        try:
            xs = tuple(PauliOperator.from_label(data[f"X{j + 1}"]) for j in range(n))
            zs = tuple(PauliOperator.from_label(data[f"Z{j + 1}"]) for j in range(n))
        except KeyError as exc:
            raise ValueError(f"missing generator entry {exc}") from None
        return cls(n, xs, zs)


def conjugate(c: CliffordElement, p: PauliOperator) -> PauliOperator:
    """Return ``C p C^dag``, phase-exact."""
    if c.n != p.n:
        raise ValueError(f"size mismatch: Clifford on {c.n} qubits, Pauli on {p.n}")
    out = PauliOperator(p.n, 0, 0, p.phase_exp)
    for j in range(p.n):
        bx, bz = (p.x >> j) & 1, (p.z >> j) & 1
        if bx and bz:
            # Y = i X Z
            out = multiply(multiply(out, c.image_x[j]), c.image_z[j])
            out = PauliOperator(out.n, out.x, out.z, out.phase_exp + 1)
        elif bx:
            out = multiply(out, c.image_x[j])
        elif bz:
            out = multiply(out, c.image_z[j])
    return out


def compose(c1: CliffordElement, c2: CliffordElement) -> CliffordElement:
    """The Clifford ``c1 c2`` (apply ``c2`` first)."""
    if c1.n != c2.n:
        raise ValueError("size mismatch")
    return CliffordElement(
        c1.n,
        tuple(conjugate(c1, p) for p in c2.image_x),
        tuple(conjugate(c1, p) for p in c2.image_z),
    )


def _symplectic(a: PauliOperator, b: PauliOperator) -> int:
    return 0 if a.commutes_with(b) else 1


def inverse(c: CliffordElement) -> CliffordElement:
    n = c.n

    def preimage(target: PauliOperator) -> PauliOperator:
        # target = prod_k img_x[k]^{a_k} img_z[k]^{b_k} up to phase, read off by
        # symplectic products with the dual images
        x = z = 0
        for k in range(n):
            x |= _symplectic(target, c.image_z[k]) << k
            z |= _symplectic(target, c.image_x[k]) << k
        q = PauliOperator(n, x, z)
        got = conjugate(c, q)
        return PauliOperator(n, x, z, target.phase_exp - got.phase_exp)

    return CliffordElement(
        n,
        tuple(preimage(PauliOperator.single(n, j, "X")) for j in range(n)),
        tuple(preimage(PauliOperator.single(n, j, "Z")) for j in range(n)),
    )


# -- standard gates --------------------------------------------------------


def hadamard(n: int, q: int) -> CliffordElement:
    c = CliffordElement.identity(n)
    xs, zs = list(c.image_x), list(c.image_z)
    xs[q], zs[q] = zs[q], xs[q]
    return CliffordElement(n, xs, zs)


def phase_gate(n: int, q: int) -> CliffordElement:
    c = CliffordElement.identity(n)
    xs = list(c.image_x)
    xs[q] = PauliOperator.single(n, q, "Y")
    return CliffordElement(n, xs, c.image_z)


def cnot(n: int, control: int, target: int) -> CliffordElement:
    c = CliffordElement.identity(n)
    xs, zs = list(c.image_x), list(c.image_z)
    xs[control] = multiply(xs[control], xs[target])
    zs[target] = multiply(zs[control], zs[target])
    return CliffordElement(n, xs, zs)


# -- sampling --------------------------------------------------------------


def _vec_to_pauli(n: int, v: int, negative: bool) -> PauliOperator:
    mask = (1 << n) - 1
    return PauliOperator(n, v & mask, v >> n, 2 if negative else 0)


def _sym_vec(n: int, u: int, v: int) -> int:
    mask = (1 << n) - 1
    return (_popcount((u & mask) & (v >> n)) + _popcount((u >> n) & (v & mask))) & 1


def _reduce_basis(vectors: Iterable[int]) -> list[int]:
    """Linearly independent spanning set over GF(2)."""
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            lead = v.bit_length() - 1
            if lead not in basis:
                basis[lead] = v
                break
            v ^= basis[lead]
    return list(basis.values())


def _random_combination(rng: np.random.Generator, basis: list[int]) -> int:
    bits = rng.integers(0, 2, size=len(basis))
    v = 0
    for b, u in zip(bits, basis):
        if b:
            v ^= u
    return v


def sample_uniform(n: int, seed: int | np.random.Generator | None = None) -> CliffordElement:
    """Uniformly random n-qubit Clifford (modulo global phase).

    Generator images are built one symplectic pair at a time: ``X_j`` is sent
    to a uniformly random nonzero vector of the symplectic complement of the
    earlier pairs, ``Z_j`` to a uniformly random partner anticommuting with it
    inside that complement.  Independent random signs are then attached.
    """
    if n > SAMPLING_LIMIT:
        raise ValueError(f"sampling limited to n <= {SAMPLING_LIMIT}")
    rng = np.random.default_rng(seed)
    space = [1 << i for i in range(2 * n)]
    xs, zs = [], []
    for _ in range(n):
        v = 0
        while v == 0:
            v = _random_combination(rng, space)
        while True:
            w = _random_combination(rng, space)
            if _sym_vec(n, v, w):
                break
        xs.append(v)
        zs.append(w)
        space = _reduce_basis(
            u ^ (v if _sym_vec(n, u, w) else 0) ^ (w if _sym_vec(n, u, v) else 0)
            for u in space
        )
    signs = rng.integers(0, 2, size=2 * n)
    return CliffordElement(
        n,
        tuple(_vec_to_pauli(n, v, bool(s)) for v, s in zip(xs, signs[:n])),
        tuple(_vec_to_pauli(n, w, bool(s)) for w, s in zip(zs, signs[n:])),
    )


def enumerate_all(n: int, allow_two_qubits: bool = False) -> list[CliffordElement]:
    """Every Clifford modulo phase, by closure of {H, S, CNOT} (BFS order).

    ``n == 1`` gives 24 elements; ``n == 2`` (11520 elements) must be
    requested explicitly.
    """
    if n == 2 and not allow_two_qubits:
        raise ValueError("two-qubit enumeration is off by default (pass allow_two_qubits=True)")
    if n not in (1, 2):
        raise ValueError(f"cannot enumerate the {n}-qubit Clifford group")
    gens = [hadamard(n, q) for q in range(n)] + [phase_gate(n, q) for q in range(n)]
    if n == 2:
        gens.append(cnot(n, 0, 1))
    start = CliffordElement.identity(n)
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        c = queue.popleft()
        for g in gens:
            nxt = compose(g, c)
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return order


# -- dense export ----------------------------------------------------------


def to_unitary(c: CliffordElement) -> np.ndarray:
    """Dense unitary realizing ``c``.

    Column 0 is the joint +1 eigenvector of the Z images; column ``b`` is the
    product of X images selected by the bits of ``b`` applied to column 0.
    The global phase makes the first nonzero entry of column 0 real positive.
    """
    if c.n > UNITARY_LIMIT:
        raise ValueError(f"dense unitary limited to n <= {UNITARY_LIMIT}")
    dim = 1 << c.n
    proj = np.eye(dim, dtype=complex)
    for z in c.image_z:
        proj = proj @ (np.eye(dim) + to_matrix(z)) / 2
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    col = col / np.linalg.norm(col)
    first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
    col = col * (abs(first) / first)
    xmats = [to_matrix(x) for x in c.image_x]
    u = np.empty((dim, dim), dtype=complex)
    for b in range(dim):
        v = col
        for j in range(c.n):
            if (b >> j) & 1:
                v = xmats[j] @ v
        u[:, b] = v
    return u


def randomization_counts(
    p: PauliOperator, q: PauliOperator, group: list[CliffordElement] | None = None
) -> int:
    """Number of group elements with ``C^dag p C = q`` up to phase."""
    if p.is_identity() or q.is_identity():
        raise ValueError("randomization counts are defined for non-identity Paulis")
    if group is None:
        group = enumerate_all(p.n)
    # C^dag p C = q  <=>  C q C^dag = p
    return sum(1 for c in group if conjugate(c, q).equal_mod_phase(p))
