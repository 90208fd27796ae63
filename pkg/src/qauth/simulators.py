"""
Ideal-world channels for both codes.

Each simulator feeds half of a set of EPR pairs to the attack in place of
the codeword and accepts iff a Bell measurement finds an allowed
displacement.  The attack then only touches the reference register R, and M
either passes untouched or is replaced by ``omega``.

Closed forms compute the same channels from the Pauli decomposition of the
attack and are used as an independent oracle.  Permutation averages are
done by counting placements of letter multisets instead of enumerating
``(3n)!`` permutations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from qauth import linear as lin
from qauth.adversary import AttackUnitary, PauliDecomposition
from qauth.linear import DensityState, FlaggedOutput, SubsystemLayout
from qauth.pauli import (
    PauliOperator,
    QubitPartition,
    accepted_by_simulator,
    all_permutations,
    enumerate_paulis,
    permutation_unitary,
    to_matrix,
)

KINDS = ("clifford", "trap")


@dataclass(frozen=True, eq=False)
class IdealChannelSpec:
    """Which ideal channel to build.

    For ``clifford``, ``n`` is the message size and ``param`` the trap
    count ``d``; for ``trap``, ``n`` is the code length and ``param`` the
    number ``t`` of correctable errors (the message is one qubit).
    """

    kind: str
    n: int
    param: int
    attack: AttackUnitary

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown code kind {self.kind!r}")
        if self.n < 1 or self.param < 0:
            raise ValueError("code parameters must be positive")
        if self.attack.n_c != self.codeword_qubits:
            raise ValueError(
                f"attack acts on {self.attack.n_c} codeword qubits, expected {self.codeword_qubits}"
            )

    @property
    def codeword_qubits(self) -> int:
        return self.n + self.param if self.kind == "clifford" else 3 * self.n

    @property
    def message_qubits(self) -> int:
        return self.n if self.kind == "clifford" else 1


def _default_omega(m: int) -> np.ndarray:
    return lin.zero_state("M", m).matrix


def _check_input(spec: IdealChannelSpec, rho: DensityState) -> None:
    if rho.layout.labels != ("M", "R"):
        raise ValueError("input must have layout [M, R]")
    if rho.layout.size("M") != spec.message_qubits or rho.layout.size("R") != spec.attack.r_qubits:
        raise ValueError("input dimensions do not match the channel")


def _epr_branches(
    rho: DensityState, attack: np.ndarray, m: int, projector: np.ndarray, omega: np.ndarray
) -> FlaggedOutput:
    """Attack (C1, R) of ``rho (x) |Phi+><Phi+|^m`` and split on the Bell projector.

    Works on the eigenvectors of ``rho`` so the EPR register never enters a
    density matrix.
    """
    if 2 * m + rho.n_qubits > lin.QUBIT_CAP:
        raise ValueError("EPR simulation exceeds the qubit cap")
    layout = rho.layout + SubsystemLayout.of(("C1", m), ("C2", m))
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > 1e-15
    cols = v[:, keep] * np.sqrt(w[keep])
    vecs = np.kron(lin.bell_vector(m)[:, None], cols)  # C1C2 above MR
    vecs = lin.apply_to_vectors(layout, vecs, attack, ["C1", "R"])
    acc_v = lin.apply_to_vectors(layout, vecs, projector, ["C1", "C2"])
    rej_v = vecs - acc_v
    dm = 1 << rho.layout.size("M")
    dr = 1 << rho.layout.size("R")
    dc = 1 << (2 * m)
    acc_v = acc_v.reshape(dc, dm * dr, -1)
    acc = np.einsum("cir,cjr->ij", acc_v, acc_v.conj())
    rej_v = rej_v.reshape(dc, dr, dm, -1)
    rej_r = np.einsum("camr,cbmr->ab", rej_v, rej_v.conj())
    return FlaggedOutput(DensityState(rho.layout, acc), DensityState(rho.layout, np.kron(rej_r, omega)))


def ideal_clifford(spec: IdealChannelSpec, rho: DensityState, omega: np.ndarray | None = None) -> FlaggedOutput:
    """Attack ``n + d`` half EPR pairs; accept iff all pairs are still |Phi+>."""
    if spec.kind != "clifford":
        raise ValueError("spec is not for the Clifford code")
    _check_input(spec, rho)
    m = spec.codeword_qubits
    proj = lin.bell_subspace_projector(m, [PauliOperator.identity(m)])
    om = _default_omega(spec.n) if omega is None else omega
    return _epr_branches(rho, spec.attack.matrix, m, proj, om)


def ideal_trap(spec: IdealChannelSpec, rho: DensityState, omega: np.ndarray | None = None) -> FlaggedOutput:
    """Average over all permutations of the attacked half EPR pairs.

    Accepts iff the Bell displacement, seen through the permutation, is
    trap-undetected and of weight at most ``t`` on the message block.
    """
    if spec.kind != "trap":
        raise ValueError("spec is not for the trap code")
    _check_input(spec, rho)
    n, t = spec.n, spec.param
    m = 3 * n
    part = QubitPartition(n, n, n)
    proj = lin.bell_subspace_projector(m, [p for p in enumerate_paulis(m) if accepted_by_simulator(p, part, t)])
    om = _default_omega(1) if omega is None else omega
    eye_r = np.eye(spec.attack.r_dim)
    total = None
    perms = all_permutations(m)
    for perm in perms:
        pi = np.kron(eye_r, permutation_unitary(perm))
        out = _epr_branches(rho, pi.T @ spec.attack.matrix @ pi, m, proj, om)
        total = out if total is None else total + out
    return total.scaled(1.0 / len(perms))


# -- closed forms ----------------------------------------------------------


def _split_input(rho: DensityState) -> tuple[np.ndarray, np.ndarray, int, int]:
    dm = 1 << rho.layout.size("M")
    dr = 1 << rho.layout.size("R")
    rho_r = np.einsum("rasa->rs", rho.matrix.reshape(dr, dm, dr, dm))
    return rho.matrix, rho_r, dm, dr


def _branches_from_weights(
    decomp: PauliDecomposition,
    rho: DensityState,
    acc_weight: np.ndarray,
    rej_weight: np.ndarray,
    omega: np.ndarray,
) -> FlaggedOutput:
    """``acc = sum_P a_P (1 (x) A_P) rho (1 (x) A_P)^dag``, ``rej = omega (x) sum_P r_P A_P rho_R A_P^dag``."""
    full, rho_r, dm, dr = _split_input(rho)
    if dr != decomp.r_dim:
        raise ValueError("reference dimension does not match the decomposition")
    acc = np.zeros_like(full)
    rej_r = np.zeros_like(rho_r)
    eye_m = np.eye(dm)
    for a, wa, wr in zip(decomp.components, acc_weight, rej_weight):
        if wa:
            op = np.kron(a, eye_m)
            acc += wa * op @ full @ op.conj().T
        if wr:
            rej_r += wr * a @ rho_r @ a.conj().T
    return FlaggedOutput(DensityState(rho.layout, acc), DensityState(rho.layout, np.kron(rej_r, omega)))


def closed_form_clifford(
    decomp: PauliDecomposition, rho: DensityState, omega: np.ndarray | None = None
) -> FlaggedOutput:
    """Ideal Clifford-code channel: only the identity component is accepted."""
    k = len(decomp.paulis)
    acc_w = np.zeros(k)
    acc_w[0] = 1.0
    om = _default_omega(rho.layout.size("M")) if omega is None else omega
    return _branches_from_weights(decomp, rho, acc_w, 1.0 - acc_w, om)


def twirled_real_clifford(
    decomp: PauliDecomposition, rho: DensityState, d: int, omega: np.ndarray | None = None
) -> FlaggedOutput:
    """Real Clifford-code channel averaged over the whole Clifford group.

    A non-identity component is scrambled to a uniformly random
    non-identity Pauli on the ``n + d`` codeword qubits; it survives the
    trap check iff the trap part lies in ``{I, Z}^d``, in which case its
    message part acts on M.
    """
    n = rho.layout.size("M")
    m = n + d
    if decomp.n_c != m:
        raise ValueError("decomposition does not cover the codeword")
    full, rho_r, dm, dr = _split_input(rho)
    denom = 4**m - 1
    survive = (4**n * 2**d - 1) / denom
    acc = np.zeros_like(full)
    rej_r = np.zeros_like(rho_r)
    msg_paulis = [to_matrix(q) for q in enumerate_paulis(n)]
    for p, a in zip(decomp.paulis, decomp.components):
        if not np.any(a):
            continue
        if p.is_identity():
            op = np.kron(a, np.eye(dm))
            acc += op @ full @ op.conj().T
            continue
        # accepted survivors: Q_M (x) Q_T with Q_T in {I,Z}^d, excluding the identity
        for k, q in enumerate(msg_paulis):
            mult = 2**d - (1 if k == 0 else 0)
            op = np.kron(a, q)
            acc += (mult / denom) * op @ full @ op.conj().T
        rej_r += (1.0 - survive) * a @ rho_r @ a.conj().T
    om = _default_omega(n) if omega is None else omega
    return FlaggedOutput(DensityState(rho.layout, acc), DensityState(rho.layout, np.kron(rej_r, om)))


def clifford_gap_pauli(n: int, d: int) -> Fraction:
    """Exact real-vs-ideal gap of the Clifford code for a pure non-identity Pauli attack."""
    return Fraction(4**n * 2**d - 1, 4**(n + d) - 1)


# -- orbit counting --------------------------------------------------------


def letter_counts(p: PauliOperator) -> tuple[int, int, int]:
    """Numbers of X, Y and Z letters."""
    return p.letter_counts()


def _falling(n: int, k: int) -> int:
    return factorial(n) // factorial(n - k) if 0 <= k <= n else 0


def placement_count(n: int, counts: tuple[int, int, int], block: tuple[int, int, int]) -> int:
    """Permutations of ``3n`` positions placing a Pauli's letters in a given pattern.

    ``counts`` are the Pauli's (X, Y, Z) totals; ``block`` the numbers of
    X, Y and Z letters that land on the message block.  All remaining X's
    must land on the |+> traps and all remaining Z's on the |0> traps; Y's
    cannot land on any trap.  Letters are distinguishable by their original
    position, so choosing which X's and Z's go to the block contributes
    binomial factors.
    """
    cx, cy, cz = counts
    bx, by, bz = block
    if by != cy or not (0 <= bx <= cx and 0 <= bz <= cz):
        return 0
    x2, z2 = cx - bx, cz - bz
    w = bx + by + bz
    if w > n or x2 > n or z2 > n:
        return 0
    d = cx + cy + cz
    return (
        comb(cx, bx)
        * comb(cz, bz)
        * _falling(n, w)
        * _falling(n, x2)
        * _falling(n, z2)
        * factorial(3 * n - d)
    )


@lru_cache(maxsize=None)
def undetected_permutations(n: int, counts: tuple[int, int, int], max_block_weight: int | None = None) -> int:
    """Permutations after which the Pauli passes both trap blocks.

    With ``max_block_weight`` set, also require at most that many
    non-identity letters on the message block.
    """
    cx, cy, cz = counts
    total = 0
    for bx in range(cx + 1):
        for bz in range(cz + 1):
            if max_block_weight is not None and bx + cy + bz > max_block_weight:
                continue
            total += placement_count(n, counts, (bx, cy, bz))
    return total


def simulator_accept_fraction(n: int, t: int, p: PauliOperator) -> Fraction:
    """Fraction of permutations ``pi`` with ``pi^dag P pi`` accepted by the trap simulator."""
    if p.n != 3 * n:
        raise ValueError(f"Pauli acts on {p.n} qubits, expected {3 * n}")
    return Fraction(undetected_permutations(n, p.letter_counts(), t), factorial(3 * n))


def closed_form_trap(
    decomp: PauliDecomposition, rho: DensityState, n: int, t: int, omega: np.ndarray | None = None
) -> FlaggedOutput:
    """Ideal trap-code channel from the decomposition, with exact permutation averaging."""
    if decomp.n_c != 3 * n:
        raise ValueError("decomposition does not cover the codeword")
    if rho.layout.size("M") != 1:
        raise ValueError("the trap code carries a one-qubit message")
    acc_w = np.array([float(simulator_accept_fraction(n, t, p)) for p in decomp.paulis])
    om = _default_omega(1) if omega is None else omega
    return _branches_from_weights(decomp, rho, acc_w, 1.0 - acc_w, om)
