"""
Dense density-matrix engine over labeled subsystems.

Matrices are row-major with little-endian qubit ordering: qubit 0 (the
first qubit of the first subsystem in the layout) is the least significant
bit of a basis index.  A subsystem may have zero qubits, which makes it a
trivial (dimension 1) placeholder.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from qauth.pauli import PauliOperator, to_matrix

QUBIT_CAP = 14
ATOL = 1e-10
_EINSUM = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class SubsystemLayout:
    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        entries = tuple((str(label), int(k)) for label, k in self.entries)
        object.__setattr__(self, "entries", entries)
        labels = [label for label, _ in entries]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        if any(k < 0 for _, k in entries):
            raise ValueError("qubit counts must be nonnegative")
        if self.total > QUBIT_CAP:
            raise ValueError(f"layout needs {self.total} qubits, cap is {QUBIT_CAP}")

    @classmethod
    def of(cls, *entries: tuple[str, int]) -> "SubsystemLayout":
        return cls(tuple(entries))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.entries)

    @property
    def total(self) -> int:
        return sum(k for _, k in self.entries)

    @property
    def dim(self) -> int:
        return 1 << self.total

    def size(self, label: str) -> int:
        return dict(self.entries)[self._check(label)]

    def qubits(self, label: str) -> list[int]:
        self._check(label)
        offset = 0
        for name, k in self.entries:
            if name == label:
                return list(range(offset, offset + k))
            offset += k
        raise AssertionError

    def _check(self, label: str) -> str:
        if label not in self.labels:
            raise KeyError(f"unknown subsystem {label!r}; layout has {self.labels}")
        return label

    def __add__(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.entries + other.entries)


def _layout(spec) -> SubsystemLayout:
    if isinstance(spec, SubsystemLayout):
        return spec
    return SubsystemLayout(tuple(spec))


@dataclass(frozen=True, eq=False)
class DensityState:
    """Possibly subnormalized density matrix on a labeled layout."""

    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        layout = _layout(self.layout)
        object.__setattr__(self, "layout", layout)
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (layout.dim, layout.dim):
            raise ValueError(f"matrix shape {m.shape} does not fit layout of dim {layout.dim}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def checked(cls, layout, matrix) -> "DensityState":
        """Construct and assert Hermitian, PSD, trace <= 1 (all to 1e-10)."""
        s = cls(layout, matrix)
        s.validate()
        return s

    def validate(self, atol: float = ATOL) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max(initial=0.0) > atol:
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")
        if self.trace_weight > 1 + atol:
            raise ValueError(f"trace {self.trace_weight} exceeds 1")

    @property
    def trace_weight(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def n_qubits(self) -> int:
        return self.layout.total

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def scaled(self, factor: float) -> "DensityState":
        return DensityState(self.layout, self.matrix * factor)

    def __add__(self, other: "DensityState") -> "DensityState":
        _same_layout(self, other)
        return DensityState(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "DensityState") -> "DensityState":
        _same_layout(self, other)
        return DensityState(self.layout, self.matrix - other.matrix)

    def allclose(self, other: "DensityState", atol: float = 1e-9) -> bool:
        return self.layout == other.layout and np.allclose(
            self.matrix, other.matrix, rtol=0, atol=atol
        )


@dataclass(frozen=True, eq=False)
class FlaggedOutput:
    """Accept and reject branches of a flagged channel output.

    Both branches live on the same layout; in the reject branch the message
    register already holds the replacement state.
    """

    acc: DensityState
    rej: DensityState

    def __post_init__(self):
        _same_layout(self.acc, self.rej)

    @property
    def acc_weight(self) -> float:
        return self.acc.trace_weight

    @property
    def rej_weight(self) -> float:
        return self.rej.trace_weight

    @property
    def total_weight(self) -> float:
        return self.acc_weight + self.rej_weight

    def scaled(self, factor: float) -> "FlaggedOutput":
        return FlaggedOutput(self.acc.scaled(factor), self.rej.scaled(factor))

    def __add__(self, other: "FlaggedOutput") -> "FlaggedOutput":
        return FlaggedOutput(self.acc + other.acc, self.rej + other.rej)

    def allclose(self, other: "FlaggedOutput", atol: float = 1e-9) -> bool:
        return self.acc.allclose(other.acc, atol) and self.rej.allclose(other.rej, atol)


def _same_layout(a: DensityState, b: DensityState) -> None:
    if a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout.entries} vs {b.layout.entries}")


# -- constructors ----------------------------------------------------------


def pure_state(layout, vector: np.ndarray) -> DensityState:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return DensityState(layout, np.outer(v, v.conj()))


def basis_state(layout, index: int = 0) -> DensityState:
    layout = _layout(layout)
    v = np.zeros(layout.dim, dtype=complex)
    v[index] = 1.0
    return pure_state(layout, v)


def maximally_mixed(layout) -> DensityState:
    layout = _layout(layout)
    return DensityState(layout, np.eye(layout.dim) / layout.dim)


def random_pure_state(layout, rng: np.random.Generator) -> DensityState:
    layout = _layout(layout)
    v = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return pure_state(layout, v / np.linalg.norm(v))


def maximally_entangled(label_a: str, label_b: str, n: int) -> DensityState:
    """Maximally entangled pure state of two n-qubit registers (qubit i with qubit i)."""
    layout = SubsystemLayout.of((label_a, n), (label_b, n))
    d = 1 << n
    v = np.zeros(d * d, dtype=complex)
    for k in range(d):
        v[k + d * k] = 1.0
    return pure_state(layout, v / np.sqrt(d))


def epr_state(m: int, labels: tuple[str, str] = ("C1", "C2")) -> DensityState:
    """``m`` EPR pairs, qubit i of the first register paired with qubit i of the second."""
    if 2 * m > QUBIT_CAP:
        raise ValueError(f"{m} EPR pairs exceed the {QUBIT_CAP}-qubit cap")
    return maximally_entangled(labels[0], labels[1], m)


def product(*states: DensityState) -> DensityState:
    """Tensor product; the first state occupies the lowest qubits."""
    layout = SubsystemLayout(())
    matrix = np.ones((1, 1), dtype=complex)
    for s in states:
        layout = layout + s.layout
        matrix = np.kron(s.matrix, matrix)
    return DensityState(layout, matrix)


# -- tensor-index plumbing -------------------------------------------------


def _targets(layout: SubsystemLayout, labels: Sequence[str]) -> list[int]:
    out: list[int] = []
    for label in labels:
        out.extend(layout.qubits(label))
    return out


def _apply_left(matrix: np.ndarray, op: np.ndarray, targets: Sequence[int], q: int) -> np.ndarray:
    """``op`` acting on qubits ``targets`` (op's qubit i -> targets[i]) times ``matrix``."""
    k = len(targets)
    if k == 0:
        return matrix * op.reshape(())
    cols = matrix.shape[1]
    t = matrix.reshape((2,) * q + (cols,))
    row_axes = [q - 1 - tq for tq in targets]
    opt = op.reshape((2,) * (2 * k))
    res = np.tensordot(opt, t, axes=([k + k - 1 - i for i in range(k)], row_axes))
    res = np.moveaxis(res, list(range(k)), [row_axes[k - 1 - b] for b in range(k)])
    return res.reshape(matrix.shape)


def _sandwich(matrix: np.ndarray, op: np.ndarray, targets: Sequence[int], q: int) -> np.ndarray:
    # op M op^dag, using Hermiticity of M
    half = _apply_left(matrix, op, targets, q)
    return _apply_left(half.conj().T, op, targets, q)


def apply_unitary(s: DensityState, unitary: np.ndarray, labels: Sequence[str]) -> DensityState:
    """``U rho U^dag`` with ``U`` acting on the listed subsystems (first label lowest)."""
    targets = _targets(s.layout, labels)
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (1 << len(targets),) * 2:
        raise ValueError(f"operator of shape {u.shape} does not act on {len(targets)} qubits")
    return DensityState(s.layout, _sandwich(s.matrix, u, targets, s.n_qubits))


def apply_to_vectors(
    layout: SubsystemLayout, vectors: np.ndarray, op: np.ndarray, labels: Sequence[str]
) -> np.ndarray:
    """``op`` on the listed subsystems applied to each column of ``vectors``."""
    targets = _targets(layout, labels)
    op = np.asarray(op, dtype=complex)
    if op.shape != (1 << len(targets),) * 2:
        raise ValueError(f"operator of shape {op.shape} does not act on {len(targets)} qubits")
    return _apply_left(np.asarray(vectors, dtype=complex), op, targets, layout.total)


def apply_operator(s: DensityState, op: np.ndarray, labels: Sequence[str]) -> DensityState:
    """Same as ``apply_unitary`` without requiring unitarity (``K rho K^dag``)."""
    return apply_unitary(s, op, labels)


def is_projector(p: np.ndarray, atol: float = ATOL) -> bool:
    return bool(
        np.abs(p @ p - p).max(initial=0.0) <= atol
        and np.abs(p - p.conj().T).max(initial=0.0) <= atol
    )


def project(s: DensityState, projector: np.ndarray, labels: Sequence[str] | None = None) -> DensityState:
    """``P rho P^dag``, subnormalized; ``labels=None`` means the whole layout."""
    p = np.asarray(projector, dtype=complex)
    if not is_projector(p):
        raise ValueError("operator is not an orthogonal projector")
    if labels is None:
        labels = s.layout.labels
    return apply_unitary(s, p, labels)


def partial_trace(s: DensityState, keep: Iterable[str]) -> DensityState:
    """Trace out every subsystem not in ``keep``; kept subsystems retain layout order."""
    keep = set(keep)
    for label in keep:
        s.layout._check(label)
    kept_entries = tuple(e for e in s.layout.entries if e[0] in keep)
    q = s.n_qubits
    traced = set(_targets(s.layout, [lab for lab in s.layout.labels if lab not in keep]))
    if not traced:
        return DensityState(SubsystemLayout(kept_entries), s.matrix)
    t = s.matrix.reshape((2,) * (2 * q))
    rows, cols, out_r, out_c = [], [], [], []
    nxt = q
    for a in range(q):
        qubit = q - 1 - a
        rows.append(_EINSUM[a])
        if qubit in traced:
            cols.append(rows[-1])
        else:
            cols.append(_EINSUM[nxt])
            out_r.append(rows[-1])
            out_c.append(cols[-1])
            nxt += 1
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out_r) + "".join(out_c)
    res = np.einsum(spec, t)
    d = 1 << (q - len(traced))
    return DensityState(SubsystemLayout(kept_entries), res.reshape(d, d))


def reorder(s: DensityState, labels: Sequence[str]) -> DensityState:
    """Permute subsystems into the given label order."""
    if sorted(labels) != sorted(s.layout.labels):
        raise ValueError(f"{labels} is not a reordering of {s.layout.labels}")
    q = s.n_qubits
    src = _targets(s.layout, labels)
    new_layout = SubsystemLayout(tuple((lab, s.layout.size(lab)) for lab in labels))
    if q == 0:
        return DensityState(new_layout, s.matrix)
    axes = [q - 1 - src[q - 1 - a] for a in range(q)]
    t = s.matrix.reshape((2,) * (2 * q)).transpose(axes + [q + ax for ax in axes])
    return DensityState(new_layout, t.reshape(s.matrix.shape))


def relabel(s: DensityState, mapping: dict[str, str]) -> DensityState:
    layout = SubsystemLayout(tuple((mapping.get(lab, lab), k) for lab, k in s.layout.entries))
    return DensityState(layout, s.matrix)


# -- distances -------------------------------------------------------------


def trace_norm(matrix: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(matrix)).sum())


def trace_distance(a: DensityState, b: DensityState) -> float:
    _same_layout(a, b)
    return 0.5 * trace_norm(a.matrix - b.matrix)


def flagged_distance(a: FlaggedOutput, b: FlaggedOutput) -> float:
    """Trace distance of ``acc (x) |acc><acc| + rej (x) |rej><rej|`` outputs.

    The flag states are orthogonal, so the difference is block diagonal.
    """
    return 0.5 * (trace_norm(a.acc.matrix - b.acc.matrix) + trace_norm(a.rej.matrix - b.rej.matrix))


# -- Bell-basis machinery --------------------------------------------------


def bell_vector(m: int, pauli: PauliOperator | None = None) -> np.ndarray:
    """``(P (x) I) |Phi+>^m`` on layout [C1:m, C2:m]."""
    d = 1 << m
    vec = np.zeros(d * d, dtype=complex)
    for k in range(d):
        vec[k + d * k] = 1.0 / np.sqrt(d)
    if pauli is None:
        return vec
    return np.kron(np.eye(d), to_matrix(pauli)) @ vec


def bell_subspace_projector(m: int, allowed: Iterable[PauliOperator]) -> np.ndarray:
    """Projector onto the span of the Pauli-displaced EPR states for ``allowed`` Paulis."""
    allowed = list(allowed)
    keys = {(p.x, p.z) for p in allowed}
    if len(keys) != len(allowed):
        raise ValueError("allowed Paulis must be distinct modulo phase")
    if any(p.n != m for p in allowed):
        raise ValueError(f"allowed Paulis must act on {m} qubits")
    if 2 * m > QUBIT_CAP:
        raise ValueError("Bell projector exceeds the qubit cap")
    d = 1 << (2 * m)
    out = np.zeros((d, d), dtype=complex)
    for p in allowed:
        v = bell_vector(m, p)
        out += np.outer(v, v.conj())
    return out


# -- layout surgery --------------------------------------------------------


def merge(s: DensityState, labels: Sequence[str], new_label: str) -> DensityState:
    """Rename adjacent subsystems ``labels`` (in layout order) into one register."""
    names = s.layout.labels
    start = names.index(labels[0])
    if tuple(names[start:start + len(labels)]) != tuple(labels):
        raise ValueError(f"{labels} are not adjacent in layout order {names}")
    entries = list(s.layout.entries)
    width = sum(k for _, k in entries[start:start + len(labels)])
    entries[start:start + len(labels)] = [(new_label, width)]
    return DensityState(SubsystemLayout(tuple(entries)), s.matrix)


def split(s: DensityState, label: str, parts: Sequence[tuple[str, int]]) -> DensityState:
    """Inverse of ``merge``: cut register ``label`` into consecutive parts."""
    if sum(k for _, k in parts) != s.layout.size(label):
        raise ValueError(f"parts {parts} do not cover register {label!r}")
    entries = []
    for name, k in s.layout.entries:
        entries.extend(parts if name == label else [(name, k)])
    return DensityState(SubsystemLayout(tuple(entries)), s.matrix)


def apply_kraus(
    s: DensityState, kraus: Sequence[np.ndarray], label: str, out_qubits: int
) -> DensityState:
    """``sum_k K rho K^dag`` for Kraus maps taking register ``label`` to ``out_qubits`` qubits."""
    order = s.layout.labels
    front = reorder(s, [label] + [lab for lab in order if lab != label])
    rest = front.layout.dim >> front.layout.size(label)
    out_dim = (1 << out_qubits) * rest
    acc = np.zeros((out_dim, out_dim), dtype=complex)
    for k in kraus:
        kf = np.kron(np.eye(rest), k)
        acc += kf @ front.matrix @ kf.conj().T
    entries = tuple((lab, out_qubits if lab == label else kk) for lab, kk in front.layout.entries)
    return reorder(DensityState(SubsystemLayout(entries), acc), order)


def zero_state(label: str, n: int) -> DensityState:
    return basis_state(SubsystemLayout.of((label, n)), 0)
