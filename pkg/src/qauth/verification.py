"""
Numerical checks of the twirling identities, code correctness, security gaps
and the permutation-counting bound.

Every check returns a ``VerificationReport``.  Exact checks pass when the
measured value is within ``tolerance`` of the expected one; bound checks
pass when ``measured + 3 * stderr <= bound + tolerance``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from qauth import clifford_code as cc
from qauth import linear as lin
from qauth import simulators as sim
from qauth import trap_code as tc
from qauth.adversary import AttackUnitary, decompose, pauli_attack, random_unitary_attack
from qauth.clifford import enumerate_all, randomization_counts, sample_uniform, to_unitary
from qauth.linear import DensityState, FlaggedOutput, SubsystemLayout
from qauth.pauli import PauliOperator, enumerate_paulis, to_matrix

SCHEMA_VERSION = 1
SIGMA_K = 3.0
ORACLE_ATOL = 1e-9
BRUTE_FORCE_LIMIT = 9


class OracleDisagreement(RuntimeError):
    """The two ideal-channel oracles differ; no security gap is reported."""


def _clean(value):
    """JSON-friendly copy: numpy scalars to Python, tuples to lists, Fractions to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class VerificationReport:
    name: str
    params: dict
    measured: float
    expected: float
    tolerance: float
    passed: bool
    kind: str = "exact"
    seed: int | None = None
    samples: int | None = None
    stderr: float | None = None
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Deterministic fields only; ``runtime`` is kept for the metadata file."""
        return _clean(
            {
                "name": self.name,
                "kind": self.kind,
                "params": self.params,
                "measured": float(self.measured),
                "expected": float(self.expected),
                "tolerance": float(self.tolerance),
                "passed": bool(self.passed),
                "seed": self.seed,
                "samples": self.samples,
                "stderr": None if self.stderr is None else float(self.stderr),
                "details": self.details,
            }
        )


def exact_check(name, params, measured, expected, tolerance, **kw) -> VerificationReport:
    passed = abs(float(measured) - float(expected)) <= tolerance
    return VerificationReport(name, params, float(measured), float(expected), tolerance, passed, "exact", **kw)


def bound_check(name, params, measured, bound, tolerance=0.0, stderr=None, **kw) -> VerificationReport:
    slack = SIGMA_K * stderr if stderr else 0.0
    passed = float(measured) + slack <= float(bound) + tolerance
    return VerificationReport(
        name, params, float(measured), float(bound), tolerance, passed, "bound", stderr=stderr, **kw
    )


def timed(fn, *args, **kwargs) -> list[VerificationReport]:
    """Run a check (or suite) and stamp the elapsed time on its reports."""
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    reports = out if isinstance(out, list) else [out]
    elapsed = time.perf_counter() - start
    for r in reports:
        if not r.runtime:
            r.runtime = elapsed / len(reports)
    return reports


def reports_to_json(reports: list[VerificationReport]) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in sorted(reports, key=lambda r: r.name)],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports: list[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "params", "measured", "bound", "pass"])
    for r in sorted(reports, key=lambda r: r.name):
        w.writerow([r.name, json.dumps(_clean(r.params), sort_keys=True), repr(r.measured), repr(r.expected), r.passed])
    return buf.getvalue()


# -- random inputs ---------------------------------------------------------


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def input_battery(
    m_qubits: int, r_qubits: int, rng: np.random.Generator, n_random: int = 20, max_basis: int = 16
) -> list[tuple[str, DensityState]]:
    """Inputs on [M, R]: maximally entangled M:R (when R is large enough),
    computational basis states and random pure states."""
    layout = SubsystemLayout.of(("M", m_qubits), ("R", r_qubits))
    out = []
    if r_qubits >= m_qubits:
        choi = lin.maximally_entangled("M", "R", m_qubits)
        if r_qubits > m_qubits:
            choi = lin.product(choi, lin.zero_state("Rx", r_qubits - m_qubits))
            choi = lin.merge(choi, ["R", "Rx"], "R")
        out.append(("max_entangled", choi))
    for k in range(min(layout.dim, max_basis)):
        out.append((f"basis:{k}", lin.basis_state(layout, k)))
    for k in range(n_random):
        out.append((f"random:{k}", lin.random_pure_state(layout, rng)))
    return out


# -- twirling identities -------------------------------------------------------


@dataclass(frozen=True)
class TwirlResidual:
    cross: float  # largest norm of an averaged cross term (expected 0)
    diagonal: float  # largest deviation of the P = P' term from its prediction


def verify_pauli_twirl(n: int, rng: np.random.Generator, states: int = 20) -> TwirlResidual:
    """Average ``Q^dag P Q rho Q^dag P'^dag Q`` over all ``4**n`` Paulis ``Q``.

    Distinct ``P, P'`` must average to zero; ``P = P'`` must give ``P rho P^dag``.
    """
    if n > 2:
        raise ValueError("exhaustive Pauli twirl limited to n <= 2")
    mats = np.array([to_matrix(p) for p in enumerate_paulis(n)])
    k = len(mats)
    dim = 1 << n
    rhos = np.array([random_density(dim, rng) for _ in range(states)])
    # conj[q, p] = Q^dag P Q
    conj = np.einsum("qba,pbc,qcd->qpad", mats.conj(), mats, mats)
    # avg[s, p, p'] = (1/4^n) sum_q conj[q,p] rho_s conj[q,p']^dag
    avg = np.einsum("qpab,sbc,qrdc->sprad", conj, rhos, conj.conj()) / k
    cross = 0.0
    diag = 0.0
    for a in range(k):
        for b in range(k):
            block = avg[:, a, b]
            if a == b:
                want = np.einsum("ab,sbc,dc->sad", mats[a], rhos, mats[a].conj())
                diag = max(diag, float(np.abs(block - want).max()))
            else:
                cross = max(cross, float(np.abs(block).max()))
    return TwirlResidual(cross, diag)


def verify_clifford_twirl(rng: np.random.Generator, states: int = 20) -> TwirlResidual:
    """Sum ``C^dag P C rho C^dag P'^dag C`` over the 24 one-qubit Cliffords.

    ``cross`` is the largest entry for ``P != P'``; ``diagonal`` is the
    smallest norm of a ``P = P'`` sum, which must stay away from zero.
    """
    group = np.array([to_unitary(c) for c in enumerate_all(1)])
    mats = np.array([to_matrix(p) for p in enumerate_paulis(1)])
    rhos = np.array([random_density(2, rng) for _ in range(states)])
    conj = np.einsum("cba,pbd,cde->cpae", group.conj(), mats, group)
    total = np.einsum("cpab,sbd,cred->sprae", conj, rhos, conj.conj())
    cross = 0.0
    diag = np.inf
    for a in range(4):
        for b in range(4):
            if a == b:
                diag = min(diag, float(np.abs(total[:, a, b]).max(axis=(1, 2)).min()))
            else:
                cross = max(cross, float(np.abs(total[:, a, b]).max()))
    return TwirlResidual(cross, diag)


def verify_clifford_randomization() -> dict[tuple[str, str], int]:
    """Counts of one-qubit Cliffords taking non-identity ``Q`` to ``P`` (up to phase)."""
    group = enumerate_all(1)
    non_identity = enumerate_paulis(1)[1:]
    return {
        (str(p), str(q)): randomization_counts(p, q, group) for p in non_identity for q in non_identity
    }


def twirl_reports(seed: int, states: int = 20) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    out = []
    for n in (1, 2):
        start = time.perf_counter()
        res = verify_pauli_twirl(n, rng, states)
        rt = time.perf_counter() - start
        out.append(exact_check(f"twirl.pauli.n{n}.cross", {"n": n, "states": states}, res.cross, 0.0, 1e-9, seed=seed, runtime=rt))
        out.append(exact_check(f"twirl.pauli.n{n}.diagonal", {"n": n, "states": states}, res.diagonal, 0.0, 1e-9, seed=seed))
    start = time.perf_counter()
    res = verify_clifford_twirl(rng, states)
    rt = time.perf_counter() - start
    out.append(exact_check("twirl.clifford.cross", {"n": 1, "states": states}, res.cross, 0.0, 1e-9, seed=seed, runtime=rt))
    rep = bound_check("twirl.clifford.diagonal_nonzero", {"n": 1}, -res.diagonal, -1e-3)
    rep.details["smallest_diagonal_norm"] = res.diagonal
    out.append(rep)
    start = time.perf_counter()
    table = verify_clifford_randomization()
    rt = time.perf_counter() - start
    expected = len(enumerate_all(1)) // 3
    worst = max(abs(v - expected) for v in table.values())
    rep = exact_check("randomization.clifford", {"n": 1}, worst, 0, 0, runtime=rt)
    rep.details["counts"] = {f"{p}<-{q}": v for (p, q), v in sorted(table.items())}
    rep.details["expected_count"] = expected
    out.append(rep)
    return out


# -- correctness -----------------------------------------------------------


def clifford_correctness(n: int, d: int, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Smallest acceptance weight and largest output distance over random keys and pure inputs."""
    lay = SubsystemLayout.of(("M", n))
    min_acc, max_dist = 1.0, 0.0
    for _ in range(trials):
        key = sample_uniform(n + d, rng)
        rho = lin.random_pure_state(lay, rng)
        out = cc.decode(key, cc.encode(key, rho, d), n)
        min_acc = min(min_acc, out.acc_weight)
        max_dist = max(max_dist, lin.trace_distance(out.acc, rho))
    return min_acc, max_dist


def trap_correctness(code: tc.ECCode, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    lay = SubsystemLayout.of(("M", 1))
    min_acc, max_dist = 1.0, 0.0
    for _ in range(trials):
        key = tc.TrapKey.random(code.n, rng)
        rho = lin.random_pure_state(lay, rng)
        out = tc.decode(key, code, tc.encode(key, code, rho))
        min_acc = min(min_acc, out.acc_weight)
        max_dist = max(max_dist, lin.trace_distance(out.acc, rho))
    return min_acc, max_dist


def ec_single_error_check(code: tc.ECCode, rng: np.random.Generator, random_states: int = 10) -> float:
    """Largest decode error over every weight-1 Pauli on basis, |+> and random inputs."""
    lay = SubsystemLayout.of(("M", 1))
    plus = lin.pure_state(lay, np.array([1, 1]) / np.sqrt(2))
    inputs = [lin.basis_state(lay, 0), lin.basis_state(lay, 1), plus]
    inputs += [lin.random_pure_state(lay, rng) for _ in range(random_states)]
    worst = 0.0
    for rho in inputs:
        enc = tc.ec_encode(code, rho)
        for q in range(code.n):
            for letter in "XYZ":
                e = PauliOperator.single(code.n, q, letter)
                got = tc.ec_decode(code, lin.apply_unitary(enc, to_matrix(e), ["M"]))
                worst = max(worst, lin.trace_distance(got, rho))
    return worst


def correctness_reports(seed: int, trials: int = 50, n: int = 1, d: int = 2) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    out = []
    start = time.perf_counter()
    acc, dist = clifford_correctness(n, d, trials, rng)
    rt = time.perf_counter() - start
    params = {"code": "clifford", "n": n, "d": d, "trials": trials}
    out.append(bound_check("correctness.clifford.acc_deficit", params, 1.0 - acc, 1e-9, seed=seed, runtime=rt))
    out.append(bound_check("correctness.clifford.distance", params, dist, 1e-9, seed=seed))
    start = time.perf_counter()
    acc, dist = trap_correctness(tc.trivial_code(), trials, rng)
    rt = time.perf_counter() - start
    params = {"code": "trap", "ec": "trivial", "n": 1, "trials": trials}
    out.append(bound_check("correctness.trap.acc_deficit", params, 1.0 - acc, 1e-9, seed=seed, runtime=rt))
    out.append(bound_check("correctness.trap.distance", params, dist, 1e-9, seed=seed))
    start = time.perf_counter()
    worst = ec_single_error_check(tc.five_qubit_code(), rng)
    out.append(
        bound_check(
            "correctness.five_qubit.single_errors", {"ec": "five_qubit"}, worst, 1e-9, seed=seed,
            runtime=time.perf_counter() - start,
        )
    )
    return out


# -- security gaps ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GapMeasurement:
    """Gap between a key-averaged real channel and the ideal channel over an input battery."""

    gap: float
    stderr: float
    worst_input: str
    closed_form_gap: float
    oracle_discrepancy: float
    acc_weight: float
    acc_weight_closed_form: float
    acc_weight_stderr: float


def _oracle_gate(a: FlaggedOutput, b: FlaggedOutput, label: str) -> float:
    diff = lin.flagged_distance(a, b)
    if diff > ORACLE_ATOL:
        raise OracleDisagreement(f"ideal-channel oracles differ by {diff:.3e} on {label}")
    return diff


def _batch_stderr(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def clifford_gap(
    params: cc.CliffordCodeParams,
    attack: AttackUnitary,
    inputs: list[tuple[str, DensityState]],
    strategy: cc.KeyStrategy,
    unitaries: np.ndarray | None = None,
    check_oracles: bool = True,
) -> GapMeasurement:
    """Measure the Clifford-code gap, gated on EPR simulator == closed form."""
    decomp = decompose(attack)
    spec = sim.IdealChannelSpec("clifford", params.n, params.d, attack)
    ch = cc.keyed_channel(params, attack, strategy, unitaries=unitaries)
    sampled = strategy.kind == "sampled"
    best = None
    cf_gap = 0.0
    oracle = 0.0
    for label, rho in inputs:
        ideal = sim.closed_form_clifford(decomp, rho)
        if check_oracles:
            oracle = max(oracle, _oracle_gate(sim.ideal_clifford(spec, rho), ideal, label))
        gap = lin.flagged_distance(ch.apply(rho), ideal)
        twirled = sim.twirled_real_clifford(decomp, rho, params.d)
        cf_gap = max(cf_gap, lin.flagged_distance(twirled, ideal))
        if best is None or gap > best[0]:
            err = 0.0
            if sampled:
                err = _batch_stderr([lin.flagged_distance(b, ideal) for b in ch.apply_batches(rho)])
            best = (gap, err, label, rho, twirled)
    gap, err, label, rho, twirled = best
    return GapMeasurement(
        gap=gap,
        stderr=err,
        worst_input=label,
        closed_form_gap=cf_gap,
        oracle_discrepancy=oracle,
        acc_weight=ch.apply(rho).acc_weight,
        acc_weight_closed_form=twirled.acc_weight,
        acc_weight_stderr=ch.weight_stderr(rho) if sampled else 0.0,
    )


def security_gap_clifford(
    n: int,
    d: int,
    attack: AttackUnitary,
    inputs: list[tuple[str, DensityState]],
    strategy: cc.KeyStrategy,
    unitaries: np.ndarray | None = None,
) -> VerificationReport:
    """Compare the measured gap with ``3 / 2**d`` (mean + 3 stderr for sampled keys)."""
    params = cc.CliffordCodeParams(n, d)
    start = time.perf_counter()
    m = clifford_gap(params, attack, inputs, strategy, unitaries)
    rep = bound_check(
        f"clifford_security.attack.{attack.name}",
        {"n": n, "d": d, "r": attack.r_qubits, "attack": attack.name, "keys": strategy.kind},
        m.gap,
        3.0 / 2**d,
        stderr=m.stderr,
        seed=strategy.seed if strategy.kind == "sampled" else None,
        samples=strategy.count if strategy.kind == "sampled" else None,
        runtime=time.perf_counter() - start,
    )
    rep.details.update(
        worst_input=m.worst_input,
        closed_form_gap=m.closed_form_gap,
        oracle_discrepancy=m.oracle_discrepancy,
        acc_weight=m.acc_weight,
        acc_weight_closed_form=m.acc_weight_closed_form,
        acc_weight_stderr=m.acc_weight_stderr,
    )
    return rep


def _clifford_pauli_attacks(m: int, r_qubits: int) -> list[AttackUnitary]:
    return [pauli_attack(p, r_qubits) for p in enumerate_paulis(m)[1:]]


def clifford_security_reports(
    seed: int,
    n: int = 1,
    d: int = 2,
    r_qubits: int = 1,
    haar_attacks: int = 50,
    key_count: int = 10_000,
    batches: int = 20,
    random_inputs: int = 20,
    monotone_ds: tuple[int, ...] = (1, 2, 3),
    large_d_max: int = 64,
) -> list[VerificationReport]:
    """Every attack against ``3 / 2**d`` plus the aggregate checks built on them."""
    ss = np.random.SeedSequence(seed)
    key_seed, input_seed, attack_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
    strategy = cc.KeyStrategy("sampled", key_count, key_seed, batches)
    params = cc.CliffordCodeParams(n, d)
    start = time.perf_counter()
    unitaries = cc.key_unitaries(cc.key_set(params, strategy))
    key_time = time.perf_counter() - start
    inputs = input_battery(n, r_qubits, np.random.default_rng(input_seed), random_inputs)
    attack_rng = np.random.default_rng(attack_seed)
    haar = [
        random_unitary_attack(n + d, r_qubits, int(s)) for s in attack_rng.integers(0, 2**31, size=haar_attacks)
    ]
    paulis = _clifford_pauli_attacks(n + d, r_qubits)
    per_attack = [security_gap_clifford(n, d, a, inputs, strategy, unitaries) for a in haar + paulis]
    pauli_reps = per_attack[len(haar):]
    common = {"n": n, "d": d, "r": r_qubits, "haar_attacks": haar_attacks, "pauli_attacks": len(paulis), "keys": key_count}

    out = list(per_attack)
    worst = max(per_attack, key=lambda r: r.measured + SIGMA_K * (r.stderr or 0.0))
    rep = bound_check(
        "clifford_security.bound", common, worst.measured, 3.0 / 2**d, stderr=worst.stderr,
        seed=seed, samples=key_count, runtime=key_time,
    )
    rep.details.update(worst_attack=worst.params["attack"], failures=sum(not r.passed for r in per_attack))
    out.append(rep)

    expected = float(sim.clifford_gap_pauli(n, d))
    cf_dev = max(abs(r.details["closed_form_gap"] - expected) for r in pauli_reps)
    rep = exact_check("clifford_security.pauli_closed_form", common, cf_dev, 0.0, 1e-6)
    rep.details["expected_gap"] = sim.clifford_gap_pauli(n, d)
    out.append(rep)

    # for a pure Pauli attack the gap equals the acceptance weight, a key-average of 0/1 outcomes
    z_scores = []
    for r in pauli_reps:
        err = r.details["acc_weight_stderr"]
        diff = abs(r.measured - r.details["closed_form_gap"])
        z_scores.append(diff / err if err > 0 else (0.0 if diff < 1e-12 else np.inf))
    worst_z = int(np.argmax(z_scores))
    rep = bound_check("clifford_security.mc_agreement", common, z_scores[worst_z], SIGMA_K, seed=seed, samples=key_count)
    rep.details.update(
        worst_attack=pauli_reps[worst_z].params["attack"],
        beyond_3_sigma=sum(z > SIGMA_K for z in z_scores),
        statistic="|sampled gap - closed-form gap| / stderr over Pauli attacks",
    )
    out.append(rep)

    oracle = max(r.details["oracle_discrepancy"] for r in per_attack)
    out.append(bound_check("clifford_security.oracle_agreement", common, oracle, ORACLE_ATOL))
    out.append(clifford_monotonicity(n, monotone_ds))
    out.append(clifford_large_d(large_d_max))
    return out


def clifford_monotonicity(n: int = 1, ds: tuple[int, ...] = (1, 2, 3), r_qubits: int = 1) -> VerificationReport:
    """Closed-form gap of a single-X attack must not increase with ``d``."""
    rho = lin.maximally_entangled("M", "R", n) if r_qubits == n else input_battery(n, r_qubits, np.random.default_rng(0), 0)[0][1]
    gaps = []
    for d in ds:
        attack = pauli_attack(PauliOperator.single(n + d, 0, "X"), r_qubits)
        decomp = decompose(attack)
        ideal = sim.closed_form_clifford(decomp, rho)
        gaps.append(lin.flagged_distance(sim.twirled_real_clifford(decomp, rho, d), ideal))
    worst_rise = max((b - a for a, b in zip(gaps, gaps[1:])), default=0.0)
    rep = bound_check("clifford_security.monotone_in_d", {"n": n, "d": list(ds)}, worst_rise, 0.0, tolerance=1e-12)
    rep.details["gaps"] = gaps
    rep.details["expected"] = [sim.clifford_gap_pauli(n, d) for d in ds]
    return rep


def clifford_large_d(d_max: int = 64, n_max: int = 8) -> VerificationReport:
    """Exact Pauli-attack gap against ``3 / 2**d`` for every ``d <= d_max``, ``n <= n_max``."""
    worst = Fraction(0)
    where = None
    for n in range(1, n_max + 1):
        for d in range(1, d_max + 1):
            ratio = sim.clifford_gap_pauli(n, d) / Fraction(3, 2**d)
            if ratio > worst:
                worst, where = ratio, (n, d)
    rep = bound_check("clifford_security.large_d_closed_form", {"n_max": n_max, "d_max": d_max}, float(worst), 1.0)
    rep.details["worst_ratio_at"] = list(where)
    return rep


# -- trap code -------------------------------------------------------------


def trap_gap_dense(
    code: tc.ECCode,
    attack: AttackUnitary,
    inputs: list[tuple[str, DensityState]],
    keys: list[tc.TrapKey] | None = None,
) -> GapMeasurement:
    """Exhaustive-key gap of the trap code (dense, ``n == 1``)."""
    n, t = code.n, code.t
    decomp = decompose(attack)
    spec = sim.IdealChannelSpec("trap", n, t, attack)
    ch = tc.keyed_channel(code, attack, keys)
    best = None
    cf_gap = 0.0
    oracle = 0.0
    for label, rho in inputs:
        ideal = sim.closed_form_trap(decomp, rho, n, t)
        oracle = max(oracle, _oracle_gate(sim.ideal_trap(spec, rho), ideal, label))
        real = ch.apply(rho)
        twirled = tc.twirled_channel(code, decomp, rho)
        oracle = max(oracle, _oracle_gate(real, twirled, f"{label} (real channel vs symbolic path)"))
        gap = lin.flagged_distance(real, ideal)
        cf_gap = max(cf_gap, lin.flagged_distance(twirled, ideal))
        if best is None or gap > best[0]:
            best = (gap, label, real, twirled)
    gap, label, real, twirled = best
    return GapMeasurement(gap, 0.0, label, cf_gap, oracle, real.acc_weight, twirled.acc_weight, 0.0)


def trap_security_dense_reports(
    seed: int, haar_attacks: int = 20, r_qubits: int = 1, random_inputs: int = 20
) -> list[VerificationReport]:
    """``n = 1, t = 0``: all 64 Pauli attacks and Haar attacks, every key."""
    code = tc.trivial_code()
    bound = (1.0 / 3.0) ** (code.t + 1)
    ss = np.random.SeedSequence(seed)
    input_seed, attack_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    inputs = input_battery(1, r_qubits, np.random.default_rng(input_seed), random_inputs)
    keys = tc.all_keys(code.n)
    attack_rng = np.random.default_rng(attack_seed)
    paulis = [pauli_attack(p, r_qubits) for p in enumerate_paulis(3 * code.n)]
    haar = [random_unitary_attack(3 * code.n, r_qubits, int(s)) for s in attack_rng.integers(0, 2**31, size=haar_attacks)]
    out = []
    for attack in paulis + haar:
        start = time.perf_counter()
        m = trap_gap_dense(code, attack, inputs, keys)
        rep = bound_check(
            f"trap_security.dense.attack.{attack.name}",
            {"n": code.n, "t": code.t, "r": r_qubits, "attack": attack.name, "keys": len(keys)},
            m.gap,
            bound,
            tolerance=1e-9,
            runtime=time.perf_counter() - start,
        )
        rep.details.update(
            worst_input=m.worst_input, closed_form_gap=m.closed_form_gap,
            oracle_discrepancy=m.oracle_discrepancy, acc_weight=m.acc_weight,
        )
        out.append(rep)
    common = {"n": code.n, "t": code.t, "r": r_qubits, "keys": len(keys), "haar_attacks": haar_attacks}
    worst = max(out, key=lambda r: r.measured)
    rep = bound_check("trap_security.dense.bound", common, worst.measured, bound, tolerance=1e-9)
    rep.details["worst_attack"] = worst.params["attack"]
    pauli_worst = max(out[: len(paulis)], key=lambda r: r.measured)
    tight = exact_check("trap_security.dense.tightness", common, pauli_worst.measured, bound, 1e-9)
    tight.details["worst_attack"] = pauli_worst.params["attack"]
    oracle = max(r.details["oracle_discrepancy"] for r in out)
    return out + [rep, tight, bound_check("trap_security.dense.oracle_agreement", common, oracle, ORACLE_ATOL)]


def trap_gap_symbolic(
    code: tc.ECCode,
    attack: PauliOperator,
    inputs: list[tuple[str, DensityState]],
    perms: np.ndarray,
) -> GapMeasurement:
    """Gap for a Pauli attack over sampled permutations (the Pauli key is averaged exactly).

    Real and ideal channels are evaluated on the same permutation sample.
    """
    if not isinstance(attack, PauliOperator):
        raise TypeError("symbolic mode handles Pauli attacks only")
    n, t = code.n, code.t
    k = len(perms)
    res = tc.permutation_outcomes(code, attack, perms)
    sim_ok = res.undetected & (res.block_weight <= t)
    counts = np.bincount(res.logical[res.undetected], minlength=4)
    f_real = res.undetected.mean()
    f_ideal = sim_ok.mean()
    damaged = (res.undetected & ~sim_ok).astype(float)
    err = float(damaged.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    omega = lin.zero_state("M", 1).matrix
    best = None
    for label, rho in inputs:
        dr = 1 << rho.layout.size("R")
        rho_r = np.einsum("rasa->rs", rho.matrix.reshape(dr, 2, dr, 2))
        acc = np.zeros_like(rho.matrix)
        for code_l, c in enumerate(counts):
            if c:
                op = np.kron(np.eye(dr), to_matrix(PauliOperator(1, code_l >> 1, code_l & 1)))
                acc += (c / k) * op @ rho.matrix @ op.conj().T
        real = FlaggedOutput(
            DensityState(rho.layout, acc), DensityState(rho.layout, (1 - f_real) * np.kron(rho_r, omega))
        )
        ideal = FlaggedOutput(
            DensityState(rho.layout, f_ideal * rho.matrix),
            DensityState(rho.layout, (1 - f_ideal) * np.kron(rho_r, omega)),
        )
        gap = lin.flagged_distance(real, ideal)
        if best is None or gap > best[0]:
            best = (gap, label)
    eta = undetected_minus_accepted(n, t, attack.letter_counts())
    exact = eta / factorial(3 * n)
    return GapMeasurement(best[0], err, best[1], float(exact), 0.0, float(f_real), float(f_ideal), err)


def undetected_minus_accepted(n: int, t: int, counts: tuple[int, int, int]) -> int:
    """Orbit-counted number of permutations passing the traps but not the weight test."""
    return sim.undetected_permutations(n, counts) - sim.undetected_permutations(n, counts, t)


def trap_security_symbolic_reports(
    seed: int,
    code_name: str = "five_qubit",
    attacks: int = 200,
    permutations: int = 10_000,
    r_qubits: int = 1,
    random_inputs: int = 20,
) -> list[VerificationReport]:
    """Random Pauli attacks with sampled permutations, plus the worst-case weight-(t+1) attack."""
    code = tc.get_code(code_name)
    n, t = code.n, code.t
    m = 3 * n
    bound = (1.0 / 3.0) ** (t + 1)
    ss = np.random.SeedSequence(seed)
    input_seed, attack_seed, perm_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
    inputs = input_battery(1, r_qubits, np.random.default_rng(input_seed), random_inputs)
    attack_rng = np.random.default_rng(attack_seed)
    perm_rng = np.random.default_rng(perm_seed)
    probes = []
    while len(probes) < attacks:
        x, z = (int(v) for v in attack_rng.integers(0, 1 << m, size=2))
        if x or z:
            probes.append(PauliOperator(m, x, z))
    worst_case = PauliOperator(m, (1 << (t + 1)) - 1, 0)
    out = []
    for k, p in enumerate(probes + [worst_case]):
        start = time.perf_counter()
        perms = tc.sample_permutations(m, permutations, perm_rng)
        g = trap_gap_symbolic(code, p, inputs, perms)
        name = "trap_security.symbolic.worst_case" if k == attacks else f"trap_security.symbolic.attack.{k:03d}"
        rep = bound_check(
            name,
            {"n": n, "t": t, "ec": code.name, "attack": p.letters},
            g.gap,
            bound,
            stderr=g.stderr,
            seed=seed,
            samples=permutations,
            runtime=time.perf_counter() - start,
        )
        rep.details.update(worst_input=g.worst_input, exact_gap=g.closed_form_gap)
        out.append(rep)
    common = {"n": n, "t": t, "ec": code.name, "attacks": attacks, "permutations": permutations}
    worst = max(out[:attacks], key=lambda r: r.measured + SIGMA_K * r.stderr)
    rep = bound_check("trap_security.symbolic.bound", common, worst.measured, bound, stderr=worst.stderr, seed=seed, samples=permutations)
    rep.details.update(worst_attack=worst.params["attack"], failures=sum(not r.passed for r in out[:attacks]))
    out.append(rep)
    out.append(letter_scan(n, t))
    exact_worst = max(r.details["exact_gap"] for r in out[: attacks + 1])
    rep = bound_check("trap_security.symbolic.exact_bound", common, exact_worst, bound, tolerance=1e-12)
    rep.details["worst_case_exact"] = Fraction(undetected_minus_accepted(n, t, worst_case.letter_counts()), factorial(m))
    out.append(rep)
    return out


def letter_scan(n: int, t: int) -> VerificationReport:
    """Exact gap of every Pauli attack, one representative per letter multiset, against ``(1/3)**(t+1)``.

    For a Pauli attack the gap is the fraction of permutations that pass the
    traps with more than ``t`` letters on the message block.
    """
    m = 3 * n
    worst, where = Fraction(0), (0, 0, 0)
    for cx in range(m + 1):
        for cy in range(m + 1 - cx):
            for cz in range(m + 1 - cx - cy):
                g = Fraction(undetected_minus_accepted(n, t, (cx, cy, cz)), factorial(m))
                if g > worst:
                    worst, where = g, (cx, cy, cz)
    rep = bound_check(f"trap_security.letter_scan.n{n}.t{t}", {"n": n, "t": t}, float(worst), (1 / 3) ** (t + 1), tolerance=1e-12)
    rep.details.update(worst_gap=worst, worst_letter_counts_xyz=list(where))
    return rep


# -- permutation counting --------------------------------------------------


@dataclass(frozen=True)
class EtaQuery:
    n: int
    t: int
    pauli: PauliOperator

    def __post_init__(self):
        if self.pauli.n != 3 * self.n:
            raise ValueError(f"Pauli acts on {self.pauli.n} qubits, expected {3 * self.n}")
        if self.t < 0:
            raise ValueError("t must be nonnegative")


@dataclass(frozen=True)
class EtaComposition:
    """Split of a Pauli's letters: ``d_*`` are the ``t + 1`` letters forced onto the
    message block, ``x1, y, z1`` further letters on the block, ``x2`` X's on the
    |+> traps and ``z2`` Z's on the |0> traps."""

    d_x: int
    d_y: int
    d_z: int
    x1: int
    y: int
    z1: int
    x2: int
    z2: int

    @property
    def weight(self) -> int:
        return self.d_x + self.d_y + self.d_z + self.x1 + self.y + self.z1 + self.x2 + self.z2

    @property
    def block_weight(self) -> int:
        return self.d_x + self.d_y + self.d_z + self.x1 + self.y + self.z1

    @property
    def letter_counts(self) -> tuple[int, int, int]:
        return (self.d_x + self.x1 + self.x2, self.d_y + self.y, self.d_z + self.z1 + self.z2)


@lru_cache(maxsize=4)
def _all_perms(m: int) -> np.ndarray:
    if m > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} positions")
    return np.array(list(itertools.permutations(range(m))), dtype=np.int8)


def eta_bruteforce(q: EtaQuery) -> int:
    """Count permutations leaving the traps intact with more than ``t`` letters on the block."""
    undetected, bx, bz = tc.trap_landing(q.n, q.pauli, _all_perms(3 * q.n))
    return int(np.count_nonzero(undetected & ((bx | bz).sum(axis=1) > q.t)))


def eta_bruteforce_all_t(n: int, p: PauliOperator, ts) -> dict[int, int]:
    undetected, bx, bz = tc.trap_landing(n, p, _all_perms(3 * n))
    w = (bx | bz).sum(axis=1)
    return {t: int(np.count_nonzero(undetected & (w > t))) for t in ts}


def eta_bound(n: int, t: int) -> int:
    """``C(n, t+1) (t+1)! (3n - t - 1)!`` (zero when ``t >= n``)."""
    if t + 1 > n:
        return 0
    return comb(n, t + 1) * factorial(t + 1) * factorial(3 * n - t - 1)


def eta_composition(n: int, t: int, comp: EtaComposition) -> int:
    """Closed-form product ``n!^3 (3n-d)! / ((n-t-1-x1-y-z1)! (n-x2)! (n-z2)!)``.

    It counts placements of a fixed choice of which letters go to which
    block; ``eta_from_compositions`` adds the choice of letters.
    """
    if min(comp.d_x, comp.d_y, comp.d_z, comp.x1, comp.y, comp.z1, comp.x2, comp.z2) < 0:
        raise ValueError("composition entries must be nonnegative")
    if comp.d_x + comp.d_y + comp.d_z != t + 1:
        raise ValueError("forced block letters must number t + 1")
    if comp.block_weight > n or comp.x2 > n or comp.z2 > n or comp.weight > 3 * n:
        raise ValueError("composition does not fit the blocks")
    f = factorial
    return (
        f(n) ** 3
        * f(3 * n - comp.weight)
        // (f(n - comp.block_weight) * f(n - comp.x2) * f(n - comp.z2))
    )


def compositions(n: int, t: int, counts: tuple[int, int, int]) -> list[tuple[EtaComposition, int]]:
    """Every block placement of the letters that passes the traps with weight > ``t``.

    Returns one canonical composition per placement with the number of ways
    to choose which X's and which Z's go to the message block.
    """
    cx, cy, cz = counts
    out = []
    for bx in range(cx + 1):
        for bz in range(cz + 1):
            w = bx + cy + bz
            x2, z2 = cx - bx, cz - bz
            if w <= t or w > n or x2 > n or z2 > n:
                continue
            d_x = min(bx, t + 1)
            d_y = min(cy, t + 1 - d_x)
            d_z = t + 1 - d_x - d_y
            comp = EtaComposition(d_x, d_y, d_z, bx - d_x, cy - d_y, bz - d_z, x2, z2)
            out.append((comp, comb(cx, bx) * comb(cz, bz)))
    return out


def eta_from_compositions(n: int, t: int, counts: tuple[int, int, int]) -> int:
    return sum(mult * eta_composition(n, t, comp) for comp, mult in compositions(n, t, counts))


def _sample_paulis(m: int, count: int, rng: np.random.Generator) -> list[PauliOperator]:
    return [PauliOperator(m, int(x), int(z)) for x, z in rng.integers(0, 1 << m, size=(count, 2))]


def eta_reports(seed: int, sample_at_nine: int = 500, ts: tuple[int, ...] = (0, 1)) -> list[VerificationReport]:
    """Brute force vs composition sum vs bound for 3n in {3, 6, 9}, plus the equality case."""
    rng = np.random.default_rng(seed)
    out = []
    for n in (1, 2, 3):
        start = time.perf_counter()
        paulis = enumerate_paulis(3 * n) if n < 3 else _sample_paulis(9, sample_at_nine, rng)
        mismatch = over = 0
        single_mismatch = singles = 0
        for p in paulis:
            brute = eta_bruteforce_all_t(n, p, ts)
            for t in ts:
                comps = compositions(n, t, p.letter_counts())
                total = sum(mult * eta_composition(n, t, c) for c, mult in comps)
                mismatch += total != brute[t]
                over += brute[t] > eta_bound(n, t)
                if len(comps) == 1 and comps[0][1] == 1:
                    singles += 1
                    single_mismatch += eta_composition(n, t, comps[0][0]) != brute[t]
        params = {"n": n, "t": list(ts), "paulis": len(paulis), "sampled": n == 3}
        rt = time.perf_counter() - start
        out.append(exact_check(f"eta.n{n}.bruteforce_vs_composition", params, mismatch, 0, 0, seed=seed if n == 3 else None, runtime=rt))
        out.append(exact_check(f"eta.n{n}.bound", params, over, 0, 0, seed=seed if n == 3 else None))
        rep = exact_check(f"eta.n{n}.single_composition", params, single_mismatch, 0, 0)
        rep.details["paulis_with_one_composition"] = singles
        out.append(rep)
    worst_gap = 0
    for n in (1, 2, 3):
        for t in ts:
            if t + 1 > n:
                continue
            p = PauliOperator(3 * n, (1 << (t + 1)) - 1, 0)
            worst_gap = max(worst_gap, abs(eta_bruteforce(EtaQuery(n, t, p)) - eta_bound(n, t)))
    out.append(exact_check("eta.equality_case", {"n": [1, 2, 3], "t": list(ts)}, worst_gap, 0, 0))
    return out


def product_chain(n: int, t: int) -> Fraction:
    """``prod_{i=0..t} (n - t + i) / (3n - t + i)``."""
    out = Fraction(1)
    for i in range(t + 1):
        out *= Fraction(n - t + i, 3 * n - t + i)
    return out


def bound_chain_check(n_max: int = 50, brute_ns: tuple[int, ...] = (1, 2, 3), ts: tuple[int, ...] = (0, 1)) -> list[VerificationReport]:
    """Largest ``eta_P / (3n)!`` against ``(1/3)**(t+1)``, and the product chain up to ``n_max``."""
    out = []
    for n in brute_ns:
        start = time.perf_counter()
        worst = {t: 0 for t in ts}
        m = 3 * n
        # eta depends on a Pauli only through its letter counts
        for cx in range(m + 1):
            for cy in range(m + 1 - cx):
                for cz in range(m + 1 - cx - cy):
                    p = PauliOperator(m, (1 << (cx + cy)) - 1, ((1 << (cy + cz)) - 1) << cx)
                    for t, v in eta_bruteforce_all_t(n, p, ts).items():
                        worst[t] = max(worst[t], v)
        for t in ts:
            ratio = Fraction(worst[t], factorial(m))
            rep = bound_check(
                f"eta.chain.bruteforce.n{n}.t{t}", {"n": n, "t": t}, float(ratio), (1 / 3) ** (t + 1),
                tolerance=1e-12, runtime=time.perf_counter() - start,
            )
            rep.details["max_ratio"] = ratio
            out.append(rep)
    worst_ratio = Fraction(0)
    mismatch = 0
    for n in range(1, n_max + 1):
        for t in range(n):
            chain = product_chain(n, t)
            mismatch += chain != Fraction(eta_bound(n, t), factorial(3 * n))
            worst_ratio = max(worst_ratio, chain * 3 ** (t + 1))
    rep = bound_check("eta.chain.product", {"n_max": n_max}, float(worst_ratio), 1.0, tolerance=1e-12)
    rep.details["max_ratio_to_bound"] = worst_ratio
    out.append(rep)
    out.append(exact_check("eta.chain.matches_bound", {"n_max": n_max}, mismatch, 0, 0))
    return out
