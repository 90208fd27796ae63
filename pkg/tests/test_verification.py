import itertools
import json
from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qauth import clifford_code as cc
from qauth import trap_code as tc
from qauth import verification as v
from qauth.adversary import pauli_attack, random_unitary_attack
from qauth.linear import FlaggedOutput, SubsystemLayout, basis_state, maximally_entangled
from qauth.pauli import PauliOperator


def _eta_oracle(n, t, letters):
    """Plain enumeration over permutations of a letter string."""
    m = 3 * n
    count = 0
    for perm in itertools.permutations(range(m)):
        moved = ["I"] * m
        for i, ch in enumerate(letters):
            moved[perm[i]] = ch
        block, t0, tp = moved[:n], moved[n:2 * n], moved[2 * n:]
        if set(t0) <= {"I", "Z"} and set(tp) <= {"I", "X"} and sum(c != "I" for c in block) > t:
            count += 1
    return count


# -- report semantics ------------------------------------------------------


def test_exact_check_semantics():
    assert v.exact_check("a", {}, 1.0, 1.0 + 1e-10, 1e-9).passed
    assert not v.exact_check("a", {}, 1.0, 1.1, 1e-9).passed


def test_bound_check_uses_three_sigma():
    assert v.bound_check("b", {}, 0.70, 0.75, stderr=0.016).passed
    assert not v.bound_check("b", {}, 0.70, 0.75, stderr=0.017).passed
    assert v.bound_check("b", {}, 0.75, 0.75).passed


def test_json_is_sorted_and_runtime_free():
    reps = [
        v.exact_check("z.second", {"k": (1, 2)}, 0.0, 0.0, 0.0, runtime=3.2),
        v.bound_check("a.first", {"f": Fraction(1, 3)}, np.float64(0.1), 0.2),
    ]
    text = v.reports_to_json(reps)
    data = json.loads(text)
    assert data["schema_version"] == v.SCHEMA_VERSION
    assert [r["name"] for r in data["reports"]] == ["a.first", "z.second"]
    assert "runtime" not in text
    assert data["reports"][0]["params"]["f"] == "1/3"
    assert text == v.reports_to_json(list(reversed(reps)))


def test_csv_columns():
    text = v.reports_to_csv([v.exact_check("x", {"n": 1}, 0.5, 0.5, 0.0)])
    header, row = text.strip().split("\n")
    assert header == "check,params,measured,bound,pass"
    assert row.startswith("x,") and row.endswith(",True")


# -- inputs and twirls ------------------------------------------------------


def test_input_battery(rng):
    battery = v.input_battery(1, 1, rng, n_random=3)
    labels = [label for label, _ in battery]
    assert labels[0] == "max_entangled"
    assert sum(label.startswith("random:") for label in labels) == 3
    for _, rho in battery:
        rho.validate()
        assert rho.trace_weight == pytest.approx(1.0)


def test_twirl_reports_pass():
    reps = v.twirl_reports(1, states=3)
    assert all(r.passed for r in reps), [r.name for r in reps if not r.passed]


def test_randomization_table():
    table = v.verify_clifford_randomization()
    assert len(table) == 9 and set(table.values()) == {8}


def test_correctness_reports_pass():
    reps = v.correctness_reports(3, trials=5)
    assert all(r.passed for r in reps)


# -- security --------------------------------------------------------------


def test_clifford_pauli_gap_matches_exact_value(rng):
    inputs = v.input_battery(1, 1, rng, n_random=0)
    strategy = cc.KeyStrategy(count=2000, seed=4)
    rep = v.security_gap_clifford(1, 2, pauli_attack("XII", 1), inputs, strategy)
    assert rep.details["closed_form_gap"] == pytest.approx(5 / 21, abs=1e-12)
    assert abs(rep.measured - 5 / 21) < 4 * rep.stderr + 0.02
    assert rep.passed


def test_oracle_gate_raises_on_disagreement():
    lay = SubsystemLayout.of(("M", 1))
    a = FlaggedOutput(basis_state(lay, 0), basis_state(lay, 0).scaled(0))
    b = FlaggedOutput(basis_state(lay, 1), basis_state(lay, 0).scaled(0))
    with pytest.raises(v.OracleDisagreement):
        v._oracle_gate(a, b, "test")


def test_trap_dense_gap_single_x_is_one_third(rng):
    inputs = v.input_battery(1, 1, rng, n_random=0)
    m = v.trap_gap_dense(tc.trivial_code(), pauli_attack("ZII", 1), inputs)
    assert m.gap == pytest.approx(1 / 3, abs=1e-12)
    assert m.oracle_discrepancy < 1e-12


def test_trap_dense_haar_gap_below_bound(rng):
    inputs = v.input_battery(1, 1, rng, n_random=2)
    m = v.trap_gap_dense(tc.trivial_code(), random_unitary_attack(3, 1, 17), inputs)
    assert m.gap <= 1 / 3 + 1e-9


def test_symbolic_gap_agrees_with_exact_count(rng):
    code = tc.five_qubit_code()
    attack = PauliOperator.from_label("XX" + "I" * 13)
    perms = tc.sample_permutations(15, 20000, rng)
    g = v.trap_gap_symbolic(code, attack, [("max_entangled", maximally_entangled("M", "R", 1))], perms)
    assert g.closed_form_gap == pytest.approx(2 / 21)
    assert abs(g.gap - 2 / 21) < 4 * g.stderr


def test_clifford_large_d_and_monotone():
    assert v.clifford_large_d(d_max=20, n_max=3).passed
    assert v.clifford_monotonicity().passed


# -- permutation counting --------------------------------------------------


@pytest.mark.parametrize("label", ["XII", "ZIX", "YII", "XXIIII", "XYZIII", "ZZZIII", "XXXZZZ"])
@pytest.mark.parametrize("t", [0, 1])
def test_eta_bruteforce_matches_enumeration(label, t):
    n = len(label) // 3
    p = PauliOperator.from_label(label)
    assert v.eta_bruteforce(v.EtaQuery(n, t, p)) == _eta_oracle(n, t, label)


@given(st.integers(0, 4**6 - 1), st.integers(0, 1))
def test_composition_sum_equals_bruteforce(index, t):
    p = PauliOperator(6, index >> 6, index & 63)
    assert v.eta_from_compositions(2, t, p.letter_counts()) == v.eta_bruteforce(v.EtaQuery(2, t, p))


def test_eta_bound_formula():
    assert v.eta_bound(2, 1) == comb(2, 2) * 2 * factorial(4)
    assert v.eta_bound(1, 1) == 0


def test_equality_case():
    for n, t in [(1, 0), (2, 0), (2, 1), (3, 1)]:
        p = PauliOperator(3 * n, (1 << (t + 1)) - 1, 0)
        assert v.eta_bruteforce(v.EtaQuery(n, t, p)) == v.eta_bound(n, t)


def test_known_bound_violation():
    # three X letters at 3n = 6: 72 placements, above the bound of 48
    p = PauliOperator.from_label("XXXIII")
    assert _eta_oracle(2, 1, "XXXIII") == 72
    assert v.eta_bruteforce(v.EtaQuery(2, 1, p)) == 72 > v.eta_bound(2, 1)


def test_single_composition_product_needs_no_label_factor():
    comps = v.compositions(2, 0, (0, 0, 1))
    assert len(comps) == 1 and comps[0][1] == 1
    p = PauliOperator.from_label("ZIIIII")
    assert v.eta_composition(2, 0, comps[0][0]) == v.eta_bruteforce(v.EtaQuery(2, 0, p))


def test_composition_validation():
    with pytest.raises(ValueError):
        v.eta_composition(1, 0, v.EtaComposition(1, 1, 0, 0, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        v.EtaQuery(2, 0, PauliOperator.identity(3))


def test_product_chain_equals_bound_ratio():
    for n in range(1, 12):
        for t in range(n):
            assert v.product_chain(n, t) == Fraction(v.eta_bound(n, t), factorial(3 * n))
            assert v.product_chain(n, t) <= Fraction(1, 3 ** (t + 1))


def test_letter_scan_exposes_five_qubit_worst_case():
    rep = v.letter_scan(5, 1)
    assert rep.details["worst_gap"] == Fraction(12, 91)
    assert rep.details["worst_letter_counts_xyz"] == [0, 0, 3]
    assert not rep.passed
