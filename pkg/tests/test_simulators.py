import itertools
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qauth import linear as lin
from qauth import simulators as sim
from qauth.adversary import decompose, identity_attack, pauli_attack, random_unitary_attack
from qauth.linear import SubsystemLayout
from qauth.pauli import (
    PauliOperator,
    QubitPartition,
    accepted_by_simulator,
    conjugate_by_permutation,
    enumerate_paulis,
    undetected_by_traps,
)

seeds = st.integers(0, 2**32)


def _input(rng, n=1, r=1):
    return lin.random_pure_state(SubsystemLayout.of(("M", n), ("R", r)), rng)


def _fraction_oracle(p, n, t):
    """Accepted fraction of permutations by direct enumeration."""
    part = QubitPartition(n, n, n)
    perms = list(itertools.permutations(range(3 * n)))
    hits = sum(accepted_by_simulator(conjugate_by_permutation(p, perm), part, t) for perm in perms)
    return Fraction(hits, len(perms))


def test_spec_validation():
    with pytest.raises(ValueError):
        sim.IdealChannelSpec("steane", 1, 1, identity_attack(2))
    with pytest.raises(ValueError):
        sim.IdealChannelSpec("clifford", 1, 2, identity_attack(2))
    spec = sim.IdealChannelSpec("trap", 2, 0, identity_attack(6))
    assert spec.codeword_qubits == 6 and spec.message_qubits == 1


def test_ideal_clifford_identity_attack_is_identity(rng):
    rho = _input(rng)
    out = sim.ideal_clifford(sim.IdealChannelSpec("clifford", 1, 1, identity_attack(2, 1)), rho)
    assert out.acc.allclose(rho, 1e-12)
    assert out.rej_weight == pytest.approx(0.0)


def test_ideal_clifford_pauli_attack_always_rejects(rng):
    rho = _input(rng)
    out = sim.ideal_clifford(sim.IdealChannelSpec("clifford", 1, 1, pauli_attack("ZI", 1)), rho)
    assert out.acc_weight == pytest.approx(0.0)
    np.testing.assert_allclose(
        out.rej.matrix, np.kron(lin.partial_trace(rho, ["R"]).matrix, lin.zero_state("M", 1).matrix), atol=1e-12
    )


@given(seeds, st.integers(1, 2))
@settings(max_examples=15)
def test_clifford_simulator_matches_closed_form(seed, d):
    rng = np.random.default_rng(seed)
    attack = random_unitary_attack(1 + d, 1, seed)
    rho = _input(rng)
    epr = sim.ideal_clifford(sim.IdealChannelSpec("clifford", 1, d, attack), rho)
    assert epr.allclose(sim.closed_form_clifford(decompose(attack), rho), 1e-10)
    assert epr.total_weight == pytest.approx(1.0)


@given(seeds)
@settings(max_examples=10)
def test_trap_simulator_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    attack = random_unitary_attack(3, 1, seed)
    rho = _input(rng)
    epr = sim.ideal_trap(sim.IdealChannelSpec("trap", 1, 0, attack), rho)
    assert epr.allclose(sim.closed_form_trap(decompose(attack), rho, 1, 0), 1e-10)


def test_trap_simulator_single_x_accepts_a_third(rng):
    # X on one of three positions survives only on the |+> trap
    out = sim.ideal_trap(sim.IdealChannelSpec("trap", 1, 0, pauli_attack("XII", 1)), _input(rng))
    assert out.acc_weight == pytest.approx(1 / 3)


def test_closed_form_identity_weight(rng):
    rho = _input(rng)
    out = sim.closed_form_clifford(decompose(identity_attack(3, 1)), rho)
    assert out.acc.allclose(rho, 1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_accept_fraction_matches_enumeration(n):
    rng = np.random.default_rng(n)
    ps = enumerate_paulis(3 * n)
    for k in rng.choice(len(ps), size=40, replace=False):
        for t in (0, 1):
            assert sim.simulator_accept_fraction(n, t, ps[k]) == _fraction_oracle(ps[k], n, t)


def test_undetected_count_matches_enumeration():
    n = 2
    part = QubitPartition(n, n, n)
    perms = list(itertools.permutations(range(6)))
    for label in ("XXIIII", "XYZIII", "ZZZIII", "XXXZZI", "YIIIII"):
        p = PauliOperator.from_label(label)
        brute = sum(undetected_by_traps(conjugate_by_permutation(p, perm), part) for perm in perms)
        assert sim.undetected_permutations(n, p.letter_counts()) == brute


def test_placement_count_label_choice_factor():
    # two X letters, one lands on the block: either of the two can be the one
    n = 1
    assert sim.placement_count(n, (2, 0, 0), (1, 0, 0)) == 2 * 1 * 1 * factorial(1)
    assert sim.placement_count(n, (0, 1, 0), (0, 0, 0)) == 0


@pytest.mark.parametrize("d,expected", [(1, Fraction(7, 15)), (2, Fraction(5, 21)), (3, Fraction(31, 255))])
def test_clifford_pauli_gap_values(d, expected):
    assert sim.clifford_gap_pauli(1, d) == expected


@pytest.mark.parametrize("d", [1, 2, 3])
def test_clifford_pauli_gap_from_channels(d):
    # independent route: trace distance between the twirled real and ideal outputs
    rho = lin.maximally_entangled("M", "R", 1)
    attack = pauli_attack("X" + "I" * d, 1)
    dec = decompose(attack)
    real = sim.twirled_real_clifford(dec, rho, d)
    ideal = sim.closed_form_clifford(dec, rho)
    assert lin.flagged_distance(real, ideal) == pytest.approx(float(sim.clifford_gap_pauli(1, d)), abs=1e-12)


def test_twirled_real_is_trace_preserving(rng):
    attack = random_unitary_attack(3, 1, 2)
    out = sim.twirled_real_clifford(decompose(attack), _input(rng), 2)
    assert out.total_weight == pytest.approx(1.0)


def test_closed_form_trap_input_checks(rng):
    with pytest.raises(ValueError):
        sim.closed_form_trap(decompose(identity_attack(3, 1)), _input(rng), 2, 0)
