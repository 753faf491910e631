import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsqlab.qcore import states as qs
from qsqlab.qcore.paulis import pauli_expectations, pauli_labels, pauli_matrix

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)

probabilities = st.integers(1, 8).flatmap(
    lambda d: st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d).filter(lambda v: sum(v) > 1e-3)
)


def test_trace_distance_examples():
    assert qs.trace_distance(KET0, KET0) == pytest.approx(0, abs=1e-12)
    assert qs.trace_distance(KET0, KET1) == pytest.approx(1)
    assert qs.trace_distance(KET0, PLUS) == pytest.approx(0.70710678, abs=1e-8)
    # pure and Schatten paths agree
    assert qs.trace_distance(qs.to_density(KET0), PLUS) == pytest.approx(0.70710678, abs=1e-8)


def test_helstrom_examples():
    assert qs.helstrom(KET0, KET0)[1] == pytest.approx(0, abs=1e-12)
    assert qs.helstrom(KET0, KET1)[1] == pytest.approx(2)
    M, val = qs.helstrom(KET0, PLUS)
    assert val == pytest.approx(1.41421356, abs=1e-8)
    assert qs.operator_norm(M) <= 1 + 1e-12


def test_distinguish_success_prob_examples():
    assert qs.distinguish_success_prob(KET0, KET1) == pytest.approx(1)
    assert qs.distinguish_success_prob(KET0, KET0) == pytest.approx(0.5)
    assert qs.distinguish_success_prob(KET0, PLUS) == pytest.approx(0.85355339, abs=1e-8)


def test_born_distribution_examples():
    assert qs.born_distribution(qs.basis_state(0, 2)).tolist() == [1, 0, 0, 0]
    assert np.allclose(qs.born_distribution(qs.plus_state(3)), 1 / 8)
    psi = np.array([math.sqrt(0.25), 0, 0, math.sqrt(0.75)])
    assert np.allclose(qs.born_distribution(psi), [0.25, 0, 0, 0.75])


def test_dist_metrics_examples():
    p = np.array([0.2, 0.8])
    assert qs.dist_metrics(p, p) == pytest.approx((0, 0), abs=1e-7)
    assert qs.dist_metrics([1, 0], [0, 1]) == pytest.approx((1, 1))
    tv, h = qs.dist_metrics([1, 0], [0.5, 0.5])
    assert tv == pytest.approx(0.5)
    assert h == pytest.approx(0.54119610, abs=1e-8)


@given(probabilities, st.integers(0, 2**31))
def test_tv_hellinger_inequality(p, seed):
    p = np.array(p) / sum(p)
    q = np.random.default_rng(seed).dirichlet(np.ones(p.size))
    tv, h = qs.dist_metrics(p, q)
    assert h**2 <= tv + 1e-12
    assert tv <= math.sqrt(2) * h + 1e-12


def test_haar_state_moments(rng):
    Z = pauli_matrix("Z")
    vals = np.array([qs.expectation(Z, qs.haar_state(1, rng)) for _ in range(20000)])
    assert abs(vals.mean()) < 0.01
    assert abs(vals.var() - 1 / 3) < 0.01
    batch = qs.haar_states(3, 100, rng)
    assert np.allclose(np.linalg.norm(batch, axis=1), 1, atol=1e-9)


def test_walsh_hadamard_matches_matrix(rng):
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.allclose(qs.walsh_hadamard(v), qs.hadamard_matrix(3) @ v)


def test_embed_and_partial_trace():
    m = 3
    psi = qs.ghz_state(m)
    red = qs.partial_trace(psi, (0, 2), m)
    assert np.allclose(red, np.diag([0.5, 0, 0, 0.5]))
    X0 = qs.embed_operator(pauli_matrix("X"), (0,), m)
    assert np.allclose(X0, pauli_matrix("XII"))
    ZZ = qs.embed_operator(pauli_matrix("ZZ"), (0, 2), m)
    assert np.allclose(ZZ, pauli_matrix("ZIZ"))


def test_positive_part_projector_is_helstrom_optimal(rng):
    a, b = qs.haar_state(2, rng), qs.haar_state(2, rng)
    P = qs.positive_part_projector(qs.to_density(a) - qs.to_density(b))
    assert qs.expectation(P, a) - qs.expectation(P, b) == pytest.approx(qs.trace_distance(a, b), abs=1e-9)


def test_helstrom_monte_carlo(rng):
    # guess "psi0" on the positive outcome of the Helstrom measurement
    psi0, psi1 = KET0, PLUS
    P = qs.positive_part_projector(qs.to_density(psi0) - qs.to_density(psi1))
    shots = 10**4
    which = rng.integers(0, 2, shots)
    p_pos = np.where(which == 0, qs.expectation(P, psi0), qs.expectation(P, psi1))
    pos = rng.random(shots) < p_pos
    freq = np.mean(pos == (which == 0))
    assert abs(freq - qs.distinguish_success_prob(psi0, psi1)) <= 0.01


def test_validators():
    with pytest.raises(ValueError):
        qs.check_pure_state([1, 1])
    with pytest.raises(ValueError):
        qs.check_observable(2 * np.eye(2))
    with pytest.raises(ValueError):
        qs.check_distribution([0.5, 0.6])


def test_pauli_labels_and_expectations():
    assert pauli_labels(1) == ["X", "Y", "Z"]
    assert len(pauli_labels(2, include_identity=True)) == 16
    vals = pauli_expectations(["ZI", "IZ", "XX"], qs.basis_state(0, 2))
    assert np.allclose(vals, [1, 1, 0])


@settings(max_examples=25)
@given(st.integers(1, 3), st.integers(0, 2**31))
def test_swap_operator_acts_as_swap(m, seed):
    rng = np.random.default_rng(seed)
    a, b = qs.haar_state(m, rng), qs.haar_state(m, rng)
    assert np.allclose(qs.swap_operator(m) @ np.kron(a, b), np.kron(b, a))
