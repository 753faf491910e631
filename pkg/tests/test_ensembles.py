import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsqlab import ensembles as en
from qsqlab.qcore import gf2
from qsqlab.qcore.states import (expectation, hadamard_matrix, plus_state, to_density, trace_distance,
                                 tv_distance)

tables = st.integers(1, 4).flatmap(lambda n: st.lists(st.integers(0, 1), min_size=2**n, max_size=2**n))


def test_function_state_examples():
    psi = en.function_state([0, 0])
    assert np.allclose(psi, [1 / math.sqrt(2), 0, 1 / math.sqrt(2), 0])
    assert np.allclose(en.function_state([0, 1]), [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])


@given(tables, st.integers(0, 2**31))
def test_function_state_overlap_is_agreement(f, seed):
    h = np.random.default_rng(seed).integers(0, 2, len(f))
    overlap = np.vdot(en.function_state(f), en.function_state(h)).real
    assert overlap == pytest.approx(np.mean(np.array(f) == h), abs=1e-12)


def test_phase_state_examples():
    assert np.allclose(en.phase_state([0, 0, 0, 0]), plus_state(2))
    assert np.allclose(en.phase_state([0, 0, 0, 1]), np.array([1, 1, 1, -1]) / 2)


@given(tables)
def test_label_hadamard_postselection_gives_phase_state(f):
    n = int(math.log2(len(f)))
    H = np.kron(np.eye(2**n), hadamard_matrix(1))
    out = (H @ en.function_state(f)).reshape(2**n, 2)[:, 1]
    out = out / np.linalg.norm(out)
    assert np.allclose(out, en.phase_state(f))


def test_noisy_example_state():
    f = [0, 1, 1, 0]
    assert np.allclose(en.noisy_example_state(f, 0), en.function_state(f))
    half = en.noisy_example_state(f, 0.5)
    assert np.allclose(half, np.kron(plus_state(2), plus_state(1)))
    assert en.noisy_example_state([0, 0], 0.25)[0].real == pytest.approx(0.61237244, abs=1e-8)
    with pytest.raises(ValueError):
        en.noisy_example_state(f, 0.6)


def test_degree2_ensemble_sizes():
    for n in (1, 2, 3):
        e = en.degree2_ensemble(n)
        assert len(e) == 2 ** (n * (n + 1) // 2)
        assert e.num_qubits == n + 1
        assert en.degree2_ensemble(n, "phase").num_qubits == n


def test_class_eta():
    assert en.class_eta([[0, 0], [0, 1]]) == pytest.approx((0.5, 0.5))
    eta_m, _ = en.class_eta(gf2.quad_form_tables(2))
    assert eta_m >= 0.25
    with pytest.raises(ValueError):
        en.class_eta([[0, 1], [0, 1]])


def test_coset_state():
    assert np.allclose(en.coset_state(1, [1]), to_density(plus_state(1)))
    for n in (2, 3, 4):
        for s in gf2.all_bitstrings(n)[1:]:
            rho = en.coset_state(n, s)
            assert np.trace(rho).real == pytest.approx(1)
            assert np.trace(rho @ rho).real == pytest.approx(2.0 ** -(n - 1))
    with pytest.raises(ValueError):
        en.coset_state(2, [0, 0])


def test_coset_correlation_is_delta():
    for n in range(1, 6):
        sigma = np.eye(2**n) / 2**n
        states = en.coset_ensemble(n).states
        for i, a in enumerate(states):
            for j, b in enumerate(states[: i + 1]):
                ah, bh = a @ np.linalg.inv(sigma) - np.eye(2**n), b @ np.linalg.inv(sigma) - np.eye(2**n)
                g = np.trace(ah @ bh @ sigma).real
                assert g == pytest.approx(float(i == j), abs=1e-9)


def test_coupon_state():
    assert np.allclose(en.coupon_state(4, [1, 2, 3, 4]), 0.5)
    assert np.allclose(en.coupon_state(5, [3]), np.eye(8)[2])
    psi = en.coupon_state(8, [2, 5])
    assert expectation(en.interval_projector(8, 1, 4), psi) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        en.coupon_state(4, [5])


def test_codeword_state():
    G = [[1, 0], [0, 1], [1, 1]]
    zero = en.codeword_state(G, [0, 0])
    vals = [expectation(en.codeword_row_projector(3, j), zero) for j in range(3)]
    assert np.allclose(vals, 1 / 3)
    psi = en.codeword_state(G, [1, 0])
    vals = [expectation(en.codeword_row_projector(3, j), psi) for j in range(3)]
    assert np.allclose(vals, [0, 1 / 3, 0])
    with pytest.raises(ValueError):
        en.codeword_state([[1, 1], [1, 1]], [1, 0])


def test_biclique():
    p = en.BicliqueParams(4, (1, 3))
    D = en.biclique_distribution(p)
    assert D.sum() == pytest.approx(1)
    assert tv_distance(D, np.full(16, 1 / 16)) == pytest.approx(0.375, abs=1e-12)
    assert np.linalg.norm(en.biclique_state(en.BicliqueParams(3, (1, 2, 3)))) == pytest.approx(1)
    for n in range(1, 9):
        for k in range(1, n + 1):
            psi = en.biclique_state(en.BicliqueParams(n, tuple(range(1, k + 1))))
            assert np.vdot(plus_state(n), psi).real == pytest.approx(en.biclique_overlap_formula(n, k), abs=1e-12)
            assert math.sqrt(1 - k / n) <= en.biclique_overlap_formula(n, k) + 1e-12


def test_biclique_overlap_frozen():
    # (12 sqrt(1/32) + 4 sqrt(5/32)) / 4 at (n, k) = (4, 2)
    assert en.biclique_overlap_formula(4, 2) == pytest.approx(0.92561479, abs=1e-8)


def test_shadow_state():
    rho = en.shadow_state(2, "XZ", 0.1)
    ev = np.linalg.eigvalsh(rho)
    assert np.allclose(sorted(set(np.round(ev, 12))), [(1 - 0.3) / 4, (1 + 0.3) / 4])
    assert np.allclose(en.shadow_state(1, 0, 1e-12), np.eye(2) / 2)
    with pytest.raises(ValueError):
        en.shadow_state(1, "I", 0.1)


@settings(max_examples=20)
@given(st.integers(0, 2**31))
def test_padded_state_block_identity(seed):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    X = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    M = (X + X.conj().T) / 2
    assert expectation(M, en.padded_state(psi, 2)) == pytest.approx(expectation(en.zero_block(M, 2), psi), abs=1e-9)
    assert np.allclose(en.padded_state(psi, 0), psi)


def test_stabilizer_ensemble():
    s1 = en.stabilizer_ensemble(1)
    assert len(s1) == 6
    assert len(en.stabilizer_ensemble(2)) == 60
    for m in (1, 2):
        e = en.stabilizer_ensemble(m)
        assert np.allclose(e.mean_state(), np.eye(2**m) / 2**m, atol=1e-12)
        assert np.allclose(e.second_moment(), en.haar_second_moment(m), atol=1e-12)


def test_ensemble_validation_and_export(tmp_path):
    e = en.degree2_ensemble(1)
    with pytest.raises(ValueError):
        en.validate_members(en.Ensemble("bad", [0], [np.array([1.0, 1.0])]))
    en.validate_members(e)
    with pytest.raises(ValueError):
        en.Ensemble("bad", [0, 1], [e.states[0]])
    man = e.to_manifest()
    json.dumps(man)
    e.write_manifest(tmp_path / "m.json")
    e.write_amplitudes_csv(tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "member,index,re,im"
    assert len(lines) == 1 + len(e) * e.dim
    assert trace_distance(e.density(0), e.states[0]) < 1e-12
