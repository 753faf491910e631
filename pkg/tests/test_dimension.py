import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsqlab import dimension as dm
from qsqlab import ensembles as en
from qsqlab.qcore.paulis import pauli_labels, pauli_matrix
from qsqlab.qcore.states import helstrom, random_sign_observable


def random_observable(d, rng):
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = (X + X.conj().T) / 2
    return H / np.linalg.norm(H, 2)


# -- variance --------------------------------------------------------------

def test_variance_trivial_cases(rng):
    single = en.Ensemble("one", [0], [np.array([1, 0])])
    assert dm.variance_of(single, pauli_matrix("X")) == 0
    assert dm.variance_of(en.degree2_ensemble(2), np.eye(8)) == pytest.approx(0, abs=1e-15)
    assert dm.variance_of(en.stabilizer_ensemble(1), pauli_matrix("Z")) == pytest.approx(1 / 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**31))
def test_variance_two_routes_agree(n, seed):
    rng = np.random.default_rng(seed)
    ens_ = en.degree2_ensemble(n)
    M = random_observable(ens_.dim, rng)
    a, b = dm.variance_of(ens_, M), dm.variance_direct(ens_, M)
    assert a >= 0
    assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_moment_variance_matches_enumeration_on_paulis(n):
    fam = dm.Degree2Family(n)
    ens_ = fam.ensemble()
    for lab in pauli_labels(n + 1):
        M = pauli_matrix(lab)
        assert fam.variance(M) == pytest.approx(dm.variance_of(ens_, M), abs=1e-9)


def test_moment_variance_matches_enumeration_random(rng):
    for n in (1, 2, 3, 4):
        fam = dm.Degree2Family(n)
        ens_ = fam.ensemble()
        for _ in range(5):
            M = random_observable(fam.dim, rng)
            assert fam.variance(M) == pytest.approx(dm.variance_of(ens_, M), abs=1e-9)


def test_case_terms_bounded(rng):
    for n in (2, 3, 4):
        fam = dm.Degree2Family(n)
        for desc, M in fam.structured_observables(rng):
            for i in (1, 2, 3):
                assert abs(fam.case_terms(M)[i, i]) <= 2 / 2**n + 1e-9


def test_max_variance_scan_small_cases(rng):
    res = dm.max_variance_scan(en.stabilizer_ensemble(1), 20, rng)
    assert res.exhaustive_paulis
    assert res.value >= 1 / 3 - 1e-12
    pauli_max = max(dm.variance_of(en.stabilizer_ensemble(1), pauli_matrix(p)) for p in "XYZ")
    assert pauli_max == pytest.approx(1 / 3)
    a, b = np.array([1, 0]), np.array([0, 1])
    M, _ = helstrom(a, b)
    assert dm.variance_of(en.Ensemble("pair", [0, 1], [a, b]), M) == pytest.approx(1)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_variance_scan_under_constant(n, rng):
    res = dm.max_variance_scan(dm.Degree2Family(n), 100, rng)
    assert res.value <= 4 * 2 ** (-n / 2)


def test_qsd_variance_bound():
    assert dm.qsd_variance_bound(None, 0.1, 0.01).value == pytest.approx(1.0)
    assert dm.qsd_variance_bound(None, 0.2, 0.01).value == pytest.approx(4.0)
    r = dm.qsd_variance_bound(None, 0.1, 0.0)
    assert math.isinf(r.value) and r.flags["unbounded"]
    with pytest.raises(ValueError):
        dm.qsd_variance_bound(None, 0.1, -1.0)


def _degree2_n4_pauli_max():
    fam = dm.Degree2Family(4)
    return fam, max(fam.variance(pauli_matrix(lab)) for lab in pauli_labels(5))


def test_qsd_bound_degree2_n4_value():
    # Z on the label qubit reads the bias of f_A; its variance over all 1024 forms is 15/256
    fam, maxvar = _degree2_n4_pauli_max()
    assert maxvar == pytest.approx(15 / 256, abs=1e-12)
    assert dm.qsd_variance_bound(fam, 0.1, maxvar, heuristic=False).value == pytest.approx(0.01 * 256 / 15)


@pytest.mark.xfail(strict=True, reason="tau^2 / maxvar is 0.17 at tau = 0.1; the ratio reaches 1 only for tau >= 0.242")
def test_qsd_bound_degree2_n4_at_least_one():
    fam, maxvar = _degree2_n4_pauli_max()
    assert dm.qsd_variance_bound(fam, 0.1, maxvar, heuristic=False).value >= 1


# -- correlations and QAC --------------------------------------------------

def test_correlation_structures():
    for n in range(1, 6):
        G = dm.correlation_matrix(en.coset_ensemble(n), np.eye(2**n) / 2**n).matrix
        assert np.allclose(G, np.eye(G.shape[0]), atol=1e-9)
    for n in (1, 2, 3):
        G = dm.correlation_matrix(en.shadow_ensemble(n, 0.1), np.eye(2**n) / 2**n).matrix
        assert np.allclose(G, 0.09 * np.eye(G.shape[0]), atol=1e-9)


def test_avg_correlation_values():
    cos = en.coset_ensemble(3)
    sigma = np.eye(8) / 8
    for size in (1, 3, 7):
        assert dm.avg_correlation(cos.states[:size], sigma) == pytest.approx(1 / size)
    sh = en.shadow_ensemble(2, 0.1)
    assert dm.avg_correlation(sh.states[:5], np.eye(4) / 4) == pytest.approx(0.09 / 5)
    rho = en.shadow_state(1, "X", 0.2)
    g = dm.correlation_matrix([rho], np.eye(2) / 2).matrix[0, 0]
    assert dm.avg_correlation([rho], np.eye(2) / 2) == pytest.approx(abs(g))


def test_qac_coset_example():
    cos = en.coset_ensemble(3)
    sigma = np.eye(8) / 8
    a = dm.qac_bound(cos, sigma, 0.3, method="closed")
    b = dm.qac_bound(cos, sigma, 0.3, method="enumerate")
    assert a.value == pytest.approx(7 / 3) and b.value == pytest.approx(7 / 3)
    assert a.largest_subset == b.largest_subset == 3


def test_qac_shadow_trivial_and_empty_cover():
    r = dm.qac_bound(en.shadow_ensemble(2, 0.1), np.eye(4) / 4, 0.005)
    assert r.value == pytest.approx(1.0) and r.trivial
    r = dm.qac_bound(en.coset_ensemble(2), np.eye(4) / 4, 1.5)
    assert r.empty_cover and r.value == pytest.approx(3)


def test_qac_equality_band():
    # gamma equal to tau is not admissible
    cos = en.coset_ensemble(2)
    r = dm.qac_bound(cos, np.eye(4) / 4, 0.5, method="enumerate")
    assert r.largest_subset == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.floats(0.01, 1.2), st.integers(1, 12))
def test_qac_closed_matches_enumeration(n, tau, size):
    ens_ = en.shadow_ensemble(2, 0.1) if n == 3 else en.coset_ensemble(n + 1)
    states = ens_.states[: min(size, len(ens_))]
    sigma = np.eye(ens_.dim) / ens_.dim
    if n == 3:
        tau = tau * 0.1
    a = dm.qac_bound(states, sigma, tau, method="closed")
    b = dm.qac_bound(states, sigma, tau, method="enumerate")
    assert a.value == pytest.approx(b.value, abs=1e-12)
    assert a.empty_cover == b.empty_cover


def test_qac_unsupported_structure(rng):
    states = en.degree2_ensemble(2).states
    with pytest.raises(dm.UnsupportedStructure):
        dm.qac_bound(states, np.eye(8) / 8, 0.1, method="closed")
    with pytest.raises(dm.UnsupportedStructure):
        dm.qac_bound(en.shadow_ensemble(2, 0.1), np.eye(4) / 4, 0.1, subset_limit=12, method="enumerate")


# -- designs and Haar concentration ----------------------------------------

def test_haar_variance_exact_values(rng):
    assert dm.haar_variance_exact(np.eye(4), 2) == pytest.approx(0, abs=1e-15)
    assert dm.haar_variance_exact(pauli_matrix("Z"), 1) == pytest.approx(1 / 3)
    for m in (1, 2, 3):
        P = pauli_matrix("X" * m)
        assert dm.haar_variance_exact(P, m) == pytest.approx(2**m / (4**m + 2**m))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_haar_variance_monte_carlo(m, rng):
    from qsqlab.experiments import haar_variance_monte_carlo
    M = random_sign_observable(2**m, rng)
    mc, se = haar_variance_monte_carlo(M, m, 50000, rng)
    assert abs(mc - dm.haar_variance_exact(M, m)) <= 3 * se


def test_design_check_cases():
    d1, d2 = dm.design_check(en.stabilizer_ensemble(1))
    assert d1 < 1e-9 and d2 < 1e-9
    single = en.Ensemble("zero", [0], [np.array([1, 0])])
    assert dm.design_check(single)[0] == pytest.approx(0.5)
    assert dm.design_check(en.degree2_ensemble(3, "phase"))[1] > 1e-6


def test_levy_bound_value():
    assert dm.levy_bound(8, 0.2) == pytest.approx(2 * math.exp(-512 * 0.04 / (36 * math.pi**3)))
    assert dm.levy_bound(8, 0.2) > 1


def test_purity_tail(rng):
    Z = pauli_matrix("Z" + "I" * 7)
    res = dm.purity_tail_experiment(8, Z, 0.2, 10**4, rng)
    assert res.chebyshev == pytest.approx((2**8 / (4**8 + 2**8)) / 0.04)
    assert res.within_chebyshev and res.within_levy
    assert dm.purity_tail_experiment(3, pauli_matrix("ZZZ"), 2.0, 1000, rng).tail == 0
    with pytest.raises(ValueError):
        dm.purity_tail_experiment(3, pauli_matrix("ZZZ"), 0.2, 10, rng)


def test_purity_tail_non_increasing(rng):
    tails = []
    for m in (4, 6, 8, 10):
        M = pauli_matrix("Z" + "I" * (m - 1))
        tails.append(dm.purity_tail_experiment(m, M, 0.1, 10**4, rng).tail)
    assert all(a >= b for a, b in zip(tails, tails[1:]))


def test_purity_tail_dense_path_agrees(rng):
    M = pauli_matrix("XZ")
    res = dm.purity_tail_experiment(2, M, 0.3, 5000, rng)
    assert res.within_chebyshev


# -- moments ---------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_moment_identities_except_third(n):
    recs = {r["identity"]: r["max_error"] for r in dm.moment_identities(n)}
    assert len(recs) == 8
    bad = "E[|phi> ⊗ |phi><phi|]"
    for name, err in recs.items():
        if name != bad:
            assert err <= 1e-9, name
    assert recs[bad] > 1e-3


def test_bound_report_to_dict():
    d = dm.qsd_variance_bound(None, 0.1, 0.01).to_dict()
    assert d["name"] == "qsd_variance" and d["value"] == pytest.approx(1.0)
