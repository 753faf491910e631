import math

import numpy as np
import pytest

from qsqlab import ensembles as en
from qsqlab import oracle as orc
from qsqlab.learners import fourier_query, walsh_coefficients
from qsqlab.qcore import gf2
from qsqlab.qcore.states import plus_state, projector


def test_identity_query_is_one():
    o = orc.QstatOracle(plus_state(2), 0.1)
    assert o.qstat(np.eye(4)) == pytest.approx(1)
    assert o.queries == 1


def test_norm_violation_is_rejected_and_not_counted():
    o = orc.QstatOracle(plus_state(1), 0.1)
    with pytest.raises(orc.NormViolation):
        o.qstat(2 * np.eye(2))
    with pytest.raises(orc.NormViolation):
        o.qstat(np.array([[0, 1], [0, 0]]))
    assert o.queries == 0


def test_adversarial_reference():
    rho = en.quadratic_example_state(np.array([[1, 1], [0, 1]]))
    M = projector(rho)
    o = orc.QstatOracle(rho, 0.3, orc.AdversarialReference(rho))
    assert o.qstat(M) == pytest.approx(1)
    # gap 1 - 2^-n exceeds tau so the truth is forced out
    o = orc.QstatOracle(rho, 0.3, orc.AdversarialReference(np.eye(8) / 8))
    assert o.qstat(M) == pytest.approx(1)
    assert o.qstat(np.diag([1, 0, 0, 0, 0, 0, 0, 0])) == pytest.approx(1 / 8)


def test_interval_noise_stays_within_tau(rng):
    psi = plus_state(3)
    o = orc.QstatOracle(psi, 0.05, orc.IntervalNoise(rng))
    Z = np.diag([1, -1] * 4).astype(complex)
    vals = [o.qstat(Z) for _ in range(200)]
    assert max(abs(v) for v in vals) <= 0.05
    assert len(o.ledger()["transcript"]) == 200


def test_stat_queries():
    f = np.array([0, 1, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    o = orc.QstatOracle(en.function_state(f), 0.01)
    assert o.stat(np.ones(16)) == pytest.approx(1)
    coeffs = walsh_coefficients(f)
    for S in range(8):
        assert o.stat(fourier_query(3, gf2.index_to_bits(S, 3))) == pytest.approx(coeffs[S], abs=0.01)
    T = np.zeros(16)
    T[2 * np.arange(4)] = 1
    assert o.stat(T) == pytest.approx(np.mean(f[:4] == 0) / 2, abs=0.01)
    with pytest.raises(ValueError):
        orc.StatQuery([2.0])


def test_soundness_violation_is_detected():
    class Liar:
        name = "liar"

        def respond(self, M, truth, tau):
            return truth + 2 * tau

        def describe(self):
            return {"name": self.name}

    before = dict(orc.SOUNDNESS)
    o = orc.QstatOracle(plus_state(1), 0.1, Liar())
    with pytest.raises(AssertionError):
        o.qstat(np.eye(2))
    # keep the global tally clean for the run-wide soundness check
    with orc._SOUNDNESS_LOCK:
        assert orc.SOUNDNESS["violations"] == before["violations"] + 1
        orc.SOUNDNESS["violations"] -= 1


def test_ledger_json_is_deterministic():
    a = orc.QstatOracle(plus_state(1), 0.1)
    b = orc.QstatOracle(plus_state(1), 0.1)
    for o in (a, b):
        o.qstat(np.diag([1, -1]))
    assert a.ledger_json() == b.ledger_json()
    assert len(a.ledger()["transcript"][0]["hash"]) == 64


def test_measure_sample(rng):
    assert orc.measure_sample(np.eye(8)[0], rng).tolist() == [0, 0, 0]
    ones = np.mean([orc.measure_sample(plus_state(1), rng)[0] for _ in range(10**4)])
    assert abs(ones - 0.5) <= 0.02
    f = np.array([1, 0, 0, 1], dtype=np.uint8)
    for _ in range(200):
        x0, x1, b = orc.measure_sample(en.function_state(f), rng)
        assert b == f[2 * x0 + x1]


def test_copy_sampler_budget(rng):
    s = orc.CopySampler(plus_state(1), rng, budget=2)
    s.draw()
    s.draw()
    assert s.remaining == 0
    with pytest.raises(orc.SamplerExhausted):
        s.draw()
    mixed = orc.CopySampler(np.eye(2) / 2, rng)
    assert np.linalg.norm(mixed.draw()) == pytest.approx(1)


def test_make_policy():
    assert orc.make_policy("exact").name == "exact"
    with pytest.raises(ValueError):
        orc.make_policy("adversarial")
    with pytest.raises(ValueError):
        orc.make_policy("bogus")
    with pytest.raises(ValueError):
        orc.QstatOracle(plus_state(1), 0.0)
    assert math.isclose(orc.make_policy("noise").respond(None, 0.0, 0.0), 0.0)
