"""Qstat / Stat oracles, response policies and copy samplers.

Every response an oracle emits is checked against the tau promise and the
outcome is tallied in ``SOUNDNESS`` so a whole test run can report that no
response ever left the tolerance window.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .qcore.states import ATOL, expectation, operator_norm, to_density

# process-wide soundness tally: responses checked and promise violations
SOUNDNESS = {"checked": 0, "violations": 0}
_SOUNDNESS_LOCK = threading.Lock()


def reset_soundness() -> None:
    with _SOUNDNESS_LOCK:
        SOUNDNESS["checked"] = 0
        SOUNDNESS["violations"] = 0


class NormViolation(ValueError):
    """Observable with operator norm above 1; the query is rejected."""


class SamplerExhausted(RuntimeError):
    """A copy sampler ran past its budget."""


# --------------------------------------------------------------------------
# Response policies
# --------------------------------------------------------------------------

class Exact:
    name = "exact"

    def respond(self, M, truth: float, tau: float) -> float:
        return truth

    def describe(self) -> dict:
        return {"name": self.name}


class IntervalNoise:
    """truth + uniform(-tau, tau)."""

    name = "interval-noise"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def respond(self, M, truth: float, tau: float) -> float:
        return truth + float(self.rng.uniform(-tau, tau))

    def describe(self) -> dict:
        return {"name": self.name}


class AdversarialReference:
    """Answer as if the hidden state were sigma whenever that stays within tau."""

    name = "adversarial-reference"

    def __init__(self, sigma):
        self.sigma = to_density(sigma)

    def respond(self, M, truth: float, tau: float) -> float:
        fake = expectation(M, self.sigma)
        if abs(fake - truth) <= tau:
            return fake
        return truth

    def describe(self) -> dict:
        return {"name": self.name, "sigma_dim": int(self.sigma.shape[0])}


def make_policy(name: str, rng=None, sigma=None):
    if name == "exact":
        return Exact()
    if name in ("noise", "interval-noise"):
        return IntervalNoise(rng if rng is not None else np.random.default_rng(0))
    if name in ("adversarial", "adversarial-reference"):
        if sigma is None:
            raise ValueError("adversarial policy needs a reference state")
        return AdversarialReference(sigma)
    raise ValueError(f"unknown policy {name!r}")


# --------------------------------------------------------------------------
# Oracle
# --------------------------------------------------------------------------

def observable_hash(M) -> str:
    M = np.ascontiguousarray(np.asarray(M, dtype=complex))
    h = hashlib.sha256()
    h.update(str(M.shape).encode())
    h.update(M.tobytes())
    return h.hexdigest()


@dataclass
class QstatOracle:
    """Hidden state plus tolerance plus response policy plus query ledger."""

    hidden: np.ndarray
    tau: float
    policy: object = field(default_factory=Exact)
    transcript: list = field(default_factory=list)

    def __post_init__(self):
        self.hidden = np.asarray(self.hidden, dtype=complex)
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")

    @property
    def dim(self) -> int:
        return self.hidden.shape[0]

    @property
    def queries(self) -> int:
        return len(self.transcript)

    def truth(self, M) -> float:
        return expectation(M, self.hidden)

    def qstat(self, M) -> float:
        M = np.asarray(M, dtype=complex)
        if M.shape != (self.dim, self.dim):
            raise ValueError(f"observable shape {M.shape} does not match dimension {self.dim}")
        if not np.allclose(M, M.conj().T, atol=ATOL, rtol=0):
            raise NormViolation("observable is not Hermitian")
        norm = operator_norm(M)
        if norm > 1 + ATOL:
            raise NormViolation(f"operator norm {norm:.12g} exceeds 1")
        truth = self.truth(M)
        r = float(self.policy.respond(M, truth, self.tau))
        bad = abs(r - truth) > self.tau + 1e-12
        with _SOUNDNESS_LOCK:
            SOUNDNESS["checked"] += 1
            SOUNDNESS["violations"] += int(bad)
        if bad:
            raise AssertionError(f"oracle response {r} violates tau={self.tau} (truth {truth})")
        self.transcript.append((observable_hash(M), r))
        return r

    def stat(self, q) -> float:
        """Classical statistical query: phi is a table over computational basis states."""
        phi = q.phi if isinstance(q, StatQuery) else StatQuery(q).phi
        if phi.size != self.dim:
            raise ValueError(f"query table has {phi.size} entries, state dimension is {self.dim}")
        return self.qstat(np.diag(phi).astype(complex))

    def ledger(self) -> dict:
        return {
            "queries": self.queries,
            "tau": self.tau,
            "policy": self.policy.describe(),
            "transcript": [{"hash": h, "response": r} for h, r in self.transcript],
        }

    def ledger_json(self) -> str:
        return json.dumps(self.ledger(), sort_keys=True)


def qstat(oracle: QstatOracle, M) -> float:
    return oracle.qstat(M)


def stat(oracle: QstatOracle, q) -> float:
    return oracle.stat(q)


@dataclass(frozen=True)
class StatQuery:
    phi: np.ndarray

    def __init__(self, phi):
        phi = np.asarray(phi, dtype=float).reshape(-1)
        if np.any(np.abs(phi) > 1 + ATOL):
            raise ValueError("statistical query values must lie in [-1, 1]")
        object.__setattr__(self, "phi", phi)


# --------------------------------------------------------------------------
# Measurement and copies
# --------------------------------------------------------------------------

def sample_indices(state, rng: np.random.Generator, size: int | None = None):
    """Computational-basis outcomes (as integer indices) of a state."""
    state = np.asarray(state)
    if state.ndim == 1:
        p = np.abs(state) ** 2
    else:
        p = np.clip(np.diag(state).real, 0.0, None)
    p = p / p.sum()
    return rng.choice(p.size, size=size, p=p)


def measure_sample(state, rng: np.random.Generator) -> np.ndarray:
    """One computational-basis measurement, returned as a bit array (MSB first)."""
    state = np.asarray(state)
    m = int(state.shape[0]).bit_length() - 1
    if state.ndim == 2:
        state = sample_pure_component(state, rng)
    idx = int(sample_indices(state, rng))
    return np.array([(idx >> (m - 1 - i)) & 1 for i in range(m)], dtype=np.uint8)


def sample_pure_component(rho, rng: np.random.Generator) -> np.ndarray:
    """Eigenvector of rho drawn with probability equal to its eigenvalue."""
    ev, vecs = np.linalg.eigh(to_density(rho))
    p = np.clip(ev, 0.0, None)
    j = rng.choice(p.size, p=p / p.sum())
    return vecs[:, j].astype(complex)


class CopySampler:
    """Hands out copies of a hidden state, up to a budget.

    Density matrices are sampled as a random eigenvector, so each copy is a
    pure state drawn from the ensemble decomposition of rho.
    """

    def __init__(self, state, rng: np.random.Generator | None = None, budget: int | None = None):
        self.state = np.asarray(state, dtype=complex)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.budget = budget
        self.count = 0

    @property
    def dim(self) -> int:
        return self.state.shape[0]

    @property
    def num_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    @property
    def remaining(self) -> float:
        return float("inf") if self.budget is None else self.budget - self.count

    def draw(self) -> np.ndarray:
        if self.budget is not None and self.count >= self.budget:
            raise SamplerExhausted(f"copy budget of {self.budget} exhausted")
        self.count += 1
        if self.state.ndim == 2:
            return sample_pure_component(self.state, self.rng)
        return self.state.copy()
