"""Learning algorithms and the learning-to-deciding reduction.

Sample-based learners draw copies from a ``CopySampler``; QSQ learners talk
to a ``QstatOracle``.  Each learner returns a ``LearnerReport`` whose counts
come straight from the sampler tally or the oracle ledger.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import ensembles as ens
from .oracle import CopySampler, QstatOracle, SamplerExhausted
from .qcore import gf2
from .qcore.paulis import pauli_labels, pauli_matrix
from .qcore.states import (
    embed_operator,
    partial_trace,
    positive_part_projector,
    to_density,
    trace_distance,
    walsh_hadamard,
)


class PreconditionError(ValueError):
    """Inputs violate a learner's stated precondition; the learner refuses to run."""


class NeedMoreSamples(ValueError):
    """The collected samples do not yet determine the answer."""


@dataclass
class LearnerReport:
    recovered: object
    success: bool
    samples_used: int = 0
    qstat_queries: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        rec = self.recovered
        if isinstance(rec, np.ndarray):
            rec = rec.tolist()
        elif isinstance(rec, (set, frozenset, tuple)):
            rec = sorted(rec)
        return {
            "recovered": rec,
            "success": bool(self.success),
            "samples_used": int(self.samples_used),
            "qstat_queries": int(self.qstat_queries),
        }


def _measure_index(vec, rng) -> int:
    p = np.abs(vec) ** 2
    return int(rng.choice(p.size, p=p / p.sum()))


# --------------------------------------------------------------------------
# Bell sampling for degree-2 phase states
# --------------------------------------------------------------------------

def bell_round(sampler, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One two-copy round: returns (y, z) with z = (A + A^T) y for phase states.

    Simulates CNOTs from copy 1 onto copy 2, measures copy 2 to get y, then
    Hadamard-transforms copy 1 and measures it to get z.
    """
    a = sampler.draw()
    b = sampler.draw()
    d = a.size
    n = d.bit_length() - 1
    x = np.arange(d)
    # after CNOTs the joint amplitude is T[x, y] = a(x) b(x xor y)
    T = a[:, None] * b[x[:, None] ^ x[None, :]]
    col = np.sum(np.abs(T) ** 2, axis=0)
    y = int(rng.choice(d, p=col / col.sum()))
    post = T[:, y] / math.sqrt(col[y])
    z = _measure_index(walsh_hadamard(post), rng)
    return gf2.index_to_bits(y, n), gf2.index_to_bits(z, n)


def _diagonal_round(copy, B, rng) -> np.ndarray:
    """Strip the off-diagonal monomials of a phase state and read the diagonal."""
    d = copy.size
    n = d.bit_length() - 1
    X = gf2.all_bitstrings(n).astype(np.int64)
    phase = np.zeros(d, dtype=np.int64)
    for i, j in zip(*np.nonzero(np.triu(B, 1))):
        phase ^= X[:, i] & X[:, j]
    corrected = copy * (1 - 2 * phase)
    return gf2.index_to_bits(_measure_index(walsh_hadamard(corrected), rng), n)


def learn_quadratic(sampler, rng: np.random.Generator, budget: int | None = None) -> LearnerReport:
    """Recover a degree-2 form from copies of its phase state.

    ``budget`` counts two-copy rounds (default 3n + 4); the learner consumes at
    most 2 * budget copies in total, one of which is kept for the diagonal step.
    """
    n = sampler.num_qubits
    if budget is None:
        budget = 3 * n + 4
    if budget < 1:
        raise PreconditionError("budget must allow at least one round")
    max_copies = 2 * budget
    start = sampler.count
    ys, zs = [], []
    try:
        if n > 1:
            while not ys or gf2.rank(np.array(ys)) < n:
                if sampler.count - start + 3 > max_copies:
                    raise SamplerExhausted("round budget exhausted")
                y, z = bell_round(sampler, rng)
                ys.append(y)
                zs.append(z)
        B = np.zeros((n, n), dtype=np.uint8)
        if n > 1:
            Z = np.array(zs)
            for i in range(n):
                sol = gf2.f2_solve([(y, Z[t, i]) for t, y in enumerate(ys)])
                B[i] = sol.solution
        if sampler.count - start + 1 > max_copies:
            raise SamplerExhausted("no copy left for the diagonal step")
        diag = _diagonal_round(sampler.draw(), B, rng)
    except (SamplerExhausted, gf2.InfeasibleSystem) as exc:
        return LearnerReport(None, False, sampler.count - start, 0, {"reason": str(exc), "rounds": len(ys)})
    A = np.triu(B, 1).astype(np.uint8)
    A[np.diag_indices(n)] = diag
    return LearnerReport(A, True, sampler.count - start, 0, {"rounds": len(ys)})


# --------------------------------------------------------------------------
# Classification noise
# --------------------------------------------------------------------------

def denoise_probability(eta: float) -> float:
    return 0.5 * (1 - 2 * math.sqrt(eta * (1 - eta)))


def denoise(copy, rng: np.random.Generator):
    """Hadamard the label qubit of a noisy example and post-select on 1.

    Returns the n-qubit post-measurement state, or None on outcome 0.
    """
    v = np.asarray(copy, dtype=complex).reshape(-1, 2)
    one = (v[:, 0] - v[:, 1]) / math.sqrt(2)
    p1 = float(np.sum(np.abs(one) ** 2))
    if p1 <= 1e-15 or rng.random() >= p1:
        return None
    return one / math.sqrt(p1)


class DenoisedSampler:
    """Phase-state copies distilled from a noisy example sampler."""

    def __init__(self, noisy: CopySampler, rng: np.random.Generator, max_attempts: int = 10**6):
        self.noisy = noisy
        self.rng = rng
        self.count = 0
        self.attempts = 0
        self.max_attempts = max_attempts

    @property
    def num_qubits(self) -> int:
        return self.noisy.num_qubits - 1

    def draw(self) -> np.ndarray:
        while True:
            if self.attempts >= self.max_attempts:
                raise SamplerExhausted("denoising never succeeded")
            self.attempts += 1
            out = denoise(self.noisy.draw(), self.rng)
            if out is not None:
                self.count += 1
                return out


def noisy_budget(n: int, eta: float) -> int:
    return math.ceil(40 * n / (1 - 2 * eta) ** 2)


def learn_quadratic_noisy(noisy: CopySampler, eta: float, rng: np.random.Generator,
                          budget: int | None = None) -> LearnerReport:
    """Denoise then Bell-sample; ``budget`` caps noisy copies (default 40n/(1-2eta)^2)."""
    if not 0 <= eta < 0.5:
        raise PreconditionError("noise rate must lie in [0, 1/2)")
    n = noisy.num_qubits - 1
    if budget is None:
        budget = noisy_budget(n, eta)
    start = noisy.count
    saved = noisy.budget
    noisy.budget = start + budget if saved is None else min(saved, start + budget)
    try:
        clean = DenoisedSampler(noisy, rng)
        rep = learn_quadratic(clean, rng, budget=10**9)
    finally:
        noisy.budget = saved
    rep.samples_used = noisy.count - start
    rep.details["phase_copies"] = clean.count
    return rep


# --------------------------------------------------------------------------
# QSQ learners
# --------------------------------------------------------------------------

def _check_tau(oracle: QstatOracle, limit: float, what: str) -> None:
    if oracle.tau > limit * (1 + 1e-12):
        raise PreconditionError(f"tau={oracle.tau} exceeds {limit:.6g} required for {what}")


def _count_from(r: float, scale: int) -> int:
    # responses sit within half a unit of an integer count; ties round up
    return int(math.floor(r * scale + 0.5))


def learn_coupon(oracle: QstatOracle, n: int, k: int) -> LearnerReport:
    """Recover the hidden k-subset of [n] by binary search with interval projectors."""
    _check_tau(oracle, 1 / (2 * k), "coupon learning")
    start = oracle.queries
    found: list[int] = []

    def split(lo: int, hi: int, c: int) -> None:
        if c <= 0:
            return
        size = hi - lo + 1
        if c >= size:
            found.extend(range(lo, hi + 1))
            return
        mid = (lo + hi) // 2
        r = oracle.qstat(ens.interval_projector(n, lo, mid))
        left = min(max(_count_from(r, k), 0), c, mid - lo + 1)
        split(lo, mid, left)
        split(mid + 1, hi, c - left)

    split(1, n, k)
    S = sorted(found)
    return LearnerReport(S, len(S) == k, 0, oracle.queries - start)


def coupon_query_bound(n: int, k: int) -> int:
    return k * math.ceil(math.log2(n)) + k if n > 1 else k


def learn_codeword(oracle: QstatOracle, G) -> LearnerReport:
    """Recover x from (1/sqrt n) sum_i |i>|(Gx)_i> with k row queries."""
    G = gf2.as_bit_matrix(G)
    n, k = G.shape
    if gf2.rank(G) != k:
        raise PreconditionError("generator matrix is rank deficient")
    _check_tau(oracle, 1 / (2 * n), "codeword learning")
    start = oracle.queries
    rows = gf2.independent_rows(G)
    constraints = []
    for j in rows:
        r = oracle.qstat(ens.codeword_row_projector(n, j))
        bit = 0 if r * n >= 0.5 else 1
        constraints.append((G[j], bit))
    sol = gf2.f2_solve(constraints)
    return LearnerReport(sol.solution, sol.unique, 0, oracle.queries - start)


def fourier_query(n: int, S) -> np.ndarray:
    """Diagonal table of phi(x, b) = (1 - 2b)(-1)^{S.x} on n + 1 qubits."""
    S = gf2.as_bits(S).astype(np.int64)
    X = gf2.all_bitstrings(n).astype(np.int64)
    chi = 1 - 2 * ((X @ S) & 1)
    return np.stack([chi, -chi], axis=1).reshape(-1).astype(float)


def walsh_coefficients(f) -> np.ndarray:
    """Fourier coefficients of (-1)^f, indexed by S in index order."""
    f = np.asarray(f, dtype=float)
    n = f.size.bit_length() - 1
    return (walsh_hadamard(1 - 2 * f) / 2 ** (n / 2)).real


def learn_fourier_sparse(oracle: QstatOracle, n: int, k: int, eps: float,
                         estimation_oracle: QstatOracle | None = None) -> LearnerReport:
    """Learn a k-Fourier-sparse Boolean function from example-state statistics.

    Support finding scans all 2^n characters with ``oracle`` (tau <= 1/(2k));
    the surviving coefficients are re-estimated with ``estimation_oracle``
    (tau <= eps/(2k)), which defaults to ``oracle``.
    """
    est = estimation_oracle if estimation_oracle is not None else oracle
    _check_tau(oracle, 1 / (2 * k), "support finding")
    _check_tau(est, eps / (2 * k), "coefficient estimation")
    q0, e0 = oracle.queries, est.queries
    chars = gf2.all_bitstrings(n)
    support = []
    for S in chars:
        r = oracle.stat(fourier_query(n, S))
        if abs(r) * k >= 0.5:
            support.append(S)
    if len(support) > k:
        return LearnerReport(None, False, 0, oracle.queries - q0, {"support_size": len(support)})
    alphas = [est.stat(fourier_query(n, S)) for S in support]
    queries = oracle.queries - q0
    if est is not oracle:
        queries += est.queries - e0
    X = chars.astype(np.int64)
    total = np.zeros(2**n)
    for S, a in zip(support, alphas):
        total += a * (1 - 2 * ((X @ S.astype(np.int64)) & 1))
    g = (total < 0).astype(np.uint8)
    details = {"support": [gf2.bits_to_str(S) for S in support], "coefficients": alphas}
    return LearnerReport(g, True, 0, queries, details)


def local_tomography(oracle: QstatOracle, D: int) -> LearnerReport:
    """Estimate every D-qubit marginal from its 4^D - 1 non-identity Pauli expectations."""
    m = oracle.dim.bit_length() - 1
    if not 1 <= D <= m:
        raise PreconditionError(f"patch size D={D} must lie in [1, {m}]")
    start = oracle.queries
    labels = pauli_labels(D)
    patches = []
    for qubits in itertools.combinations(range(m), D):
        rho = np.eye(2**D, dtype=complex)
        for lab in labels:
            P = pauli_matrix(lab)
            alpha = oracle.qstat(embed_operator(P, qubits, m))
            rho = rho + alpha * P
        patches.append({"qubits": qubits, "rho": rho / 2**D})
    return LearnerReport(patches, True, 0, oracle.queries - start,
                         {"per_patch": len(labels), "bound": oracle.tau * 2 ** (D - 1)})


def patch_errors(report: LearnerReport, state) -> list[float]:
    """Trace distance between each estimated patch and the exact marginal."""
    return [trace_distance(partial_trace(state, p["qubits"]), p["rho"]) for p in report.recovered]


# --------------------------------------------------------------------------
# Hypothesis selection
# --------------------------------------------------------------------------

def scheffe_sample_size(num_candidates: int, eps: float) -> int:
    return math.ceil(10 * math.log(max(num_candidates, 2)) / eps**2)


@dataclass
class Selection:
    index: int
    scores: np.ndarray
    eps_effective: float


def scheffe_select(samples, candidates, eps: float | None = None, rng=None) -> Selection:
    """Minimum-distance selection over the Scheffé sets {q_i > q_j}.

    ``samples`` are outcome indices; ``candidates`` is a (m, d) array of
    distributions.  The winner minimises max_j |q_i(A_ij) - p_hat(A_ij)|,
    which gives d_TV(p, q*) <= 3 opt + eps.  Ties go to the lowest index.
    """
    Q = np.atleast_2d(np.asarray(candidates, dtype=float))
    if Q.shape[0] == 0 or Q.size == 0:
        raise ValueError("no candidates to select from")
    samples = np.asarray(samples, dtype=np.int64).reshape(-1)
    N = samples.size
    eps_eff = math.sqrt(10 * math.log(max(Q.shape[0], 2)) / N) if N else float("inf")
    if Q.shape[0] == 1:
        return Selection(0, np.zeros(1), eps_eff)
    p_hat = np.bincount(samples, minlength=Q.shape[1]).astype(float) / max(N, 1)
    scores = np.empty(Q.shape[0])
    for i in range(Q.shape[0]):
        A = Q[i][None, :] > Q
        A[i] = False
        gap = np.abs(A @ Q[i] - A @ p_hat)
        scores[i] = gap.max()
    best = int(np.flatnonzero(scores <= scores.min() + 1e-15)[0])
    return Selection(best, scores, eps_eff)


def scheffe_select_stat(oracle: QstatOracle, candidates) -> Selection:
    """Minimum-distance selection fed by Stat queries instead of samples.

    Each Scheffé set {q_i > q_j} is queried as an indicator observable, so
    the selection only ever sees tau-approximate expectation values.
    """
    Q = np.atleast_2d(np.asarray(candidates, dtype=float))
    if Q.shape[1] != oracle.dim:
        raise ValueError("candidates and oracle live on different outcome sets")
    if Q.shape[0] == 1:
        return Selection(0, np.zeros(1), oracle.tau)
    cache: dict = {}
    scores = np.empty(Q.shape[0])
    for i in range(Q.shape[0]):
        worst = 0.0
        for j in range(Q.shape[0]):
            if i == j:
                continue
            A = Q[i] > Q[j]
            key = A.tobytes()
            if key not in cache:
                cache[key] = oracle.stat(A.astype(float))
            worst = max(worst, abs(float(Q[i] @ A) - cache[key]))
        scores[i] = worst
    best = int(np.flatnonzero(scores <= scores.min() + 1e-15)[0])
    return Selection(best, scores, oracle.tau)


# --------------------------------------------------------------------------
# Simon / abelian hidden subgroup
# --------------------------------------------------------------------------

def fourier_sample_coset(n: int, s, rng: np.random.Generator) -> np.ndarray:
    """Hadamard-transform a random coset superposition of {0, s} and measure."""
    s = gf2.as_bits(s)
    if s.size != n or not s.any():
        raise ValueError("s must be a nonzero length-n bit vector")
    si = gf2.bits_to_index(s)
    x = int(rng.integers(2**n))
    v = np.zeros(2**n, dtype=complex)
    v[x] = v[x ^ si] = 1 / math.sqrt(2)
    return gf2.index_to_bits(_measure_index(walsh_hadamard(v), rng), n)


def solve_simon(ys, n: int) -> np.ndarray:
    """The unique nonzero s orthogonal to every sample."""
    ys = [gf2.as_bits(y) for y in ys]
    M = np.array(ys, dtype=np.uint8).reshape(len(ys), n)
    null = gf2.nullspace(M, n)
    if null.shape[0] == 1:
        return null[0]
    if null.shape[0] == 0:
        raise ValueError("samples are inconsistent with any nonzero s")
    raise NeedMoreSamples(f"samples span dimension {n - null.shape[0]}, need {n - 1}")


def learn_simon(n: int, s, rng: np.random.Generator, max_samples: int | None = None) -> LearnerReport:
    if max_samples is None:
        max_samples = 3 * n
    ys = []
    while len(ys) < max_samples:
        ys.append(fourier_sample_coset(n, s, rng))
        try:
            found = solve_simon(ys, n)
        except NeedMoreSamples:
            continue
        return LearnerReport(found, bool(np.array_equal(found, gf2.as_bits(s))), len(ys), 0, {"ys": ys})
    return LearnerReport(None, False, len(ys), 0, {"ys": ys})


# --------------------------------------------------------------------------
# Learning to deciding
# --------------------------------------------------------------------------

class Decision(enum.Enum):
    IN_CLASS = "InClass"
    IS_SIGMA = "IsSigma"


@dataclass
class DecisionReport:
    decision: Decision
    qstat_queries: int
    samples_used: int
    nearest: int | None


def learner_to_decider(learner, sigma, tau: float, eps: float, oracle: QstatOracle,
                       concept_states) -> DecisionReport:
    """Decide "hidden in C" versus "hidden = sigma" using a learner plus one query.

    ``learner(oracle)`` returns a hypothesis state (vector or matrix) or None,
    and may report (hypothesis, samples_used).  ``concept_states`` lists the
    members of C.
    """
    sigma = to_density(sigma)
    gap = min(trace_distance(to_density(c), sigma) for c in concept_states)
    if gap <= 2 * (tau + eps):
        raise PreconditionError(f"min distance {gap:.4g} to sigma must exceed 2(tau+eps)={2 * (tau + eps):.4g}")
    q0 = oracle.queries
    out = learner(oracle)
    samples = 0
    if isinstance(out, tuple):
        out, samples = out
    if out is None:
        return DecisionReport(Decision.IS_SIGMA, oracle.queries - q0, samples, None)
    h = np.asarray(out, dtype=complex)
    if h.shape[0] != sigma.shape[0]:
        return DecisionReport(Decision.IS_SIGMA, oracle.queries - q0, samples, None)
    dists = [trace_distance(h, c) for c in concept_states]
    j = int(np.argmin(dists))
    if dists[j] > eps:
        return DecisionReport(Decision.IS_SIGMA, oracle.queries - q0, samples, None)
    Pi = positive_part_projector(to_density(concept_states[j]) - sigma)
    R = oracle.qstat(Pi)
    base = float(np.einsum("ij,ji->", Pi, sigma).real)
    decision = Decision.IS_SIGMA if abs(R - base) <= tau else Decision.IN_CLASS
    return DecisionReport(decision, oracle.queries - q0, samples, j)


def quadratic_sample_learner(n: int, rng: np.random.Generator, budget: int | None = None):
    """Learner for learner_to_decider: Bell-samples copies of the oracle's hidden state.

    Copies of psi_A are turned into phase-state copies by the eta = 0 denoising
    step; the hypothesis is the example state of the recovered form.
    """

    def run(oracle: QstatOracle):
        sampler = CopySampler(oracle.hidden, rng, budget=budget)
        rep = learn_quadratic_noisy(sampler, 0.0, rng)
        if not rep.success:
            return None, rep.samples_used
        return ens.quadratic_example_state(rep.recovered), rep.samples_used

    return run
