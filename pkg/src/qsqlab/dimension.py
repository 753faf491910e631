"""Variance, average-correlation and design quantities behind the QSQ lower bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import Ensemble, haar_second_moment
from .qcore import gf2
from .qcore.paulis import pauli_labels, pauli_matrix
from .qcore.states import (
    ATOL,
    helstrom,
    random_sign_observable,
    to_density,
    trace_distance_schatten,
)


class UnsupportedStructure(ValueError):
    """No exact method applies to the given correlation structure."""


@dataclass
class BoundReport:
    name: str
    value: float
    params: dict = field(default_factory=dict)
    method: str = "variance"
    heuristic: bool = False
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "params": self.params,
            "method": self.method,
            "heuristic": self.heuristic,
            "flags": self.flags,
        }


# --------------------------------------------------------------------------
# Variance
# --------------------------------------------------------------------------

def variance_of(ensemble, M) -> float:
    """E[tr(M rho)^2] - E[tr(M rho)]^2 over the ensemble weights."""
    if not isinstance(ensemble, Ensemble):
        return float(ensemble.variance(M))
    v = ensemble.expectations(M)
    w = ensemble.weights
    return max(0.0, float(w @ (v * v) - (w @ v) ** 2))


def variance_direct(ensemble: Ensemble, M) -> float:
    """sum_i w_i (v_i - mean)^2, a second route to the same number."""
    v = ensemble.expectations(M)
    w = ensemble.weights
    return float(np.sum(w * (v - np.sum(w * v)) ** 2))


_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


class Degree2Family:
    """Uniform ensemble of degree-2 example states psi_A on n + 1 qubits.

    The variance of tr(M psi_A) is assembled from the exact first to fourth
    moments of the phase state phi_A, so no enumeration over A is needed.
    Writing psi_A = (|u>|+> + |phi_A>|->)/sqrt 2 with u = |+^n>,

        tr(M psi_A) = (t0 + t1 + t2 + t3) / 2,
        t1 = <phi|M_{--}|phi>,  t2 = <u|M_{+-}|phi>,  t3 = <phi|M_{-+}|u>,

    where M_{ab} = (I ⊗ <a|) M (I ⊗ |b>) and t0 does not depend on A.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.num_qubits = n + 1
        self.dim = 2 ** (n + 1)

    def blocks(self, M):
        d = 2**self.n
        M4 = np.asarray(M, dtype=complex).reshape(d, 2, d, 2)
        out = {}
        for a, va in (("+", _PLUS), ("-", _MINUS)):
            for b, vb in (("+", _PLUS), ("-", _MINUS)):
                out[a + b] = np.einsum("ipjq,p,q->ij", M4, va.conj(), vb)
        return out

    def _moments(self, M):
        M = np.asarray(M, dtype=complex)
        if M.shape != (self.dim, self.dim):
            raise ValueError(f"observable must be {self.dim}x{self.dim}")
        d = 2**self.n
        B = self.blocks(M)
        M1 = B["--"]
        u = np.full(d, 1 / math.sqrt(d))
        w = B["+-"].T @ u
        v = B["-+"] @ u
        lin = {2: w, 3: v}
        mean = {1: np.trace(M1) / d, 2: w[0] / math.sqrt(d), 3: v[0] / math.sqrt(d)}
        second = {}
        tr1 = np.trace(M1)
        second[1, 1] = (tr1**2 + np.sum(M1 * M1.T) + np.sum(M1 * M1) - 2 * np.sum(np.diag(M1) ** 2)) / d**2
        for i in (2, 3):
            for j in (2, 3):
                second[i, j] = lin[i] @ lin[j] / d
            a = lin[i]
            val = tr1 * a[0] + M1[:, 0] @ a + M1[0, :] @ a - 2 * M1[0, 0] * a[0]
            second[1, i] = second[i, 1] = val / d**1.5
        return mean, second

    def case_terms(self, M) -> dict:
        """Cov(t_i, t_j) for i, j in {1, 2, 3} (the terms of the variance sum, before the 1/4)."""
        mean, second = self._moments(M)
        return {(i, j): complex(second[i, j] - mean[i] * mean[j]) for i in (1, 2, 3) for j in (1, 2, 3)}

    def variance(self, M) -> float:
        cov = self.case_terms(M)
        return max(0.0, float(sum(cov.values()).real) / 4)

    def ensemble(self) -> Ensemble:
        from .ensembles import degree2_ensemble

        return degree2_ensemble(self.n, "example")

    def structured_observables(self, rng: np.random.Generator, count: int = 8) -> list:
        """Block observables K ⊗ |a><b| (+ h.c.) aimed at single terms of the variance sum."""
        d = 2**self.n
        u = np.full(d, 1 / math.sqrt(d))
        e0 = np.zeros(d)
        e0[0] = 1.0
        out = []
        mm = np.outer(_MINUS, _MINUS.conj())
        pm = np.outer(_PLUS, _MINUS.conj())
        out.append(("|0><0| x |-><-|", np.kron(np.outer(e0, e0), mm)))
        off = np.kron(np.outer(u, e0), pm)
        out.append(("|u><0| x |+><-| + h.c.", off + off.conj().T))
        tables = gf2.quad_form_tables(self.n)
        for _ in range(count):
            t = tables[int(rng.integers(len(tables)))]
            phi = (1 - 2 * t.astype(float)) / math.sqrt(d)
            out.append(("phi_B projector x |-><-|", np.kron(np.outer(phi, phi), mm)))
            off = np.kron(np.outer(u, phi), pm)
            out.append(("|u><phi_B| x |+><-| + h.c.", off + off.conj().T))
        return out


@dataclass
class ScanResult:
    value: float
    argmax: str
    candidates: int
    exhaustive_paulis: bool
    case_max: dict = field(default_factory=dict)


def max_variance_scan(ensemble, trials: int, rng: np.random.Generator,
                      exhaustive_paulis: bool | None = None) -> ScanResult:
    """Largest variance over Pauli strings, random +-1 observables and structured blocks.

    Returns a lower bound on the supremum over all observables of norm <= 1.
    Pauli strings are scanned exhaustively when there are at most 4^4 of them.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    m = ensemble.num_qubits
    if exhaustive_paulis is None:
        exhaustive_paulis = m <= 4
    if exhaustive_paulis:
        labels = pauli_labels(m)
    else:
        labels = ["".join(rng.choice(list("IXYZ"), size=m)) for _ in range(trials)]
        labels = [lab for lab in labels if set(lab) != {"I"}]
    cands = [(f"pauli {lab}", pauli_matrix(lab)) for lab in labels]
    for t in range(trials):
        cands.append((f"random sign observable {t}", random_sign_observable(2**m, rng)))
    if hasattr(ensemble, "structured_observables"):
        cands.extend(ensemble.structured_observables(rng))
    best, arg = -1.0, ""
    case_max: dict = {}
    track_cases = hasattr(ensemble, "case_terms")
    for desc, M in cands:
        val = variance_of(ensemble, M)
        if val > best:
            best, arg = val, desc
        if track_cases:
            for key, c in ensemble.case_terms(M).items():
                if key[0] <= key[1]:
                    case_max[key] = max(case_max.get(key, 0.0), abs(c))
    return ScanResult(best, arg, len(cands), exhaustive_paulis, case_max)


def qsd_variance_bound(ensemble, tau: float, maxvar: float, heuristic: bool = True) -> BoundReport:
    """tau^2 / maxvar; unbounded when maxvar is zero."""
    name = getattr(ensemble, "name", type(ensemble).__name__)
    params = {"tau": tau, "maxvar": maxvar, "ensemble": name}
    if maxvar < 0:
        raise ValueError("variance cannot be negative")
    if maxvar == 0:
        return BoundReport("qsd_variance", math.inf, params, "variance", heuristic, {"unbounded": True})
    return BoundReport("qsd_variance", tau**2 / maxvar, params, "variance", heuristic, {"unbounded": False})


# --------------------------------------------------------------------------
# Average correlation
# --------------------------------------------------------------------------

@dataclass
class CorrelationResult:
    matrix: np.ndarray
    condition_number: float


def _inv_sqrt(sigma):
    sigma = to_density(sigma)
    ev, vecs = np.linalg.eigh((sigma + sigma.conj().T) / 2)
    if ev.min() <= ATOL:
        raise ValueError("reference state is singular")
    return (vecs / np.sqrt(ev)) @ vecs.conj().T, float(ev.max() / ev.min())


def correlation_matrix(states, sigma) -> CorrelationResult:
    """g[i][j] = tr(rho_hat_i rho_hat_j sigma) with rho_hat = rho sigma^{-1} - I.

    Uses tr(rho_hat_i rho_hat_j sigma) = tr(rho_i sigma^{-1} rho_j) - 1.
    """
    if isinstance(states, Ensemble):
        states = states.states
    S, cond = _inv_sqrt(sigma)
    vecs = np.array([(S @ to_density(r)).reshape(-1) for r in states])
    G = (vecs.conj() @ vecs.T).real - 1.0
    return CorrelationResult(G, cond)


def avg_correlation(states, sigma) -> float:
    G = correlation_matrix(states, sigma).matrix
    return float(np.abs(G).sum() / G.shape[0] ** 2)


@dataclass
class QACResult:
    value: float
    kappa: float
    largest_subset: int
    method: str
    empty_cover: bool
    trivial: bool


def _admissible(gamma, tau) -> np.ndarray:
    # gamma > tau, with equality within relative 1e-9 counted as not admissible
    gamma = np.asarray(gamma, dtype=float)
    return gamma - tau > 1e-9 * np.maximum(np.abs(gamma), abs(tau))


def _closed_form_size(c: float, tau: float, size: int) -> int:
    s = math.floor(c / tau) if tau > 0 else size
    while s > 0 and not _admissible(c / s, tau):
        s -= 1
    while s + 1 <= size and _admissible(c / (s + 1), tau):
        s += 1
    return min(s, size)


def qac_bound(states, sigma, tau: float, subset_limit: int = 12, method: str = "auto") -> QACResult:
    """|C0| over the largest subset C' with gamma(C', sigma) > tau.

    ``method`` is "enumerate" (all nonempty subsets, |C0| <= subset_limit),
    "closed" (needs vanishing off-diagonal correlations and a shared diagonal)
    or "auto".  With no admissible subset the value is |C0| and the
    ``empty_cover`` flag is set.
    """
    G = correlation_matrix(states, sigma).matrix
    size = G.shape[0]
    absG = np.abs(G)
    diag = np.diag(G)
    off = absG - np.diag(np.diag(absG))
    structured = off.max(initial=0.0) <= 1e-9 and np.ptp(diag) <= 1e-9 * max(1.0, abs(diag[0]))
    if method == "auto":
        method = "closed" if structured else "enumerate"
    if method == "closed":
        if not structured:
            raise UnsupportedStructure("closed form needs zero off-diagonal correlations and equal diagonals")
        best = _closed_form_size(abs(float(diag[0])), tau, size)
    elif method == "enumerate":
        if size > subset_limit:
            raise UnsupportedStructure(f"{size} members exceed the enumeration limit {subset_limit}")
        masks = ((np.arange(1, 2**size)[:, None] >> np.arange(size)[None, :]) & 1).astype(float)
        sizes = masks.sum(axis=1)
        gamma = np.einsum("ki,ij,kj->k", masks, absG, masks) / sizes**2
        ok = _admissible(gamma, tau)
        best = int(sizes[ok].max()) if ok.any() else 0
    else:
        raise ValueError(f"unknown method {method!r}")
    empty = best == 0
    value = size / max(best, 1)
    kappa = max(best, 1) / size
    return QACResult(float(value), float(kappa), best, method, empty, value <= 1.0)


# --------------------------------------------------------------------------
# Designs and Haar concentration
# --------------------------------------------------------------------------

def haar_variance_exact(M, m: int) -> float:
    """Var over Haar psi of tr(M psi), from E[psi ⊗ psi] = (I + SWAP)/(4^m + 2^m)."""
    M = np.asarray(M, dtype=complex)
    d = 2**m
    if M.shape != (d, d):
        raise ValueError("observable does not act on m qubits")
    t1 = np.trace(M).real
    t2 = np.trace(M @ M).real
    return float(t2 / (d * d + d) - t1**2 / (d * (d * d + d)))


def design_check(ensemble: Ensemble) -> tuple[float, float]:
    """Trace distances of the first and second moments from their Haar values."""
    if not ensemble.is_pure:
        raise ValueError("design check expects pure states")
    m = ensemble.num_qubits
    d1 = trace_distance_schatten(ensemble.mean_state(), np.eye(2**m) / 2**m)
    d2 = trace_distance_schatten(ensemble.second_moment(), haar_second_moment(m))
    return d1, d2


def levy_bound(m: int, tau: float) -> float:
    return 2 * math.exp(-(2 ** (m + 1)) * tau**2 / (36 * math.pi**3))


@dataclass
class TailResult:
    tail: float
    levy: float
    haar_variance: float
    chebyshev: float
    trials: int

    @property
    def within_levy(self) -> bool:
        return self.tail <= min(1.0, self.levy)

    @property
    def within_chebyshev(self) -> bool:
        return self.tail <= self.chebyshev


def purity_tail_experiment(m: int, M, tau: float, trials: int, rng: np.random.Generator,
                           batch: int = 1000) -> TailResult:
    """Frequency of |tr(M psi) - tr(M)/2^m| > tau over Haar-random psi."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    M = np.asarray(M, dtype=complex)
    d = 2**m
    mean = np.trace(M).real / d
    diagonal = not np.any(M - np.diag(np.diag(M)))
    hits = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        z = rng.standard_normal((b, d)) + 1j * rng.standard_normal((b, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        if diagonal:
            vals = (np.abs(z) ** 2) @ np.diag(M).real
        else:
            vals = np.einsum("ki,ij,kj->k", z.conj(), M, z).real
        hits += int(np.count_nonzero(np.abs(vals - mean) > tau))
        done += b
    var = haar_variance_exact(M, m)
    return TailResult(hits / trials, levy_bound(m, tau), var, min(1.0, var / tau**2), trials)


# --------------------------------------------------------------------------
# Phase-state moments
# --------------------------------------------------------------------------

def phase_state_table(n: int) -> np.ndarray:
    """Amplitudes of every degree-2 phase state as rows (real)."""
    return (1 - 2 * gf2.quad_form_tables(n).astype(float)) / math.sqrt(2**n)


def moment_identities(n: int) -> list[dict]:
    """Exhaustive averages over canonical A compared with the closed forms.

    Returns one record per identity with the maximum entrywise error.  Third
    moments are laid out as (d^2 x d) matrices: rows index the two kets, the
    column indexes the bra.  The symmetric third-moment form is included as
    an extra record.
    """
    P = phase_state_table(n)
    N, d = P.shape
    e0 = np.zeros(d)
    e0[0] = 1.0
    I = np.eye(d)
    phi_plus = I.reshape(-1) / math.sqrt(d)
    E1 = P.mean(axis=0)
    E2 = np.einsum("ka,kb->ab", P, P) / N
    E3 = np.einsum("ka,kb,kc->abc", P, P, P) / N
    E4 = np.einsum("ka,kb,kc,kd->abcd", P, P, P, P) / N
    delta = I
    sym3 = (np.einsum("ab,c->abc", delta, e0) + np.einsum("ac,b->abc", delta, e0)
            + np.einsum("bc,a->abc", delta, e0) - 2 * np.einsum("a,b,c->abc", e0, e0, e0)) / d**1.5
    # E[|phi><phi| ⊗ |phi>]: rows (a, b) = (ket1, ket2), column c = bra1 -> E[phi_a phi_c phi_b]
    stated6 = (np.einsum("ac,b->abc", delta, e0) + np.einsum("ab,c->abc", delta, e0)
               + np.einsum("bc,a->abc", delta, e0) - 2 * np.einsum("a,b,c->abc", e0, e0, e0)) / d**1.5
    emp6 = np.einsum("acb->abc", E3)
    stated5 = np.einsum("a,b,c->abc", e0, e0, e0) / d**1.5
    swap = np.einsum("ad,bc->abcd", I, I)
    ident = np.einsum("ac,bd->abcd", I, I)
    xx = np.einsum("ab,ac,ad->abcd", I, I, I)
    # E[(|phi><phi|)^{⊗2}] as a tensor [a, b, c, d] = E[phi_a phi_b phi_c phi_d] with rows (a, b)
    stated7 = (ident + swap) / d**2 + np.einsum("ab,cd->abcd", I, I) / d**2 - 2 * xx / d**2
    emp7 = E4
    records = [
        ("E[phi]", E1, e0 / math.sqrt(d)),
        ("E[phi ⊗ phi]", E2.reshape(-1), phi_plus / math.sqrt(d)),
        ("E[|phi><phi|]", E2, I / d),
        ("E[|phi> ⊗ <phi|]", E2, I / d),
        ("E[|phi> ⊗ |phi><phi|]", E3, stated5),
        ("E[|phi><phi| ⊗ |phi>]", emp6, stated6),
        ("E[|phi><phi| ⊗ |phi><phi|]", emp7, stated7),
        ("E[|phi> ⊗ |phi><phi|] (symmetric form)", E3, sym3),
    ]
    out = []
    for name, emp, ref in records:
        out.append({"identity": name, "n": n, "max_error": float(np.max(np.abs(emp - ref)))})
    return out
