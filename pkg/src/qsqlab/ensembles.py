"""State families used by the learners and the lower-bound experiments.

Subsets of [n] (coupon, biclique) are 1-indexed, matching the usual
``{1, ..., n}`` labelling; element i lives at register index i - 1 and,
for bitstrings, at bit position i (the most significant bit is position 1).
"""
from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .qcore import gf2
from .qcore.paulis import pauli_labels, pauli_matrix
from .qcore.states import (
    ATOL,
    check_density_matrix,
    check_pure_state,
    embed_operator,
    expectation,
    num_qubits,
    swap_operator,
    to_density,
)


# --------------------------------------------------------------------------
# Ensemble container
# --------------------------------------------------------------------------

@dataclass
class Ensemble:
    """Finite weighted family of states (vectors or density matrices)."""

    name: str
    labels: list
    states: list
    weights: np.ndarray = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) == 0:
            raise ValueError("an ensemble needs at least one member")
        if len(self.labels) != len(self.states):
            raise ValueError("labels and states differ in length")
        self.states = [np.asarray(s, dtype=complex) for s in self.states]
        dims = {s.shape[0] for s in self.states}
        if len(dims) != 1:
            raise ValueError(f"members have different dimensions {sorted(dims)}")
        if self.weights is None:
            self.weights = np.full(len(self.states), 1.0 / len(self.states))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.states),):
            raise ValueError("one weight per member is required")
        if self.weights.min() < 0 or abs(self.weights.sum() - 1.0) > ATOL:
            raise ValueError("weights must form a probability vector")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    @property
    def num_qubits(self) -> int:
        return num_qubits(self.dim)

    @property
    def is_pure(self) -> bool:
        return all(s.ndim == 1 for s in self.states)

    def density(self, i: int) -> np.ndarray:
        return to_density(self.states[i])

    def expectations(self, M) -> np.ndarray:
        """tr(M rho_i) for every member."""
        M = np.asarray(M)
        if M.shape != (self.dim, self.dim):
            raise ValueError(f"observable is {M.shape}, ensemble dimension is {self.dim}")
        if self.is_pure:
            S = np.array(self.states)
            return np.einsum("ki,ij,kj->k", S.conj(), M, S).real
        return np.array([expectation(M, s) for s in self.states])

    def variance(self, M) -> float:
        from .dimension import variance_of

        return variance_of(self, M)

    def mean_state(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for w, s in zip(self.weights, self.states):
            out += w * to_density(s)
        return out

    def second_moment(self) -> np.ndarray:
        """E[rho ⊗ rho]."""
        d = self.dim
        out = np.zeros((d * d, d * d), dtype=complex)
        if self.is_pure:
            for w, s in zip(self.weights, self.states):
                v = np.kron(s, s)
                out += w * np.outer(v, v.conj())
            return out
        for w, s in zip(self.weights, self.states):
            out += w * np.kron(s, s)
        return out

    def subset(self, indices) -> "Ensemble":
        indices = list(indices)
        w = self.weights[indices]
        return Ensemble(
            name=self.name,
            labels=[self.labels[i] for i in indices],
            states=[self.states[i] for i in indices],
            weights=w / w.sum(),
            params=dict(self.params),
        )

    def to_manifest(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "dimension": self.dim,
            "num_qubits": self.num_qubits,
            "members": [
                {
                    "label": _jsonable(lab),
                    "kind": "pure" if s.ndim == 1 else "mixed",
                    "weight": float(w),
                }
                for lab, s, w in zip(self.labels, self.states, self.weights)
            ],
        }

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_manifest(), fh, indent=2, sort_keys=True)

    def write_amplitudes_csv(self, path) -> None:
        """Dump pure-state amplitudes as rows (member, index, re, im)."""
        if not self.is_pure:
            raise ValueError("amplitude dump needs pure states")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["member", "index", "re", "im"])
            for k, s in enumerate(self.states):
                for i, a in enumerate(s):
                    w.writerow([k, i, repr(float(a.real)), repr(float(a.imag))])


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# --------------------------------------------------------------------------
# Boolean-function encodings
# --------------------------------------------------------------------------

def _table(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.int64).reshape(-1)
    if f.size < 2 or f.size & (f.size - 1):
        raise ValueError(f"truth table length {f.size} is not 2^n with n >= 1")
    if np.any((f != 0) & (f != 1)):
        raise ValueError("truth table entries must be 0 or 1")
    return f


def function_state(f) -> np.ndarray:
    """Quantum example state 2^{-n/2} sum_x |x, f(x)>."""
    f = _table(f)
    psi = np.zeros(2 * f.size, dtype=complex)
    psi[2 * np.arange(f.size) + f] = 1.0 / math.sqrt(f.size)
    return psi


def phase_state(f) -> np.ndarray:
    """2^{-n/2} sum_x (-1)^{f(x)} |x>."""
    f = _table(f)
    return ((1 - 2 * f) / math.sqrt(f.size)).astype(complex)


def noisy_example_state(f, eta: float) -> np.ndarray:
    """Coherent classification-noise example with flip amplitude sqrt(eta)."""
    f = _table(f)
    if not 0.0 <= eta <= 0.5:
        raise ValueError(f"noise rate {eta} outside [0, 1/2]")
    psi = np.zeros(2 * f.size, dtype=complex)
    idx = 2 * np.arange(f.size)
    psi[idx + f] = math.sqrt(1 - eta)
    psi[idx + (1 - f)] = math.sqrt(eta)
    return psi / math.sqrt(f.size)


def quadratic_example_state(A) -> np.ndarray:
    return function_state(gf2.quad_form_table(A))


def quadratic_phase_state(A) -> np.ndarray:
    return phase_state(gf2.quad_form_table(A))


def degree2_ensemble(n: int, kind: str = "example") -> Ensemble:
    """All 2^{n(n+1)/2} degree-2 states, labelled by canonical code.

    ``kind`` is ``"example"`` for psi_A on n + 1 qubits or ``"phase"`` for
    phi_A on n qubits.
    """
    tables = gf2.quad_form_tables(n)
    if kind == "example":
        states = [function_state(t) for t in tables]
    elif kind == "phase":
        states = [phase_state(t) for t in tables]
    else:
        raise ValueError(f"unknown degree-2 state kind {kind!r}")
    return Ensemble(
        name=f"degree2-{kind}",
        labels=list(range(len(tables))),
        states=states,
        params={"n": n, "kind": kind},
    )


def class_eta(C) -> tuple[float, float]:
    """Minimum and average pairwise disagreement of a class of truth tables."""
    C = np.array([_table(f) for f in C])
    if C.shape[0] < 2:
        raise ValueError("need at least two concepts")
    D = (C[:, None, :] != C[None, :, :]).mean(axis=2)
    iu = np.triu_indices(C.shape[0], 1)
    pair = D[iu]
    if np.any(pair == 0):
        raise ValueError("class contains duplicate functions")
    return float(pair.min()), float(pair.mean())


# --------------------------------------------------------------------------
# Hidden subgroup / shadow / padding
# --------------------------------------------------------------------------

def coset_state(n: int, s) -> np.ndarray:
    """Uniform mixture of the coset superpositions of H = {0, s}."""
    s = gf2.as_bits(s)
    if s.size != n:
        raise ValueError("s has the wrong length")
    if not s.any():
        raise ValueError("s must be nonzero")
    d = 2**n
    si = gf2.bits_to_index(s)
    rho = np.zeros((d, d), dtype=complex)
    for x in range(d):
        if x < (x ^ si):
            v = np.zeros(d, dtype=complex)
            v[x] = v[x ^ si] = 1 / math.sqrt(2)
            rho += np.outer(v, v)
    return rho / 2 ** (n - 1)


def coset_ensemble(n: int) -> Ensemble:
    bits = gf2.all_bitstrings(n)[1:]
    return Ensemble(
        name="coset",
        labels=[gf2.bits_to_str(s) for s in bits],
        states=[coset_state(n, s) for s in bits],
        params={"n": n},
    )


def shadow_state(n: int, P, eps: float) -> np.ndarray:
    """(I + 3 eps P) / 2^n for a non-identity Pauli P (label or index)."""
    if not 0 < 3 * eps <= 1 + ATOL:
        raise ValueError(f"need 0 < 3*eps <= 1, got eps={eps}")
    if isinstance(P, (int, np.integer)):
        P = pauli_labels(n)[int(P)]
    if len(P) != n:
        raise ValueError("Pauli label has the wrong length")
    if set(P) == {"I"}:
        raise ValueError("the identity is not allowed")
    return (np.eye(2**n) + 3 * eps * pauli_matrix(P)) / 2**n


def shadow_ensemble(n: int, eps: float) -> Ensemble:
    labels = pauli_labels(n)
    return Ensemble(
        name="shadow",
        labels=labels,
        states=[shadow_state(n, P, eps) for P in labels],
        params={"n": n, "eps": eps},
    )


def padded_state(psi, k: int) -> np.ndarray:
    """psi ⊗ |0^k>."""
    if k < 0:
        raise ValueError("k must be non-negative")
    pad = np.zeros(2**k, dtype=complex)
    pad[0] = 1.0
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 1:
        return np.kron(psi, pad)
    return np.kron(psi, np.outer(pad, pad))


def zero_block(M, k: int) -> np.ndarray:
    """The <0^k| . |0^k> block of M acting on (system ⊗ k pad qubits)."""
    M = np.asarray(M)
    d = M.shape[0] // 2**k
    return M.reshape(d, 2**k, d, 2**k)[:, 0, :, 0]


# --------------------------------------------------------------------------
# Coupon collector / codewords
# --------------------------------------------------------------------------

def register_size(n: int, minimum: int = 1) -> int:
    """Smallest power of two >= max(n, minimum)."""
    return max(minimum, 1 << max(0, math.ceil(math.log2(max(n, 1)))))


def _subset(n: int, S) -> list[int]:
    S = sorted({int(i) for i in S})
    if not S:
        raise ValueError("S must be nonempty")
    if S[0] < 1 or S[-1] > n:
        raise ValueError(f"S must be a subset of [1..{n}]")
    return S


def coupon_state(n: int, S) -> np.ndarray:
    """(1/sqrt k) sum_{i in S} |i> on a padded n-dimensional register."""
    S = _subset(n, S)
    psi = np.zeros(register_size(n, 2), dtype=complex)
    psi[np.array(S) - 1] = 1 / math.sqrt(len(S))
    return psi


def interval_projector(n: int, lo: int, hi: int) -> np.ndarray:
    """sum_{lo <= i <= hi} |i><i| on the coupon register (1-indexed, inclusive)."""
    d = register_size(n, 2)
    diag = np.zeros(d)
    diag[lo - 1: hi] = 1.0
    return np.diag(diag).astype(complex)


def codeword_state(G, x) -> np.ndarray:
    """(1/sqrt n) sum_i |i>|(Gx)_i> for a full-column-rank n x k generator G."""
    G = gf2.as_bit_matrix(G)
    x = gf2.as_bits(x)
    n, k = G.shape
    if x.size != k:
        raise ValueError("x has the wrong length for G")
    if gf2.rank(G) != k:
        raise ValueError("generator matrix is rank deficient")
    c = gf2.f2_matvec(G, x)
    psi = np.zeros(2 * register_size(n), dtype=complex)
    psi[2 * np.arange(n) + c] = 1 / math.sqrt(n)
    return psi


def codeword_row_projector(n: int, j: int) -> np.ndarray:
    """|e_j><e_j| ⊗ |0><0| for row j (0-indexed)."""
    d = 2 * register_size(n)
    M = np.zeros((d, d), dtype=complex)
    M[2 * j, 2 * j] = 1.0
    return M


# --------------------------------------------------------------------------
# Planted biclique
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BicliqueParams:
    n: int
    S: tuple

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(_subset(self.n, self.S)))

    @property
    def k(self) -> int:
        return len(self.S)


def biclique_distribution(p: BicliqueParams) -> np.ndarray:
    """D_S over {0,1}^n: uniform plus mass k/n spread over {x : x_i = 1, i in S}."""
    n, k = p.n, p.k
    X = gf2.all_bitstrings(n)
    planted = X[:, np.array(p.S) - 1].all(axis=1)
    D = np.full(2**n, (1 - k / n) / 2**n)
    D[planted] += (k / n) / 2 ** (n - k)
    return D


def biclique_state(p: BicliqueParams) -> np.ndarray:
    return np.sqrt(biclique_distribution(p)).astype(complex)


def biclique_tv_formula(n: int, k: int) -> float:
    return (k / n) * (1 - 2.0**-k)


def biclique_overlap_formula(n: int, k: int) -> float:
    """<+^n|psi_S> in closed form."""
    r = k / n
    return 2 ** (-k / 2) * math.sqrt(r + (1 - r) * 2.0**-k) + (1 - 2.0**-k) * math.sqrt(1 - r)


# --------------------------------------------------------------------------
# Stabilizer states
# --------------------------------------------------------------------------

def _stabilizer_gates(m: int) -> list[np.ndarray]:
    H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    S = np.diag([1, 1j])
    CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    gates = []
    for q in range(m):
        gates.append(embed_operator(H, [q], m))
        gates.append(embed_operator(S, [q], m))
    for a in range(m):
        for b in range(m):
            if a != b:
                gates.append(embed_operator(CX, [a, b], m))
    return gates


def _phase_key(v: np.ndarray) -> tuple:
    nz = np.flatnonzero(np.abs(v) > 1e-9)
    v = v * (abs(v[nz[0]]) / v[nz[0]])
    r = np.round(np.concatenate([v.real, v.imag]), 8) + 0.0
    return tuple(r)


def stabilizer_ensemble(m: int) -> Ensemble:
    """All m-qubit stabilizer states (m <= 2) by closure of |0^m> under H, S, CNOT."""
    if m not in (1, 2):
        raise ValueError("stabilizer enumeration is supported for m in {1, 2}")
    gates = _stabilizer_gates(m)
    start = np.zeros(2**m, dtype=complex)
    start[0] = 1.0
    seen = {_phase_key(start): start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for g in gates:
            w = g @ v
            key = _phase_key(w)
            if key not in seen:
                seen[key] = w
                queue.append(w)
    keys = sorted(seen)
    states = []
    for key in keys:
        v = seen[key]
        nz = np.flatnonzero(np.abs(v) > 1e-9)
        states.append(v * (abs(v[nz[0]]) / v[nz[0]]))
    return Ensemble(name="stabilizer", labels=list(range(len(states))), states=states, params={"m": m})


def haar_second_moment(m: int) -> np.ndarray:
    d = 2**m
    return (np.eye(d * d) + swap_operator(m)) / (d * d + d)


def validate_members(ens: Ensemble) -> None:
    """Check every member against its type invariants."""
    for s in ens.states:
        if s.ndim == 1:
            check_pure_state(s)
        else:
            check_density_matrix(s)
