"""Dense pure states, density matrices, observables and distances.

Pure states are 1-d complex arrays, density matrices and observables are
square 2-d arrays.  All identities are checked at ``ATOL``.
"""
from __future__ import annotations

import math

import numpy as np

ATOL = 1e-9


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def num_qubits(dim: int) -> int:
    m = int(dim).bit_length() - 1
    if dim < 1 or 2**m != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return m


def check_pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("a pure state is a 1-d amplitude vector")
    num_qubits(psi.size)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > ATOL:
        raise ValueError(f"state is not normalized: |psi|^2 = {norm}")
    return psi


def check_density_matrix(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("a density matrix must be square")
    num_qubits(rho.shape[0])
    if not np.allclose(rho, rho.conj().T, atol=ATOL, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > ATOL:
        raise ValueError(f"density matrix has trace {np.trace(rho).real}")
    if np.linalg.eigvalsh(rho).min() < -ATOL:
        raise ValueError("density matrix is not positive semi-definite")
    return rho


def operator_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M), 2))


def check_observable(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("an observable must be a square matrix")
    if not np.allclose(M, M.conj().T, atol=ATOL, rtol=0):
        raise ValueError("observable is not Hermitian")
    norm = operator_norm(M)
    if norm > 1.0 + ATOL:
        raise ValueError(f"observable has operator norm {norm} > 1")
    return M


def check_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a distribution is a non-empty 1-d probability vector")
    if p.min() < -ATOL or abs(p.sum() - 1.0) > ATOL:
        raise ValueError("probabilities must be non-negative and sum to 1")
    return p


def to_density(state) -> np.ndarray:
    """Density matrix of a pure state vector; matrices pass through."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def expectation(M, state) -> float:
    """tr(M rho) for a pure state vector or a density matrix."""
    M = np.asarray(M)
    state = np.asarray(state)
    if M.shape[0] != state.shape[0]:
        raise ValueError("observable and state dimensions differ")
    if state.ndim == 1:
        return float(np.vdot(state, M @ state).real)
    return float(np.einsum("ij,ji->", M, state).real)


# --------------------------------------------------------------------------
# Basic states and gates
# --------------------------------------------------------------------------

def basis_state(index: int, m: int) -> np.ndarray:
    psi = np.zeros(2**m, dtype=complex)
    psi[index] = 1.0
    return psi


def plus_state(m: int) -> np.ndarray:
    return np.full(2**m, 2.0 ** (-m / 2), dtype=complex)


def ghz_state(m: int) -> np.ndarray:
    psi = np.zeros(2**m, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def maximally_mixed(m: int) -> np.ndarray:
    return np.eye(2**m, dtype=complex) / 2**m


def walsh_hadamard(vec) -> np.ndarray:
    """Apply H^{⊗m} to a length 2^m vector (fast transform, normalized)."""
    a = np.array(vec, dtype=complex)
    m = num_qubits(a.size)
    h = 1
    while h < a.size:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    return a / 2 ** (m / 2)


def hadamard_matrix(m: int) -> np.ndarray:
    H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(m):
        out = np.kron(out, H)
    return out


def swap_operator(m: int) -> np.ndarray:
    """SWAP of two m-qubit registers."""
    d = 2**m
    S = np.zeros((d * d, d * d))
    a, b = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    S[(b * d + a).ravel(), (a * d + b).ravel()] = 1.0
    return S


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


# --------------------------------------------------------------------------
# Subsystems
# --------------------------------------------------------------------------

def embed_operator(op, qubits, m: int) -> np.ndarray:
    """Act with ``op`` on the listed qubits (0-indexed, qubit 0 = MSB) of m qubits."""
    op = np.asarray(op, dtype=complex)
    qubits = list(qubits)
    k = len(qubits)
    if op.shape != (2**k, 2**k):
        raise ValueError("operator size does not match the number of target qubits")
    rest = [q for q in range(m) if q not in qubits]
    full = np.kron(op, np.eye(2 ** len(rest)))
    # full acts on ordering qubits + rest; permute back to natural order
    order = qubits + rest
    t = full.reshape([2] * (2 * m))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [m + i for i in inv])
    return t.reshape(2**m, 2**m)


def partial_trace(state, keep, m: int | None = None) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (kept in sorted order)."""
    rho = to_density(state)
    if m is None:
        m = num_qubits(rho.shape[0])
    keep = sorted(keep)
    drop = [q for q in range(m) if q not in keep]
    t = rho.reshape([2] * (2 * m))
    t = t.transpose(keep + drop + [m + q for q in keep] + [m + q for q in drop])
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


# --------------------------------------------------------------------------
# Distances and discrimination
# --------------------------------------------------------------------------

def _same_dim(a, b):
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def trace_distance_pure(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _same_dim(a, b)
    overlap = abs(np.vdot(a, b)) ** 2
    return math.sqrt(max(0.0, 1.0 - overlap))


def trace_distance_schatten(a, b) -> float:
    """(1/2) ||a - b||_1 via the eigenvalues of the difference."""
    ra, rb = to_density(a), to_density(b)
    _same_dim(ra, rb)
    ev = np.linalg.eigvalsh(ra - rb)
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def trace_distance(a, b) -> float:
    """Trace distance; pure vectors use sqrt(1 - |<a|b>|^2)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 1 and b.ndim == 1:
        return trace_distance_pure(a, b)
    return trace_distance_schatten(a, b)


def helstrom(a, b) -> tuple[np.ndarray, float]:
    """Optimal two-outcome observable for telling ``a`` from ``b``.

    Returns M = P_+ - P_- built from the eigenspaces of a - b (zero
    eigenvalues go to P_+) and the value tr(M(a - b)) = 2 d_tr(a, b).
    """
    ra, rb = to_density(a), to_density(b)
    _same_dim(ra, rb)
    diff = ra - rb
    diff = (diff + diff.conj().T) / 2
    ev, vecs = np.linalg.eigh(diff)
    signs = np.where(ev >= -ATOL, 1.0, -1.0)
    M = (vecs * signs) @ vecs.conj().T
    value = float(np.einsum("ij,ji->", M, diff).real)
    return M, value


def positive_part_projector(H) -> np.ndarray:
    """Projector onto the eigenspaces of Hermitian H with eigenvalue > 0."""
    H = np.asarray(H, dtype=complex)
    ev, vecs = np.linalg.eigh((H + H.conj().T) / 2)
    V = vecs[:, ev > ATOL]
    return V @ V.conj().T


def distinguish_success_prob(psi0, psi1) -> float:
    """Optimal probability of identifying which of two equiprobable pure states was given."""
    return 0.5 + 0.5 * trace_distance_pure(psi0, psi1)


def fidelity_pure(a, b) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


# --------------------------------------------------------------------------
# Distributions
# --------------------------------------------------------------------------

def born_distribution(psi) -> np.ndarray:
    """Computational-basis outcome probabilities of a pure state or density matrix."""
    psi = np.asarray(psi)
    if psi.ndim == 1:
        p = np.abs(psi) ** 2
    else:
        p = np.clip(np.diag(psi).real, 0.0, None)
    return p / p.sum()


def amplitude_state(p) -> np.ndarray:
    """Coherent encoding sum_x sqrt(p(x)) |x>."""
    p = check_distribution(p)
    return np.sqrt(np.clip(p, 0.0, None)).astype(complex)


def dist_metrics(p, q) -> tuple[float, float]:
    """Total-variation and Hellinger distance, with hellinger^2 = 1 - sum sqrt(pq)."""
    p = check_distribution(p)
    q = check_distribution(q)
    if p.shape != q.shape:
        raise ValueError("distributions are over different outcome sets")
    tv = 0.5 * float(np.abs(p - q).sum())
    bc = float(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None)).sum())
    return min(tv, 1.0), math.sqrt(min(1.0, max(0.0, 1.0 - bc)))


def tv_distance(p, q) -> float:
    return dist_metrics(p, q)[0]


# --------------------------------------------------------------------------
# Random states
# --------------------------------------------------------------------------

def haar_state(m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1:
        raise ValueError("need at least one qubit")
    z = rng.standard_normal(2**m) + 1j * rng.standard_normal(2**m)
    return z / np.linalg.norm(z)


def haar_states(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random m-qubit states as rows."""
    z = rng.standard_normal((count, 2**m)) + 1j * rng.standard_normal((count, 2**m))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_sign_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    """U diag(±1) U^dagger with Haar U and a balanced spectrum."""
    U = haar_unitary(d, rng)
    signs = np.ones(d)
    signs[rng.permutation(d)[: d // 2]] = -1.0
    M = (U * signs) @ U.conj().T
    return (M + M.conj().T) / 2
