"""Linear algebra over GF(2) and quadratic forms x^T A x (mod 2).

Bitstrings are stored as uint8 arrays. Bit 1 of a string is the most
significant bit of its integer index, so ``index_to_bits(1, 3) == [0, 0, 1]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class InfeasibleSystem(ValueError):
    """Raised when a GF(2) linear system has no solution."""


def as_bits(x) -> np.ndarray:
    """Coerce a bit sequence (list, tuple, str of 0/1, array) to a uint8 array."""
    if isinstance(x, str):
        x = [int(c) for c in x]
    arr = np.asarray(x, dtype=np.int64).reshape(-1)
    if arr.size == 0:
        raise ValueError("bit vectors must have positive length")
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError(f"not a bit vector: {x!r}")
    return arr.astype(np.uint8)


def bits_to_index(bits) -> int:
    out = 0
    for b in as_bits(bits):
        out = (out << 1) | int(b)
    return out


def index_to_bits(index: int, n: int) -> np.ndarray:
    return np.array([(index >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)


def all_bitstrings(n: int) -> np.ndarray:
    """All 2^n bitstrings as rows, in index order."""
    idx = np.arange(2**n)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in as_bits(bits))


def as_bit_matrix(A) -> np.ndarray:
    arr = np.asarray(A, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("matrix entries must be 0 or 1")
    return arr.astype(np.uint8)


# --------------------------------------------------------------------------
# Quadratic forms
# --------------------------------------------------------------------------

def quad_form_eval(A, x) -> int:
    """Evaluate x^T A x over GF(2)."""
    A = as_bit_matrix(A)
    x = as_bits(x)
    if A.shape != (x.size, x.size):
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has length {x.size}")
    return int(x.astype(np.int64) @ A.astype(np.int64) @ x.astype(np.int64)) & 1


def quad_form_table(A) -> np.ndarray:
    """Truth table of x -> x^T A x for all x in index order."""
    A = as_bit_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("quadratic form matrix must be square")
    X = all_bitstrings(n).astype(np.int64)
    return (np.einsum("ki,ij,kj->k", X, A.astype(np.int64), X) & 1).astype(np.uint8)


def canonicalize_quadratic(A) -> np.ndarray:
    """Upper-triangular representative defining the same function.

    Only A_ii and A_ij xor A_ji matter, so the off-diagonal pair is folded
    into the upper triangle.
    """
    A = as_bit_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("quadratic form matrix must be square")
    upper = np.triu(A, 1) ^ np.tril(A, -1).T
    return (upper | np.diag(np.diag(A))).astype(np.uint8)


def is_canonical(A) -> bool:
    A = as_bit_matrix(A)
    return not np.any(np.tril(A, -1))


def num_canonical_forms(n: int) -> int:
    return 2 ** (n * (n + 1) // 2)


def canonical_form(n: int, code: int) -> np.ndarray:
    """The canonical matrix whose upper-triangular entries spell ``code``.

    Entries are read row-major over positions (i, j), i <= j, with the first
    position as the most significant bit.
    """
    rows, cols = np.triu_indices(n)
    m = rows.size
    if not 0 <= code < 2**m:
        raise ValueError(f"code {code} out of range for n={n}")
    A = np.zeros((n, n), dtype=np.uint8)
    A[rows, cols] = [(code >> (m - 1 - t)) & 1 for t in range(m)]
    return A


def canonical_code(A) -> int:
    A = canonicalize_quadratic(A)
    n = A.shape[0]
    rows, cols = np.triu_indices(n)
    return bits_to_index(A[rows, cols])


def canonical_forms(n: int):
    """Iterate over all 2^{n(n+1)/2} canonical (upper-triangular) matrices."""
    for code in range(num_canonical_forms(n)):
        yield canonical_form(n, code)


def quad_form_tables(n: int) -> np.ndarray:
    """Truth tables of every canonical form, one row per form code."""
    X = all_bitstrings(n).astype(np.int64)
    rows, cols = np.triu_indices(n)
    # monomial x_i x_j for each upper-triangular position
    monomials = X[:, rows] * X[:, cols]
    m = rows.size
    codes = np.arange(2**m)
    coeffs = (codes[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1
    return ((coeffs @ monomials.T) & 1).astype(np.uint8)


# --------------------------------------------------------------------------
# Gaussian elimination
# --------------------------------------------------------------------------

def rref(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    R = (np.asarray(M, dtype=np.uint8) & 1).copy()
    if R.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        others = np.flatnonzero(R[:, c])
        others = others[others != r]
        if others.size:
            R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M) -> int:
    M = np.asarray(M, dtype=np.uint8)
    if M.size == 0:
        return 0
    return len(rref(M)[1])


def nullspace(M, n: int | None = None) -> np.ndarray:
    """Basis of {z : M z = 0} as rows. ``n`` is needed when M has no rows."""
    M = np.asarray(M, dtype=np.uint8)
    if M.size == 0:
        if n is None:
            n = M.shape[1] if M.ndim == 2 else 0
        return np.eye(n, dtype=np.uint8)
    R, pivots = rref(M)
    n = R.shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for r, p in enumerate(pivots):
            basis[t, p] = R[r, f]
    return basis


@dataclass(frozen=True)
class F2Solution:
    """One solution of a GF(2) system plus the homogeneous solution space."""

    solution: np.ndarray
    rank: int
    nullspace: np.ndarray

    @property
    def unique(self) -> bool:
        return self.nullspace.shape[0] == 0

    def all_solutions(self) -> np.ndarray:
        k = self.nullspace.shape[0]
        out = np.empty((2**k, self.solution.size), dtype=np.uint8)
        for t, coeffs in enumerate(itertools.product((0, 1), repeat=k)):
            v = self.solution.copy()
            for c, b in zip(coeffs, self.nullspace):
                if c:
                    v ^= b
            out[t] = v
        return out


def f2_solve(constraints) -> F2Solution:
    """Solve {a_i . z = b_i} over GF(2).

    ``constraints`` is a sequence of (vector, bit) pairs.  Returns a particular
    solution, the rank of the system and a basis of the solution space of the
    homogeneous system (empty when the solution is unique).
    """
    constraints = list(constraints)
    if not constraints:
        raise ValueError("f2_solve needs at least one constraint to fix n")
    rows = [as_bits(v) for v, _ in constraints]
    n = rows[0].size
    if any(r.size != n for r in rows):
        raise ValueError("all constraint vectors must have the same length")
    rhs = np.array([int(b) & 1 for _, b in constraints], dtype=np.uint8)
    aug = np.concatenate([np.array(rows), rhs[:, None]], axis=1)
    R, pivots = rref(aug)
    if n in pivots:
        raise InfeasibleSystem("inconsistent GF(2) system")
    z = np.zeros(n, dtype=np.uint8)
    for r, p in enumerate(pivots):
        z[p] = R[r, n]
    return F2Solution(solution=z, rank=len(pivots), nullspace=nullspace(np.array(rows)))


def f2_matvec(M, v) -> np.ndarray:
    return ((np.asarray(M, dtype=np.int64) @ as_bits(v).astype(np.int64)) & 1).astype(np.uint8)


def independent_rows(M) -> list[int]:
    """Indices of a maximal set of linearly independent rows (greedy, in order)."""
    M = np.asarray(M, dtype=np.uint8)
    chosen: list[int] = []
    current = np.zeros((0, M.shape[1]), dtype=np.uint8)
    for i, row in enumerate(M):
        trial = np.vstack([current, row])
        if rank(trial) > current.shape[0]:
            chosen.append(i)
            current = trial
    return chosen
