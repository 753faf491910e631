"""Pauli strings as dense matrices."""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_labels(m: int, include_identity: bool = False) -> list[str]:
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=m)]
    if not include_identity:
        labels = labels[1:]
    return labels


@lru_cache(maxsize=4096)
def _pauli_cached(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for c in label:
        out = np.kron(out, PAULI_1Q[c])
    out.setflags(write=False)
    return out


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XZI"`` (first letter = qubit 0)."""
    if not label or any(c not in PAULI_1Q for c in label):
        raise ValueError(f"bad Pauli label {label!r}")
    return _pauli_cached(label)


def pauli_expectations(labels, psi) -> np.ndarray:
    """<psi|P|psi> for each label; psi may be a vector or a stack of row vectors."""
    psi = np.atleast_2d(np.asarray(psi, dtype=complex))
    out = np.empty((psi.shape[0], len(labels)))
    for t, lab in enumerate(labels):
        P = pauli_matrix(lab)
        out[:, t] = np.einsum("ki,ij,kj->k", psi.conj(), P, psi).real
    return out
