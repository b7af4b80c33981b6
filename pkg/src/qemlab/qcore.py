"""Dense complex linear algebra used throughout the lab.

All matrices are plain numpy complex arrays. Qubit ordering is big-endian:
qubit 0 is the most significant bit of the basis index, so an operator on
qubits (0, 1, ..., n-1) is the Kronecker product of the per-qubit factors
taken left to right.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_ATOL = 1e-10


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    """Kronecker product of a sequence, left to right."""
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def hermitian_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of m from its conjugate transpose."""
    return float(np.max(np.abs(m - m.conj().T)))


def _check_hermitian(m: np.ndarray, atol: float, what: str) -> np.ndarray:
    d = hermitian_defect(m)
    if d > atol:
        raise ValueError(f"{what} is not Hermitian: defect {d:.3e} > {atol:.1e}")
    return 0.5 * (m + m.conj().T)


def n_qubits_of(m: np.ndarray) -> int:
    """Number of qubits for a 2^n x 2^n matrix."""
    d = m.shape[0]
    if m.ndim != 2 or m.shape[1] != d:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = int(round(np.log2(d)))
    if 2**n != d:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def partial_trace(m: np.ndarray, keep: Iterable[int], n_qubits: int) -> np.ndarray:
    """Trace out all qubits not listed in ``keep``.

    Kept qubits retain their relative (ascending) order. The trace of the
    input is preserved.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2**n_qubits, 2**n_qubits):
        raise ValueError(f"matrix shape {m.shape} does not match n_qubits={n_qubits}")
    keep_set = sorted(set(keep))
    if keep_set and (keep_set[0] < 0 or keep_set[-1] >= n_qubits):
        raise IndexError(f"keep indices {keep_set} out of range for {n_qubits} qubits")
    drop = [q for q in range(n_qubits) if q not in keep_set]
    t = m.reshape((2,) * (2 * n_qubits))
    nq = n_qubits
    for q in reversed(drop):
        # descending order keeps lower axis positions stable
        t = np.trace(t, axis1=q, axis2=nq + q)
        nq -= 1
    d = 2 ** len(keep_set)
    return t.reshape(d, d)


@dataclass(frozen=True)
class EigResult:
    """Full Hermitian eigendecomposition, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal


def eigh(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> EigResult:
    """Eigendecompose a Hermitian matrix.

    Raises ValueError if the input deviates from Hermiticity by more than
    ``atol`` entrywise.
    """
    m = np.asarray(m, dtype=complex)
    mh = _check_hermitian(m, atol, "eigh input")
    w, v = np.linalg.eigh(mh)
    return EigResult(eigenvalues=w, eigenvectors=v)


@dataclass(frozen=True)
class GenEigResult:
    """Solutions of a regularized Hermitian pencil H c = E S c.

    ``energies`` ascend; ``coefficients[:, k]`` is the vector for
    ``energies[k]``, expressed in the original (untruncated) basis.
    ``s_eigenvalues`` is the full metric spectrum kept for diagnostics.
    """

    energies: np.ndarray
    coefficients: np.ndarray
    rank_kept: int
    s_eigenvalues: np.ndarray


def gen_eigh(h: np.ndarray, s: np.ndarray, rel_threshold: float = 1e-10) -> GenEigResult:
    """Solve H c = E S c for Hermitian H and PSD S with metric regularization.

    S is eigendecomposed and directions with eigenvalue below
    ``rel_threshold`` times the largest are discarded (canonical
    orthogonalization); the ordinary Hermitian problem is solved in the
    surviving subspace and coefficients are mapped back. Among numerically
    degenerate minimal energies, the solution with the largest c S c is
    listed first.
    """
    h = np.asarray(h, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if h.shape != s.shape:
        raise ValueError(f"shape mismatch: H {h.shape} vs S {s.shape}")
    scale = max(1.0, float(np.linalg.norm(h)), float(np.linalg.norm(s)))
    hh = _check_hermitian(h, 1e-9 * scale, "gen_eigh H")
    sh = _check_hermitian(s, 1e-9 * scale, "gen_eigh S")

    w, v = np.linalg.eigh(sh)
    s_norm = float(np.linalg.norm(sh))
    if w[0] < -1e-10 * max(s_norm, 1e-300):
        raise ValueError(f"metric is not PSD: min eigenvalue {w[0]:.3e}")
    smax = float(w[-1])
    mask = (w > 0) & (w >= rel_threshold * smax)
    rank = int(np.count_nonzero(mask))
    if rank == 0:
        raise ValueError("metric is numerically zero, all directions discarded")

    x = v[:, mask] / np.sqrt(w[mask])
    hp = x.conj().T @ hh @ x
    hp = 0.5 * (hp + hp.conj().T)
    e, y = np.linalg.eigh(hp)
    c = x @ y

    # tie-break degenerate minima by largest c S c
    tol = 1e-12 * max(1.0, abs(float(e[0])))
    tied = np.flatnonzero(e - e[0] <= tol)
    if len(tied) > 1:
        weights = [float(np.real(c[:, k].conj() @ sh @ c[:, k])) for k in tied]
        best = tied[int(np.argmax(weights))]
        order = [best] + [k for k in range(len(e)) if k != best]
        e, c = e[order], c[:, order]

    return GenEigResult(energies=e, coefficients=c, rank_kept=rank, s_eigenvalues=w)


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Operator-norm distance between unitaries after global-phase alignment.

    Returns ~0 iff u and v are equal up to a global phase.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    m = u.conj().T @ v
    diag = np.diagonal(m)
    k = int(np.argmax(np.abs(diag)))
    if abs(diag[k]) > 1e-12:
        phase = diag[k] / abs(diag[k])
    else:
        tr = np.trace(m)
        phase = tr / abs(tr) if abs(tr) > 1e-12 else 1.0
    return float(np.linalg.norm(m - phase * np.eye(m.shape[0]), 2))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Unitary that sends qubit ``q`` of the input to position ``perm[q]``.

    Basis action: |b_0 b_1 ... b_{n-1}> maps to the ket whose bit at
    position ``perm[q]`` is ``b_q``.
    """
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation: {perm}")
    dim = 2**n
    p = np.zeros((dim, dim), dtype=complex)
    for src in range(dim):
        bits = [(src >> (n - 1 - q)) & 1 for q in range(n)]
        dst = 0
        for q in range(n):
            dst |= bits[q] << (n - 1 - perm[q])
        p[dst, src] = 1.0
    return p
