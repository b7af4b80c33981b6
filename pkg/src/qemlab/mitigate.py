"""Mitigation solvers: raw expectation, virtual distillation, and the
generalized subspace expansion over fault or power subspaces.

All subspaces use the maximally mixed metric A = I / 2^N, so the matrix
elements are Tr[rho_i rho_j H] / 2^N and Tr[rho_i rho_j] / 2^N. The 1/2^N
factors cancel in the eigenproblem but are kept so entries match the
entangled-measurement evaluation exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qcore
from .circuit import PauliSum
from .noise import DensityMatrix, expectation


@dataclass(frozen=True)
class SubspaceSpec:
    """Which coupler bases span the mitigation subspace.

    ``fault``: bases are the listed members of a fault family.
    ``power``: bases are I, rho, ..., rho^max_power of a single state
    (max_power = 1 matches the two-copy measurement budget).
    """

    kind: str
    indices: tuple[int, ...] = ()
    max_power: int = 0

    def __post_init__(self) -> None:
        if self.kind == "fault":
            if not self.indices:
                raise ValueError("fault subspace needs at least one index")
            if len(set(self.indices)) != len(self.indices):
                raise ValueError("duplicate fault indices")
        elif self.kind == "power":
            if self.max_power < 1:
                raise ValueError("power subspace needs max_power >= 1")
        else:
            raise ValueError(f"unknown subspace kind {self.kind!r}")

    @classmethod
    def fault(cls, indices: Sequence[int]) -> "SubspaceSpec":
        return cls(kind="fault", indices=tuple(int(i) for i in indices))

    @classmethod
    def power(cls, max_power: int) -> "SubspaceSpec":
        return cls(kind="power", max_power=int(max_power))


@dataclass(frozen=True)
class MitigationResult:
    method: str
    energy: float
    coefficients: tuple[complex, ...]
    metric_spectrum: tuple[float, ...]
    rank_kept: int


def raw_energy(rho: DensityMatrix, h: PauliSum) -> MitigationResult:
    """Unmitigated Tr[rho H], the baseline every method is judged against."""
    return MitigationResult(
        method="raw",
        energy=expectation(rho, h),
        coefficients=(),
        metric_spectrum=(),
        rank_kept=0,
    )


def vd_energy(rho: DensityMatrix, h: PauliSum, m: int = 2) -> MitigationResult:
    """Virtual distillation with m copies: Tr[rho^m H] / Tr[rho^m]."""
    if m < 2:
        raise ValueError("virtual distillation needs m >= 2")
    power = np.linalg.matrix_power(rho.mat, m)
    denom = complex(np.trace(power)).real
    if abs(denom) < 1e-14:
        raise ValueError(f"Tr[rho^{m}] = {denom:.2e} is numerically degenerate")
    num = complex(np.tensordot(power, h.to_matrix(), axes=([0, 1], [1, 0]))).real
    return MitigationResult(
        method=f"vd{m}",
        energy=num / denom,
        coefficients=(),
        metric_spectrum=(denom / 2**rho.n_qubits,),
        rank_kept=1,
    )


def build_gse_matrices(
    family: Sequence[DensityMatrix], h: PauliSum, spec: SubspaceSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the subspace Hamiltonian and metric (H_tilde, S_tilde).

    Fault: entries Tr[rho_i rho_j H] / 2^N and Tr[rho_i rho_j] / 2^N over
    the selected family members. Power: bases rho^0 .. rho^max_power of the
    single family member, so entries are the moments Tr[rho^(i+j) H] / 2^N
    and Tr[rho^(i+j)] / 2^N. Both outputs are Hermitian and S is PSD up to
    roundoff.
    """
    hmat = h.to_matrix()
    norm = 2 ** family[0].n_qubits

    if spec.kind == "fault":
        if any(i < 0 or i >= len(family) for i in spec.indices):
            raise ValueError(f"fault indices {spec.indices} out of range")
        states = [family[i].mat for i in spec.indices]
        k = len(states)
        hm = np.zeros((k, k), dtype=complex)
        sm = np.zeros((k, k), dtype=complex)
        for i in range(k):
            for j in range(k):
                prod = states[i] @ states[j]
                sm[i, j] = np.trace(prod) / norm
                hm[i, j] = np.tensordot(prod, hmat, axes=([0, 1], [1, 0])) / norm
    else:
        if len(family) != 1:
            raise ValueError("power subspace takes exactly one base state")
        rho = family[0].mat
        m = spec.max_power
        moments_s = np.empty(2 * m + 1, dtype=complex)
        moments_h = np.empty(2 * m + 1, dtype=complex)
        acc = np.eye(rho.shape[0], dtype=complex)
        for k in range(2 * m + 1):
            moments_s[k] = np.trace(acc) / norm
            moments_h[k] = np.tensordot(acc, hmat, axes=([0, 1], [1, 0])) / norm
            if k < 2 * m:
                acc = acc @ rho
        hm = np.array([[moments_h[i + j] for j in range(m + 1)] for i in range(m + 1)])
        sm = np.array([[moments_s[i + j] for j in range(m + 1)] for i in range(m + 1)])

    hm = 0.5 * (hm + hm.conj().T)
    sm = 0.5 * (sm + sm.conj().T)
    return hm, sm


def gse_from_matrices(
    hm: np.ndarray,
    sm: np.ndarray,
    rel_threshold: float = 1e-10,
    method: str = "gse",
) -> MitigationResult:
    """Solve the subspace pencil and report the minimal kept energy."""
    res = qcore.gen_eigh(hm, sm, rel_threshold)
    c = res.coefficients[:, 0]
    return MitigationResult(
        method=method,
        energy=float(res.energies[0]),
        coefficients=tuple(complex(x) for x in c),
        metric_spectrum=tuple(float(x) for x in res.s_eigenvalues),
        rank_kept=res.rank_kept,
    )


def gse_energy(
    family: Sequence[DensityMatrix],
    h: PauliSum,
    spec: SubspaceSpec,
    rel_threshold: float = 1e-10,
) -> MitigationResult:
    """Generalized subspace expansion energy for a fault or power subspace."""
    hm, sm = build_gse_matrices(family, h, spec)
    label = "gse_fault" if spec.kind == "fault" else f"gse_power{spec.max_power}"
    return gse_from_matrices(hm, sm, rel_threshold, method=label)
