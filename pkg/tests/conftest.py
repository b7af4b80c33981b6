"""Shared fixtures: random states, the default profile, and a session-wide
cache of optimized ansatz parameters (the expensive ingredient)."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from qemlab.circuit import OptimizeError, build_ansatz, build_tfi, optimize
from qemlab.noise import DensityMatrix, DeviceProfile


def random_density_matrix(n: int, rng: np.random.Generator) -> DensityMatrix:
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return DensityMatrix(n, m / np.trace(m).real)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


@pytest.fixture(scope="session")
def profile() -> DeviceProfile:
    return DeviceProfile.default()


@pytest.fixture(scope="session")
def ansatz_params():
    """Memoized optimizer: ansatz_params(n, depth, seed) -> parameter vector.

    Optimizer failures (shallow depths that cannot express the ground
    state) fall back to the best point found, matching the sweep runner.
    """

    @functools.lru_cache(maxsize=None)
    def get(n: int, depth: int, seed: int = 0) -> tuple[float, ...]:
        circ = build_ansatz(n, depth)
        ham = build_tfi(n, 1.0)
        try:
            params = optimize(circ, ham, seed=seed)
        except OptimizeError as err:
            params = err.best_params
        return tuple(float(p) for p in params)

    return get
