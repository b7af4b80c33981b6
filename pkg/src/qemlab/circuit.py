"""Gate-level circuit IR, native-set transpilation, ansatz and Hamiltonian
builders, and the statevector-based parameter optimizer.

The native set is {sx, rz, cx} plus timing pseudo-gates {delay, barrier};
cz is accepted in the extended input set and lowered by ``transpile``.
Matrix conventions: sqrt(X), R_z(theta) = diag(1, exp(-i theta)) (virtual,
zero duration), and CX with the first listed qubit as control. Gates in a
``Circuit`` are listed in application order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import qcore

SX_MATRIX = (1 / np.sqrt(2)) * np.array(
    [
        [np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)],
        [np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)],
    ]
)
CX_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

EXTENDED_KINDS = frozenset({"sx", "rz", "cx", "cz", "delay", "barrier"})
NATIVE_KINDS = frozenset({"sx", "rz", "cx", "delay", "barrier"})
_ARITY = {"sx": 1, "rz": 1, "delay": 1, "barrier": 1, "cx": 2, "cz": 2}


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(-1j * theta)]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    ``param`` is the rz angle (a float, or a str naming a free parameter
    slot); it is None for every other kind. ``duration`` is in ns and is 0
    for rz (virtual) and barrier.
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | str | None = None
    duration: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in EXTENDED_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} expects {_ARITY[self.kind]} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind} on {self.qubits}")
        if self.duration < 0:
            raise ValueError("negative gate duration")
        if self.kind == "rz":
            if self.param is None:
                raise ValueError("rz needs an angle or parameter name")
            if self.duration != 0:
                raise ValueError("rz is virtual and must have zero duration")
        elif self.param is not None:
            raise ValueError(f"{self.kind} takes no parameter")


def sx(q: int, duration: float = 0.0) -> Gate:
    return Gate("sx", (q,), duration=duration)


def rz(q: int, angle: float | str) -> Gate:
    return Gate("rz", (q,), param=angle)


def cx(a: int, b: int, duration: float = 0.0) -> Gate:
    return Gate("cx", (a, b), duration=duration)


def cz(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


def delay(q: int, t: float) -> Gate:
    return Gate("delay", (q,), duration=t)


def barrier(q: int) -> Gate:
    return Gate("barrier", (q,))


@dataclass(frozen=True)
class Circuit:
    """Immutable ordered gate sequence with named rz parameter slots."""

    n_qubits: int
    gates: tuple[Gate, ...]
    parameters: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        names: list[str] = []
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} out of range for {self.n_qubits} qubits")
            if g.kind == "rz" and isinstance(g.param, str) and g.param not in names:
                names.append(g.param)
        if tuple(names) != tuple(self.parameters):
            raise ValueError(
                f"parameter list {self.parameters} does not match slots {tuple(names)}"
            )

    @property
    def is_bound(self) -> bool:
        return not self.parameters

    def bind(self, values: Sequence[float]) -> "Circuit":
        """Substitute numeric angles for the named parameter slots."""
        if len(values) != len(self.parameters):
            raise ValueError(
                f"expected {len(self.parameters)} parameters, got {len(values)}"
            )
        table = dict(zip(self.parameters, values))
        gates = tuple(
            replace(g, param=float(table[g.param]))
            if g.kind == "rz" and isinstance(g.param, str)
            else g
            for g in self.gates
        )
        return Circuit(self.n_qubits, gates, ())

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def kinds(self) -> set[str]:
        return {g.kind for g in self.gates}


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Pauli strings (Hermitian by construction)."""

    n_qubits: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        for coeff, s in self.terms:
            if len(s) != self.n_qubits or any(c not in "IXYZ" for c in s):
                raise ValueError(f"bad Pauli string {s!r} for {self.n_qubits} qubits")

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        for coeff, s in self.terms:
            m += coeff * qcore.kron_all([PAULI_MATRICES[c] for c in s])
        return m


def build_tfi(n: int, h: float) -> PauliSum:
    """Transverse-field Ising Hamiltonian H = -sum ZZ + h sum X on a ring.

    Bonds are the distinct undirected nearest-neighbour pairs of the ring,
    so n=2 has the single bond (0, 1).
    """
    if n < 2:
        raise ValueError("build_tfi needs n >= 2")
    bonds = sorted({tuple(sorted((r, (r + 1) % n))) for r in range(n)})
    terms: list[tuple[float, str]] = []
    for a, b in bonds:
        s = ["I"] * n
        s[a] = "Z"
        s[b] = "Z"
        terms.append((-1.0, "".join(s)))
    for r in range(n):
        s = ["I"] * n
        s[r] = "X"
        terms.append((float(h), "".join(s)))
    return PauliSum(n, tuple(terms))


def _param_layer(n: int, names: Iterable[str]) -> list[Gate]:
    """Two-angle rotation per qubit: sx, rz(a), sx, rz(b) in application order.

    Equivalent to an arbitrary RZ*RY rotation per qubit up to global phase.
    """
    it = iter(names)
    gates: list[Gate] = []
    for q in range(n):
        gates += [sx(q), rz(q, next(it)), sx(q), rz(q, next(it))]
    return gates


def build_ansatz(n: int, depth: int) -> Circuit:
    """Hardware-efficient fully entangled ansatz with 2n(depth+1) parameters.

    A two-angle rotation layer on every qubit, then ``depth`` repeated
    blocks of cz on all qubit pairs (ascending lexicographic order)
    followed by another rotation layer.
    """
    if n < 2:
        raise ValueError("build_ansatz needs n >= 2")
    if depth < 1:
        raise ValueError("build_ansatz needs depth >= 1")
    n_params = 2 * n * (depth + 1)
    names = [f"p{i}" for i in range(n_params)]
    k = iter(names)
    gates = _param_layer(n, (next(k) for _ in range(2 * n)))
    for _ in range(depth):
        for a in range(n):
            for b in range(a + 1, n):
                gates.append(cz(a, b))
        gates += _param_layer(n, (next(k) for _ in range(2 * n)))
    return Circuit(n, tuple(gates), tuple(names))


def _hadamard_native(q: int, sx_duration: float) -> list[Gate]:
    # H equals rz(-pi/2) sx rz(-pi/2) up to global phase
    return [rz(q, -np.pi / 2), sx(q, sx_duration), rz(q, -np.pi / 2)]


def transpile(c: Circuit, profile) -> Circuit:
    """Lower to the native set and stamp per-gate durations from ``profile``.

    cz(a, b) becomes H(b) cx(a, b) H(b); already-native gates pass through
    with refreshed durations. Idempotent on native circuits.
    """
    out: list[Gate] = []
    for g in c.gates:
        if g.kind == "sx":
            out.append(sx(g.qubits[0], profile.sx_duration))
        elif g.kind == "rz":
            out.append(g)
        elif g.kind == "cx":
            out.append(cx(*g.qubits, duration=profile.cx_duration))
        elif g.kind == "cz":
            a, b = g.qubits
            out += _hadamard_native(b, profile.sx_duration)
            out.append(cx(a, b, duration=profile.cx_duration))
            out += _hadamard_native(b, profile.sx_duration)
        elif g.kind in ("delay", "barrier"):
            out.append(g)
        else:  # pragma: no cover - Gate already rejects unknown kinds
            raise ValueError(f"no lowering rule for gate kind {g.kind!r}")
    return Circuit(c.n_qubits, tuple(out), c.parameters)


def gate_matrix(g: Gate) -> np.ndarray | None:
    """Local unitary of a bound gate; None for the timing pseudo-gates."""
    if g.kind == "sx":
        return SX_MATRIX
    if g.kind == "rz":
        if isinstance(g.param, str):
            raise ValueError(f"unbound parameter {g.param!r}")
        return rz_matrix(float(g.param))
    if g.kind == "cx":
        return CX_MATRIX
    if g.kind == "cz":
        return CZ_MATRIX
    return None


def _apply_gate_tensor(t: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply a bound gate to a (2,)*n + trailing-axes tensor on its bra axes."""
    m = gate_matrix(g)
    if m is None:
        return t
    if len(g.qubits) == 1:
        q = g.qubits[0]
        out = np.tensordot(m, t, axes=([1], [q]))
        return np.moveaxis(out, 0, q)
    a, b = g.qubits
    m4 = m.reshape(2, 2, 2, 2)
    out = np.tensordot(m4, t, axes=([2, 3], [a, b]))
    return np.moveaxis(out, [0, 1], [a, b])


def apply_to_statevector(c: Circuit, psi: np.ndarray) -> np.ndarray:
    """Apply the circuit's unitary to a statevector (timing gates ignored)."""
    if not c.is_bound:
        raise ValueError("circuit has unbound parameters")
    t = np.asarray(psi, dtype=complex).reshape((2,) * c.n_qubits)
    for g in c.gates:
        t = _apply_gate_tensor(t, g, c.n_qubits)
    return t.reshape(-1)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a bound circuit (for oracles and equivalence checks)."""
    if not c.is_bound:
        raise ValueError("circuit has unbound parameters")
    dim = 2**c.n_qubits
    t = np.eye(dim, dtype=complex).reshape((2,) * c.n_qubits + (dim,))
    for g in c.gates:
        t = _apply_gate_tensor(t, g, c.n_qubits)
    return t.reshape(dim, dim)


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def statevector_energy(c: Circuit, h: PauliSum, params: Sequence[float]) -> float:
    """Noiseless <psi(params)| H |psi(params)> from the |0...0> start state."""
    psi = apply_to_statevector(c.bind(params), zero_state(c.n_qubits))
    val = complex(psi.conj() @ (h.to_matrix() @ psi))
    if abs(val.imag) > 1e-8:
        raise ValueError(f"energy has imaginary part {val.imag:.3e}")
    return float(val.real)


class OptimizeError(RuntimeError):
    """Optimizer failed to reach the target; carries the best point found."""

    def __init__(self, message: str, best_params: np.ndarray, best_energy: float):
        super().__init__(message)
        self.best_params = best_params
        self.best_energy = best_energy


# generator piece of d/dtheta rz(theta) = rz(theta) @ _RZ_GEN
_RZ_GEN = np.diag([0.0, -1j]).astype(complex)


def _energy_and_grad(
    c: Circuit, x: np.ndarray, hmat: np.ndarray
) -> tuple[float, np.ndarray]:
    """Adjoint-method energy and exact gradient for the bound circuit."""
    n = c.n_qubits
    index = {name: i for i, name in enumerate(c.parameters)}
    bound = c.bind(x)
    psi = apply_to_statevector(bound, zero_state(n))
    e = float(np.real(psi.conj() @ (hmat @ psi)))
    lam = (hmat @ psi).reshape((2,) * n)
    psi_t = psi.reshape((2,) * n)
    grad = np.zeros(len(x))
    for g_b, g_u in zip(reversed(bound.gates), reversed(c.gates)):
        m = gate_matrix(g_b)
        if m is None:
            continue
        md = m.conj().T
        if len(g_b.qubits) == 1:
            q = g_b.qubits[0]
            psi_t = np.moveaxis(np.tensordot(md, psi_t, axes=([1], [q])), 0, q)
            if g_b.kind == "rz" and isinstance(g_u.param, str):
                d = np.moveaxis(np.tensordot(_RZ_GEN, psi_t, axes=([1], [q])), 0, q)
                d = np.moveaxis(np.tensordot(m, d, axes=([1], [q])), 0, q)
                grad[index[g_u.param]] += 2.0 * float(np.real(np.vdot(lam, d)))
            lam = np.moveaxis(np.tensordot(md, lam, axes=([1], [q])), 0, q)
        else:
            a, b = g_b.qubits
            m4 = md.reshape(2, 2, 2, 2)
            psi_t = np.moveaxis(np.tensordot(m4, psi_t, axes=([2, 3], [a, b])), [0, 1], [a, b])
            lam = np.moveaxis(np.tensordot(m4, lam, axes=([2, 3], [a, b])), [0, 1], [a, b])
    return e, grad


def optimize(
    c: Circuit,
    h: PauliSum,
    seed: int,
    restarts: int = 8,
    maxiter: int = 4000,
) -> np.ndarray:
    """Seeded multi-start search for ground-state ansatz parameters.

    Runs L-BFGS-B with exact adjoint gradients from ``restarts`` uniform
    starts, stopping early once the energy is within 5e-4 of the exact
    ground energy. Returns the best parameters if they land within
    max(5e-4, 1e-3 * |E_exact|) of the exact value, otherwise raises
    OptimizeError carrying the best point found. Deterministic given
    ``seed``.
    """
    hmat = h.to_matrix()
    e_exact = float(np.linalg.eigvalsh(hmat)[0])
    tight = 5e-4
    accept = max(tight, 1e-3 * abs(e_exact))
    rng = np.random.default_rng(seed)
    best_e = np.inf
    best_x = np.zeros(len(c.parameters))
    for _ in range(max(1, restarts)):
        x0 = rng.uniform(0.0, 2.0 * np.pi, len(c.parameters))
        res = minimize(
            lambda x: _energy_and_grad(c, x, hmat),
            x0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-12},
        )
        if res.fun < best_e:
            best_e, best_x = float(res.fun), np.asarray(res.x)
        if best_e - e_exact <= tight:
            break
    if best_e - e_exact <= accept:
        return best_x
    raise OptimizeError(
        f"optimizer reached {best_e:.6f}, exact {e_exact:.6f}, "
        f"gap {best_e - e_exact:.3e} > {accept:.1e} after {restarts} restarts",
        best_params=best_x,
        best_energy=best_e,
    )


def save_parameters(
    path,
    n_qubits: int,
    depth: int,
    seed: int,
    energy: float,
    parameters: Sequence[float],
) -> None:
    """Persist optimized parameters as JSON with 17 significant digits."""
    params = ",\n".join(f"    {p:.17g}" for p in parameters)
    text = (
        "{\n"
        f'  "n_qubits": {n_qubits},\n'
        f'  "depth": {depth},\n'
        f'  "seed": {seed},\n'
        f'  "energy": {energy:.17g},\n'
        f'  "parameters": [\n{params}\n  ]\n'
        "}\n"
    )
    with open(path, "w") as f:
        f.write(text)


def load_parameters(path) -> dict:
    with open(path) as f:
        data = json.load(f)
    required = {"n_qubits", "depth", "seed", "energy", "parameters"}
    missing = required - data.keys()
    if missing:
        raise ValueError(f"parameter file missing keys: {sorted(missing)}")
    data["parameters"] = np.asarray(data["parameters"], dtype=float)
    return data
