"""CPTP noise channels, device profiles, and the noisy density-matrix
simulator.

Noise placement: every driven gate (sx, cx) is followed by T1 and T2
decoherence on all qubits for the gate's duration, so idle qubits decay
while others are driven, plus a single-qubit depolarizing channel on each
operand. A delay decoheres only its own qubit: per-qubit delays are
scheduled concurrently, so a buffer appended to every qubit costs one
buffer of wall time, not n. rz is virtual (instantaneous and noiseless);
barrier is ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from . import qcore
from .circuit import (
    CX_MATRIX,
    PAULI_MATRICES,
    SX_MATRIX,
    Circuit,
    PauliSum,
    rz_matrix,
)

Edge = tuple[int, int]

_PROFILE_KEYS = {
    "n_qubits",
    "t1",
    "t2",
    "sx_duration",
    "cx_duration",
    "sx_depol",
    "cx_depol",
    "coupling_edges",
    "crosstalk",
}


def _norm_edge(e: Sequence[int]) -> Edge:
    a, b = int(e[0]), int(e[1])
    if a == b:
        raise ValueError(f"self-loop edge ({a}, {b})")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class DeviceProfile:
    """Hardware-style noise and timing parameters.

    Durations are in ns, depolarizing rates are probabilities per gate
    application, t1/t2 are per-qubit. Crosstalk entries pair a system
    coupling edge with an environment edge and the multiplicative factor
    applied to cx_depol when the two run concurrently.
    """

    n_qubits: int
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    sx_duration: float
    cx_duration: float
    sx_depol: float
    cx_depol: float
    coupling_edges: tuple[Edge, ...]
    crosstalk: tuple[tuple[Edge, Edge, float], ...] = ()

    def __post_init__(self) -> None:
        n = self.n_qubits
        if len(self.t1) != n or len(self.t2) != n:
            raise ValueError("t1/t2 must list one value per qubit")
        for q, (a, b) in enumerate(zip(self.t1, self.t2)):
            if a <= 0 or b <= 0:
                raise ValueError(f"qubit {q}: t1 and t2 must be positive")
            if b > 2 * a + 1e-9:
                raise ValueError(f"qubit {q}: t2 ={b} exceeds 2*t1 ={2 * a}")
        if self.sx_duration < 0 or self.cx_duration < 0:
            raise ValueError("durations must be nonnegative")
        for name, p in (("sx_depol", self.sx_depol), ("cx_depol", self.cx_depol)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} = {p} outside [0, 1]")
        seen = set()
        for e in self.coupling_edges:
            if e[0] < 0 or e[1] >= n or e[0] >= e[1]:
                raise ValueError(f"bad coupling edge {e}")
            if e in seen:
                raise ValueError(f"duplicate coupling edge {e}")
            seen.add(e)
        for sys_e, env_e, factor in self.crosstalk:
            if factor < 1.0:
                raise ValueError(f"crosstalk factor {factor} below 1")
            if sys_e not in seen or env_e not in seen:
                raise ValueError(f"crosstalk edge pair ({sys_e}, {env_e}) not in coupling graph")

    def crosstalk_factor(self, sys_edge: Edge, env_edge: Edge) -> float | None:
        for s, e, f in self.crosstalk:
            if s == sys_edge and e == env_edge:
                return f
        return None

    @classmethod
    def from_dict(cls, data: Mapping) -> "DeviceProfile":
        unknown = set(data) - _PROFILE_KEYS
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        missing = (_PROFILE_KEYS - {"crosstalk"}) - set(data)
        if missing:
            raise ValueError(f"profile missing keys: {sorted(missing)}")
        n = int(data["n_qubits"])

        def per_qubit(v) -> tuple[float, ...]:
            if isinstance(v, (int, float)):
                return (float(v),) * n
            return tuple(float(x) for x in v)

        return cls(
            n_qubits=n,
            t1=per_qubit(data["t1"]),
            t2=per_qubit(data["t2"]),
            sx_duration=float(data["sx_duration"]),
            cx_duration=float(data["cx_duration"]),
            sx_depol=float(data["sx_depol"]),
            cx_depol=float(data["cx_depol"]),
            coupling_edges=tuple(_norm_edge(e) for e in data["coupling_edges"]),
            crosstalk=tuple(
                (_norm_edge(s), _norm_edge(e), float(f))
                for s, e, f in data.get("crosstalk", ())
            ),
        )

    @classmethod
    def from_file(cls, path) -> "DeviceProfile":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def default(cls) -> "DeviceProfile":
        text = resources.files("qemlab.data").joinpath("default_profile.json").read_text()
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace Hermitian PSD state on ``n_qubits`` qubits."""

    n_qubits: int
    mat: np.ndarray

    def __post_init__(self) -> None:
        dim = 2**self.n_qubits
        m = np.asarray(self.mat, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match {self.n_qubits} qubits")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    def validate(self, psd: bool = True) -> "DensityMatrix":
        tr = complex(np.trace(self.mat))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace {tr} deviates from 1")
        if qcore.hermitian_defect(self.mat) > 1e-10:
            raise ValueError("state is not Hermitian")
        if psd:
            w = np.linalg.eigvalsh(0.5 * (self.mat + self.mat.conj().T))
            if w[0] < -1e-9:
                raise ValueError(f"state has negative eigenvalue {w[0]:.3e}")
        return self

    def purity(self) -> float:
        return float(np.real(np.tensordot(self.mat, self.mat, axes=([0, 1], [1, 0]))))

    @classmethod
    def from_statevector(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        n = int(round(np.log2(psi.size)))
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def ground(cls, n: int) -> "DensityMatrix":
        m = np.zeros((2**n, 2**n), dtype=complex)
        m[0, 0] = 1.0
        return cls(n, m)


# Kraus operator sets, exposed for completeness checks. The channel
# implementations below use equivalent elementwise updates.

def depolarize_kraus(p: float) -> list[np.ndarray]:
    return [
        np.sqrt(1 - p) * PAULI_MATRICES["I"],
        np.sqrt(p / 3) * PAULI_MATRICES["X"],
        np.sqrt(p / 3) * PAULI_MATRICES["Y"],
        np.sqrt(p / 3) * PAULI_MATRICES["Z"],
    ]


def amplitude_damp_kraus(t: float, t1: float) -> list[np.ndarray]:
    gamma = 1.0 - np.exp(-t / t1)
    return [
        np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def dephase_kraus(t: float, t2: float) -> list[np.ndarray]:
    f = np.exp(-t / t2)
    return [
        np.sqrt((1 + f) / 2) * PAULI_MATRICES["I"],
        np.sqrt((1 - f) / 2) * PAULI_MATRICES["Z"],
    ]


def _slices(n: int, q: int):
    """Index tuples for the four single-qubit blocks of a (2,)*2n tensor."""
    def at(i: int, j: int):
        ix: list = [slice(None)] * (2 * n)
        ix[q] = i
        ix[n + q] = j
        return tuple(ix)

    return at(0, 0), at(1, 1), at(0, 1), at(1, 0)


def _depolarize_t(rt: np.ndarray, n: int, q: int, p: float) -> None:
    """In-place single-qubit depolarizing: (1-p) rho + p/3 (X.X + Y.Y + Z.Z)."""
    if p == 0.0:
        return
    pp = 4.0 * p / 3.0  # rho -> (1-pp) rho + pp I/2 tr_q
    i00, i11, i01, i10 = _slices(n, q)
    t = 0.5 * pp * (rt[i00] + rt[i11])
    rt[i00] *= 1.0 - pp
    rt[i00] += t
    rt[i11] *= 1.0 - pp
    rt[i11] += t
    rt[i01] *= 1.0 - pp
    rt[i10] *= 1.0 - pp


def _amplitude_damp_t(rt: np.ndarray, n: int, q: int, gamma: float) -> None:
    """In-place T1 relaxation: populations flow |1> to |0>, off-diagonals
    scale by sqrt(1-gamma)."""
    if gamma == 0.0:
        return
    i00, i11, i01, i10 = _slices(n, q)
    rt[i00] += gamma * rt[i11]
    rt[i11] *= 1.0 - gamma
    off = np.sqrt(1.0 - gamma)
    rt[i01] *= off
    rt[i10] *= off


def _dephase_t(rt: np.ndarray, n: int, q: int, f: float) -> None:
    """In-place T2 phase damping: off-diagonals scale by f, diagonal kept."""
    if f == 1.0:
        return
    _, _, i01, i10 = _slices(n, q)
    rt[i01] *= f
    rt[i10] *= f


def _apply_unitary_t(rt: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """rho -> U rho U^dag on the given qubits of a (2,)*2n tensor."""
    if len(qubits) == 1:
        q = qubits[0]
        t = np.moveaxis(np.tensordot(u, rt, axes=([1], [q])), 0, q)
        t = np.moveaxis(np.tensordot(u.conj(), t, axes=([1], [n + q])), 0, n + q)
        return t
    a, b = qubits
    u4 = u.reshape(2, 2, 2, 2)
    t = np.moveaxis(np.tensordot(u4, rt, axes=([2, 3], [a, b])), [0, 1], [a, b])
    uc = u.conj().reshape(2, 2, 2, 2)
    t = np.moveaxis(np.tensordot(uc, t, axes=([2, 3], [n + a, n + b])), [0, 1], [n + a, n + b])
    return t


def _channel_op(rho: DensityMatrix, qubit: int, update) -> DensityMatrix:
    n = rho.n_qubits
    if qubit < 0 or qubit >= n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    rt = rho.mat.reshape((2,) * (2 * n)).copy()
    update(rt, n, qubit)
    return DensityMatrix(n, rt.reshape(2**n, 2**n))


def depolarize(rho: DensityMatrix, qubit: int, p: float) -> DensityMatrix:
    """Single-qubit depolarizing channel with error probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    return _channel_op(rho, qubit, lambda rt, n, q: _depolarize_t(rt, n, q, p))


def amplitude_damp(rho: DensityMatrix, qubit: int, t: float, t1: float) -> DensityMatrix:
    """T1 amplitude damping for duration t with relaxation time t1."""
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    if t < 0:
        raise ValueError("duration must be nonnegative")
    gamma = 1.0 - np.exp(-t / t1)
    return _channel_op(rho, qubit, lambda rt, n, q: _amplitude_damp_t(rt, n, q, gamma))


def dephase(rho: DensityMatrix, qubit: int, t: float, t2: float) -> DensityMatrix:
    """T2 phase damping for duration t with coherence time t2."""
    if t2 <= 0:
        raise ValueError("t2 must be positive")
    if t < 0:
        raise ValueError("duration must be nonnegative")
    f = np.exp(-t / t2)
    return _channel_op(rho, qubit, lambda rt, n, q: _dephase_t(rt, n, q, f))


def _decohere_one(
    rt: np.ndarray, n: int, q: int, duration: float, profile: DeviceProfile
) -> None:
    gamma = 1.0 - np.exp(-duration / profile.t1[q])
    _amplitude_damp_t(rt, n, q, gamma)
    _dephase_t(rt, n, q, np.exp(-duration / profile.t2[q]))


def _decohere_all(rt: np.ndarray, n: int, duration: float, profile: DeviceProfile) -> None:
    if duration == 0.0:
        return
    for q in range(n):
        _decohere_one(rt, n, q, duration, profile)


def simulate(
    c: Circuit,
    profile: DeviceProfile,
    noisy: bool = True,
    crosstalk_schedule: Mapping[int, Sequence[Edge]] | None = None,
    pauli_stretch: float = 1.0,
    initial: DensityMatrix | None = None,
) -> DensityMatrix:
    """Run a transpiled circuit on the density-matrix simulator.

    ``crosstalk_schedule`` maps gate indices of cx gates to the environment
    edges running concurrently; each listed edge multiplies that gate's
    depolarizing rate by the profile's crosstalk factor. ``pauli_stretch``
    s > 1 inserts, after each noisy gate, an extra mixed-Pauli channel with
    insertion probability (s - 1) times the gate's depolarizing rate.
    The start state is |0...0> unless ``initial`` is given.

    Noise model details are in the module docstring.
    """
    if not c.is_bound:
        raise ValueError("circuit has unbound parameters")
    bad = c.kinds() - {"sx", "rz", "cx", "delay", "barrier"}
    if bad:
        raise ValueError(f"untranspiled gate kinds: {sorted(bad)}")
    if profile.n_qubits < c.n_qubits:
        raise ValueError(
            f"profile covers {profile.n_qubits} qubits, circuit needs {c.n_qubits}"
        )
    if pauli_stretch < 1.0:
        raise ValueError("pauli_stretch must be >= 1")
    schedule = dict(crosstalk_schedule or {})
    for idx, env_edges in schedule.items():
        if idx < 0 or idx >= len(c.gates) or c.gates[idx].kind != "cx":
            raise ValueError(f"schedule index {idx} does not name a cx gate")

    n = c.n_qubits
    if initial is None:
        rt = np.zeros((2,) * (2 * n), dtype=complex)
        rt[(0,) * (2 * n)] = 1.0
    else:
        if initial.n_qubits != n:
            raise ValueError("initial state size does not match the circuit")
        rt = initial.mat.reshape((2,) * (2 * n)).copy()

    def extra_stretch(q: int, base: float) -> None:
        if pauli_stretch > 1.0 and base > 0.0:
            p_ins = (pauli_stretch - 1.0) * base
            if p_ins > 1.0:
                raise ValueError(
                    f"stretched Pauli insertion probability {p_ins:.3f} exceeds 1"
                )
            _depolarize_t(rt, n, q, p_ins)

    for i, g in enumerate(c.gates):
        if g.kind == "barrier":
            continue
        if g.kind == "rz":
            rt = _apply_unitary_t(rt, rz_matrix(float(g.param)), g.qubits, n)
            continue
        if g.kind == "sx":
            rt = _apply_unitary_t(rt, SX_MATRIX, g.qubits, n)
            if noisy:
                _depolarize_t(rt, n, g.qubits[0], profile.sx_depol)
                extra_stretch(g.qubits[0], profile.sx_depol)
        elif g.kind == "cx":
            rt = _apply_unitary_t(rt, CX_MATRIX, g.qubits, n)
            if noisy:
                p = profile.cx_depol
                sys_edge = _norm_edge(g.qubits)
                for env_edge in schedule.get(i, ()):
                    factor = profile.crosstalk_factor(sys_edge, _norm_edge(env_edge))
                    if factor is None:
                        raise ValueError(
                            f"no crosstalk entry for system edge {sys_edge} "
                            f"with environment edge {tuple(env_edge)}"
                        )
                    p *= factor
                if p > 1.0:
                    raise ValueError(f"boosted cx depolarizing rate {p:.3f} exceeds 1")
                for q in g.qubits:
                    _depolarize_t(rt, n, q, p)
                    extra_stretch(q, p)
        if noisy:
            if g.kind == "delay":
                # concurrent idles: a delay decoheres only its own qubit
                if g.duration > 0.0:
                    _decohere_one(rt, n, g.qubits[0], g.duration, profile)
            else:
                # driven gates advance the wall clock for every qubit
                _decohere_all(rt, n, g.duration, profile)

    return DensityMatrix(n, rt.reshape(2**n, 2**n)).validate()


def expectation(rho: DensityMatrix, o: PauliSum) -> float:
    """Tr[rho O] for a Hermitian Pauli-sum observable."""
    if o.n_qubits != rho.n_qubits:
        raise ValueError(
            f"observable on {o.n_qubits} qubits, state on {rho.n_qubits}"
        )
    val = complex(np.tensordot(rho.mat, o.to_matrix(), axes=([0, 1], [1, 0])))
    if abs(val.imag) > 1e-8:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)
