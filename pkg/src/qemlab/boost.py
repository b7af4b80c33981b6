"""Hardware-oriented noise boosting: the four knobs that turn one noisy
circuit into a family of states with different error rates.

Every booster leaves the noiseless unitary action on the system qubits
unchanged; only the noise accumulated during simulation grows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import qcore
from .circuit import Circuit, Gate, NATIVE_KINDS, cx, delay
from .noise import DensityMatrix, DeviceProfile, Edge, simulate

FLAVORS = ("decoherence", "gate_repetition", "crosstalk", "probabilistic")


@dataclass(frozen=True)
class BoostSpec:
    """One noise-boost setting: flavor plus its magnitude.

    Magnitude meaning by flavor: buffer ns (decoherence), repetition count
    K (gate_repetition), environment edges per cx (crosstalk), Pauli
    stretch factor (probabilistic, >= 1).
    """

    flavor: str
    magnitude: float

    def __post_init__(self) -> None:
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown boost flavor {self.flavor!r}")
        if self.magnitude < 0:
            raise ValueError("boost magnitude must be nonnegative")
        if self.flavor in ("gate_repetition", "crosstalk") and self.magnitude != int(self.magnitude):
            raise ValueError(f"{self.flavor} magnitude must be an integer")
        if self.flavor == "probabilistic" and self.magnitude < 1.0:
            raise ValueError("probabilistic stretch must be >= 1")

    @classmethod
    def base(cls) -> "BoostSpec":
        return cls("decoherence", 0.0)


def _require_native(c: Circuit) -> None:
    bad = c.kinds() - NATIVE_KINDS
    if bad:
        raise ValueError(f"circuit must be transpiled first, found {sorted(bad)}")


def boost_decoherence(c: Circuit, buffer: float) -> Circuit:
    """Append an idle delay of ``buffer`` ns on every qubit after the last gate."""
    if buffer < 0:
        raise ValueError("buffer must be nonnegative")
    _require_native(c)
    gates = list(c.gates) + [delay(q, buffer) for q in range(c.n_qubits)]
    return Circuit(c.n_qubits, tuple(gates), c.parameters)


def boost_gate_repetition(c: Circuit, k: int) -> Circuit:
    """Replace every cx by 2k+1 identical copies (cx squares to identity)."""
    if k < 0:
        raise ValueError("repetition count must be nonnegative")
    _require_native(c)
    gates: list[Gate] = []
    for g in c.gates:
        gates += [g] * (2 * k + 1) if g.kind == "cx" else [g]
    return Circuit(c.n_qubits, tuple(gates), c.parameters)


def boost_crosstalk(
    c: Circuit, profile: DeviceProfile, level: int
) -> tuple[Circuit, dict[int, tuple[Edge, ...]]]:
    """Schedule environment cx gates concurrently with every system cx.

    Activates ``level`` environment edges (from the profile's crosstalk map,
    in listed order) per system cx. Environment qubits are appended after
    the system qubits with compacted indices; the emitted environment gates
    carry zero duration since they share the system gate's time slot. The
    returned schedule maps gate indices of the boosted circuit to the
    concurrent environment edges (device labels) and is consumed by
    ``noise.simulate``.
    """
    if level < 0:
        raise ValueError("crosstalk level must be nonnegative")
    _require_native(c)
    if level == 0:
        return c, {}
    if not profile.crosstalk:
        raise ValueError("profile has no crosstalk entries")

    n_sys = c.n_qubits
    chosen: dict[Edge, list[Edge]] = {}
    env_index: dict[int, int] = {}
    for g in c.gates:
        if g.kind != "cx":
            continue
        edge = (min(g.qubits), max(g.qubits))
        if edge in chosen:
            continue
        env_edges = [e for s, e, _ in profile.crosstalk if s == edge]
        if len(env_edges) < level:
            raise ValueError(
                f"level {level} exceeds the {len(env_edges)} environment edges "
                f"available for system edge {edge}"
            )
        picked = env_edges[:level]
        for e in picked:
            for q in e:
                if q < n_sys:
                    raise ValueError(f"environment qubit {q} overlaps the system register")
                if q not in env_index:
                    env_index[q] = n_sys + len(env_index)
        chosen[edge] = picked

    gates: list[Gate] = []
    schedule: dict[int, tuple[Edge, ...]] = {}
    for g in c.gates:
        gates.append(g)
        if g.kind != "cx":
            continue
        edge = (min(g.qubits), max(g.qubits))
        schedule[len(gates) - 1] = tuple(chosen[edge])
        for e in chosen[edge]:
            gates.append(cx(env_index[e[0]], env_index[e[1]], duration=0.0))
    boosted = Circuit(n_sys + len(env_index), tuple(gates), c.parameters)
    return boosted, schedule


@dataclass(frozen=True)
class ProbabilisticBoost:
    """Simulation directive: apply the exact mixed-Pauli insertion channel
    after every noisy gate, scaled by (stretch - 1) relative to the gate's
    depolarizing rate."""

    circuit: Circuit
    stretch: float

    def __post_init__(self) -> None:
        if self.stretch < 1.0:
            raise ValueError("stretch must be >= 1")


def boost_probabilistic(c: Circuit, stretch: float) -> ProbabilisticBoost:
    """Package a circuit with a Pauli-stretch directive for the simulator."""
    _require_native(c)
    return ProbabilisticBoost(circuit=c, stretch=float(stretch))


def make_fault_family(
    c: Circuit, specs: Sequence[BoostSpec], profile: DeviceProfile
) -> list[DensityMatrix]:
    """Simulate one noisy state per boost spec, all reduced to the system
    qubits. By convention the first spec is the unboosted base."""
    if not specs:
        raise ValueError("need at least one boost spec")
    _require_native(c)
    family: list[DensityMatrix] = []
    for spec in specs:
        if spec.flavor == "decoherence":
            rho = simulate(boost_decoherence(c, spec.magnitude), profile, noisy=True)
        elif spec.flavor == "gate_repetition":
            rho = simulate(boost_gate_repetition(c, int(spec.magnitude)), profile, noisy=True)
        elif spec.flavor == "crosstalk":
            boosted, schedule = boost_crosstalk(c, profile, int(spec.magnitude))
            full = simulate(boosted, profile, noisy=True, crosstalk_schedule=schedule)
            reduced = qcore.partial_trace(full.mat, range(c.n_qubits), full.n_qubits)
            rho = DensityMatrix(c.n_qubits, reduced).validate()
        else:  # probabilistic
            directive = boost_probabilistic(c, spec.magnitude)
            rho = simulate(
                directive.circuit, profile, noisy=True, pauli_stretch=directive.stretch
            )
        family.append(rho)
    return family
