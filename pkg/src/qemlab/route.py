"""Entangled-measurement machinery and qubit routing.

Two-copy overlaps Tr[rho1 rho2] are measurable because the swap operator
factorizes per qubit pair as B_sigma^dag D B_sigma with diagonal D: apply
B_sigma on every pair, then read the diagonal observable. On linear
hardware the two copy registers must first be interleaved; the alternating
swap network does that with n(n-1)/2 adjacent swaps, and a greedy
move-to-adjacency router stands in for a generic transpiler baseline.

All gate-count ledgers price a swap at 3 cx.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from . import qcore
from .circuit import Circuit, Gate, PauliSum, circuit_unitary, cx, rz, sx, transpile
from .noise import DensityMatrix, DeviceProfile, simulate

SWAP_CX_COST = 3
BSIGMA_CX_COST = 4

ROUTINGS = ("none", "alternating", "greedy")


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected simple coupling graph with optional physical labels."""

    n_qubits: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < b < self.n_qubits):
                raise ValueError(f"bad edge ({a}, {b}) for {self.n_qubits} nodes")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
        if self.labels is not None and len(self.labels) != self.n_qubits:
            raise ValueError("labels must cover every node")

    def has_edge(self, a: int, b: int) -> bool:
        e = (a, b) if a < b else (b, a)
        return e in set(self.edges)

    def neighbors(self, q: int) -> list[int]:
        out = [b for a, b in self.edges if a == q] + [a for a, b in self.edges if b == q]
        return sorted(out)

    def is_connected(self) -> bool:
        if self.n_qubits == 0:
            return True
        seen = {0}
        frontier = [0]
        while frontier:
            q = frontier.pop()
            for nb in self.neighbors(q):
                if nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        return len(seen) == self.n_qubits

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path from a to b inclusive; raises if disconnected."""
        if a == b:
            return [a]
        prev = {a: a}
        frontier = [a]
        while frontier:
            nxt = []
            for q in frontier:
                for nb in self.neighbors(q):
                    if nb not in prev:
                        prev[nb] = q
                        if nb == b:
                            path = [b]
                            while path[-1] != a:
                                path.append(prev[path[-1]])
                            return path[::-1]
                        nxt.append(nb)
            frontier = nxt
        raise ValueError(f"no path between {a} and {b}, graph is disconnected")

    def find_path(self, length: int) -> list[int]:
        """First simple path with ``length`` nodes, deterministic DFS order."""
        if length > self.n_qubits:
            raise ValueError(f"graph has only {self.n_qubits} nodes, need {length}")

        def extend(path: list[int], used: set[int]) -> list[int] | None:
            if len(path) == length:
                return path
            for nb in self.neighbors(path[-1]):
                if nb not in used:
                    found = extend(path + [nb], used | {nb})
                    if found:
                        return found
            return None

        for start in range(self.n_qubits):
            found = extend([start], {start})
            if found:
                return found
        raise ValueError(f"no simple path with {length} nodes found")

    @classmethod
    def line(cls, n: int) -> "CouplingGraph":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def heavy_hex_27(cls) -> "CouplingGraph":
        text = resources.files("qemlab.data").joinpath("heavy_hex_27.json").read_text()
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, data) -> "CouplingGraph":
        unknown = set(data) - {"n_qubits", "edges", "labels"}
        if unknown:
            raise ValueError(f"unknown graph keys: {sorted(unknown)}")
        edges = tuple(tuple(sorted((int(a), int(b)))) for a, b in data["edges"])
        labels = tuple(data["labels"]) if data.get("labels") else None
        return cls(int(data["n_qubits"]), edges, labels)

    @classmethod
    def from_file(cls, path) -> "CouplingGraph":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class GateLedger:
    """CX accounting split into ansatz, swap overhead, and basis transform."""

    g_vqe: int
    g_swap_total: int
    g_derange: int
    g_tot: int

    def __post_init__(self) -> None:
        if self.g_tot != self.g_vqe + self.g_swap_total + self.g_derange:
            raise ValueError("ledger total does not match its parts")

    @classmethod
    def make(cls, g_vqe: int = 0, g_swap_total: int = 0, g_derange: int = 0) -> "GateLedger":
        return cls(g_vqe, g_swap_total, g_derange, g_vqe + g_swap_total + g_derange)


def swap_diag() -> tuple[np.ndarray, np.ndarray]:
    """The basis change B_sigma and sign matrix D with B^dag D B = SWAP."""
    s = 1 / np.sqrt(2)
    b = np.array(
        [[1, 0, 0, 0], [0, s, -s, 0], [0, s, s, 0], [0, 0, 0, 1]], dtype=complex
    )
    d = np.diag([1.0, -1.0, 1.0, 1.0]).astype(complex)
    return b, d


@functools.lru_cache(maxsize=8)
def _derangement_cached(n: int) -> np.ndarray:
    dim = 2**n
    lam = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            lam[j * dim + i, i * dim + j] = 1.0
    lam.flags.writeable = False
    return lam


def derangement_operator(n: int) -> np.ndarray:
    """Copy-exchange permutation on 2n qubits: Lambda |i>|j> = |j>|i>."""
    return _derangement_cached(n)


def derangement_trace(
    rho1: DensityMatrix, rho2: DensityMatrix, o: PauliSum | None = None
) -> float:
    """Tr[Lambda (rho1 x rho2)], or Re Tr[(O x I) Lambda (rho1 x rho2)].

    Computed through the explicit 2n-qubit construction; equals the direct
    traces Tr[rho1 rho2] and Tr[O rho2 rho1].
    """
    if rho1.n_qubits != rho2.n_qubits:
        raise ValueError("copies must have equal qubit counts")
    n = rho1.n_qubits
    lam = derangement_operator(n)
    x = qcore.kron(rho1.mat, rho2.mat)
    if o is not None:
        if o.n_qubits != n:
            raise ValueError("observable size mismatch")
        lam = qcore.kron(o.to_matrix(), np.eye(2**n)) @ lam
    val = complex(np.tensordot(lam, x, axes=([0, 1], [1, 0])))
    if o is None and abs(val.imag) > 1e-8:
        raise ValueError(f"overlap has imaginary part {val.imag:.3e}")
    return float(val.real)


def _ry_native(q: int, theta: float) -> list[Gate]:
    # RY(theta) equals rz(-pi) sx rz(-(theta+pi)) sx up to global phase
    return [sx(q), rz(q, -(theta + np.pi)), sx(q), rz(q, -np.pi)]


def bsigma_gates(a: int, b: int) -> list[Gate]:
    """Native realization of B_sigma on the ordered pair (a, b).

    cx(a,b) conjugating a b-controlled RY(pi/2) on a; 4 cx total. Checked
    against the exact matrix in the test suite.
    """
    gates: list[Gate] = [cx(a, b)]
    gates.append(cx(b, a))
    gates += _ry_native(a, -np.pi / 4)
    gates.append(cx(b, a))
    gates += _ry_native(a, np.pi / 4)
    gates.append(cx(a, b))
    return gates


def build_measurement_circuit(
    n: int, noisy_bs: bool = False, profile: DeviceProfile | None = None
) -> Circuit:
    """B_sigma on every copy pair (k, n+k) of a 2n-qubit register.

    With ``noisy_bs`` the circuit is transpiled against ``profile`` (default
    profile if omitted) so its gates carry durations and pick up noise when
    simulated noisily; otherwise gates stay virtual with zero durations.
    """
    gates: list[Gate] = []
    for k in range(n):
        gates += bsigma_gates(k, n + k)
    circ = Circuit(2 * n, tuple(gates))
    if noisy_bs:
        circ = transpile(circ, profile or DeviceProfile.default())
    return circ


def _swap_gates(a: int, b: int) -> list[Gate]:
    return [cx(a, b), cx(b, a), cx(a, b)]


def alternating_swap_route(
    n: int, graph: CouplingGraph
) -> tuple[tuple[tuple[int, int], ...], GateLedger]:
    """Adjacent-swap network interleaving two n-qubit registers on a line.

    Requires a simple path of 2n nodes in ``graph``. Returns the swap
    sequence in path-position coordinates, taking block order
    (a_1..a_n, b_1..b_n) to the interleaved order (a_1, b_1, ..., a_n, b_n),
    plus a ledger pricing each swap at 3 cx. Uses n(n-1)/2 swaps.
    """
    graph.find_path(2 * n)  # raises if the graph cannot host the line
    order = list(range(2 * n))  # order[position] = logical qubit
    swaps: list[tuple[int, int]] = []
    for i in range(n):
        pos = order.index(n + i)  # logical b_i
        target = 2 * i + 1
        while pos > target:
            order[pos - 1], order[pos] = order[pos], order[pos - 1]
            swaps.append((pos - 1, pos))
            pos -= 1
    expected = [q for k in range(n) for q in (k, n + k)]
    if order != expected:
        raise AssertionError(f"interleave failed: {order}")
    ledger = GateLedger.make(g_swap_total=SWAP_CX_COST * len(swaps))
    return tuple(swaps), ledger


def formula_swap_cx(n: int) -> int:
    """Nominal n(n+1)/2-swap tally at 3 cx each, reported alongside the
    constructive count (which needs only n(n-1)/2 swaps)."""
    return SWAP_CX_COST * n * (n + 1) // 2


def _greedy_route(
    c: Circuit, graph: CouplingGraph
) -> tuple[Circuit, GateLedger, tuple[int, ...]]:
    """Greedy legalization: walk the first operand of each nonadjacent
    two-qubit gate along a shortest path until adjacent. Returns the routed
    circuit, a swap-overhead ledger, and the final logical-to-node layout."""
    if not graph.is_connected():
        raise ValueError("coupling graph is disconnected")
    if c.n_qubits > graph.n_qubits:
        raise ValueError(f"circuit needs {c.n_qubits} qubits, graph has {graph.n_qubits}")
    pos = list(range(c.n_qubits))  # logical -> node
    holder: dict[int, int] = {q: q for q in range(c.n_qubits)}  # node -> logical
    gates: list[Gate] = []
    n_swaps = 0
    for g in c.gates:
        if len(g.qubits) == 1:
            q = g.qubits[0]
            gates.append(Gate(g.kind, (pos[q],), param=g.param, duration=g.duration))
            continue
        a, b = g.qubits
        while not graph.has_edge(pos[a], pos[b]):
            step = graph.shortest_path(pos[a], pos[b])[1]
            gates += _swap_gates(pos[a], step)
            n_swaps += 1
            other = holder.get(step)
            holder[pos[a]] = other
            if other is not None:
                pos[other] = pos[a]
            holder[step] = a
            pos[a] = step
        gates.append(Gate(g.kind, (pos[a], pos[b]), param=g.param, duration=g.duration))
    routed = Circuit(graph.n_qubits, tuple(gates), c.parameters)
    ledger = GateLedger.make(g_swap_total=SWAP_CX_COST * n_swaps)
    return routed, ledger, tuple(pos)


def greedy_baseline_route(c: Circuit, graph: CouplingGraph) -> tuple[Circuit, GateLedger]:
    """Legalize a circuit to ``graph`` by greedy shortest-path swap insertion."""
    routed, ledger, _ = _greedy_route(c, graph)
    return routed, ledger


def _alternating_stage(n: int, graph: CouplingGraph) -> tuple[Circuit, tuple[int, ...]]:
    """Swap network plus B_sigma on adjacent pairs; returns (circuit, layout)."""
    swaps, _ = alternating_swap_route(n, graph)
    gates: list[Gate] = []
    for a, b in swaps:
        gates += _swap_gates(a, b)
    for k in range(n):
        gates += bsigma_gates(2 * k, 2 * k + 1)
    layout = [0] * (2 * n)
    for k in range(n):
        layout[k] = 2 * k
        layout[n + k] = 2 * k + 1
    return Circuit(2 * n, tuple(gates)), tuple(layout)


def measurement_stage(
    n: int, routing: str = "none", graph: CouplingGraph | None = None
) -> tuple[Circuit, tuple[int, ...], GateLedger]:
    """The full 2n-qubit measurement stage for one entangled overlap.

    Returns the (untimed) native circuit, the final logical-to-position
    layout, and a ledger with the swap overhead and the B_sigma cost filled
    in (the state-prep cost is accounted by the caller).
    """
    if routing not in ROUTINGS:
        raise ValueError(f"unknown routing {routing!r}")
    derange = BSIGMA_CX_COST * n
    if routing == "none":
        circ = build_measurement_circuit(n)
        return circ, tuple(range(2 * n)), GateLedger.make(g_derange=derange)
    g = graph or CouplingGraph.line(2 * n)
    if routing == "alternating":
        circ, layout = _alternating_stage(n, g)
        _, swap_ledger = alternating_swap_route(n, g)
        ledger = GateLedger.make(
            g_swap_total=swap_ledger.g_swap_total, g_derange=derange
        )
        return circ, layout, ledger
    routed, swap_ledger, layout = _greedy_route(build_measurement_circuit(n), g)
    ledger = GateLedger.make(g_swap_total=swap_ledger.g_swap_total, g_derange=derange)
    return routed, layout, ledger


def measured_pair(
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    observables: Sequence[PauliSum | None],
    profile: DeviceProfile,
    noisy_bs: bool = False,
    routing: str = "none",
    graph: CouplingGraph | None = None,
) -> list[complex]:
    """Estimate Tr[(O x I) Lambda (rho1 x rho2)] through the measurement
    circuit, one value per observable (None means O = I).

    The prepared two-copy state is pushed through the routed measurement
    stage (noisily when ``noisy_bs``); each observable is then read out as
    the exactly conjugated operator U (O x I) Lambda U^dag, where U is the
    stage's ideal unitary. Noiseless execution reproduces the direct traces
    to machine precision; noisy execution degrades them.
    """
    if rho1.n_qubits != rho2.n_qubits:
        raise ValueError("copies must have equal qubit counts")
    n = rho1.n_qubits
    dim = 2**n
    stage, _, _ = measurement_stage(n, routing, graph)
    u = _stage_unitary(n, routing, graph)  # durations do not change the unitary
    stage = transpile(stage, profile)

    two_copy = DensityMatrix(2 * n, qcore.kron(rho1.mat, rho2.mat))
    sigma = simulate(stage, profile, noisy=noisy_bs, initial=two_copy).mat
    # Tr[u C u^dag sigma] = Tr[C (u^dag sigma u)]: conjugate once, reuse per observable
    sigma_rot = u.conj().T @ sigma @ u
    # right-multiplying by Lambda permutes columns: (M Lambda)[:, i*d+j] = M[:, j*d+i]
    col_swap = np.arange(dim * dim).reshape(dim, dim).T.reshape(-1)

    out: list[complex] = []
    for o in observables:
        if o is None:
            core = derangement_operator(n)
        else:
            core = qcore.kron(o.to_matrix(), np.eye(dim))[:, col_swap]
        out.append(complex(np.tensordot(core, sigma_rot, axes=([0, 1], [1, 0]))))
    return out


@functools.lru_cache(maxsize=32)
def _stage_unitary(n: int, routing: str, graph: CouplingGraph | None) -> np.ndarray:
    stage, _, _ = measurement_stage(n, routing, graph)
    u = circuit_unitary(stage)
    u.flags.writeable = False
    return u


def measured_overlap(
    rho1: DensityMatrix,
    rho2: DensityMatrix,
    o: PauliSum | None,
    profile: DeviceProfile,
    noisy_bs: bool = False,
    routing: str = "none",
    graph: CouplingGraph | None = None,
) -> complex:
    """Single-observable convenience wrapper around ``measured_pair``."""
    return measured_pair(rho1, rho2, [o], profile, noisy_bs, routing, graph)[0]


def workload_ledger(
    n: int, depth: int, routing: str = "none", graph: CouplingGraph | None = None
) -> GateLedger:
    """Full cx ledger for one two-copy entangled measurement of the depth-d
    ansatz: both state-prep copies, swap overhead, and basis transform."""
    g_vqe = 2 * depth * n * (n - 1) // 2
    _, _, stage_ledger = measurement_stage(n, routing, graph)
    return GateLedger.make(
        g_vqe=g_vqe,
        g_swap_total=stage_ledger.g_swap_total,
        g_derange=stage_ledger.g_derange,
    )
