import numpy as np
import pytest

from conftest import random_density_matrix
from qemlab import qcore
from qemlab.circuit import Circuit, build_ansatz, build_tfi, circuit_unitary, cx, transpile
from qemlab.mitigate import vd_energy
from qemlab.noise import DensityMatrix, simulate
from qemlab.route import (
    BSIGMA_CX_COST,
    CouplingGraph,
    GateLedger,
    _greedy_route,
    alternating_swap_route,
    bsigma_gates,
    build_measurement_circuit,
    derangement_trace,
    formula_swap_cx,
    greedy_baseline_route,
    measured_pair,
    measurement_stage,
    swap_diag,
    workload_ledger,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class TestSwapDiag:
    def test_diagonalizes_swap(self):
        b, d = swap_diag()
        assert np.max(np.abs(b.conj().T @ d @ b - SWAP)) <= 1e-12

    def test_b_unitary(self):
        b, _ = swap_diag()
        assert np.max(np.abs(b.conj().T @ b - np.eye(4))) <= 1e-12

    def test_swap_action_on_01(self):
        b, d = swap_diag()
        ket01 = np.array([0, 1, 0, 0], dtype=complex)
        ket10 = np.array([0, 0, 1, 0], dtype=complex)
        assert np.allclose(b.conj().T @ d @ b @ ket01, ket10)

    def test_singlet_is_minus_one_eigenvector(self):
        singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
        assert np.allclose(SWAP @ singlet, -singlet)


class TestDerangementTrace:
    def test_maximally_mixed_pair(self):
        rho = DensityMatrix(1, np.eye(2) / 2)
        assert derangement_trace(rho, rho) == pytest.approx(0.5, abs=1e-12)

    def test_pure_state_purity(self):
        psi = np.array([1, 1j], dtype=complex) / np.sqrt(2)
        rho = DensityMatrix.from_statevector(psi)
        assert derangement_trace(rho, rho) == pytest.approx(1.0, abs=1e-12)

    def test_random_pairs_match_direct_trace(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            r1 = random_density_matrix(2, rng)
            r2 = random_density_matrix(2, rng)
            direct = float(np.trace(r1.mat @ r2.mat).real)
            assert abs(derangement_trace(r1, r2) - direct) <= 1e-12

    def test_observable_form_matches_direct(self):
        rng = np.random.default_rng(1)
        ham = build_tfi(2, 1.0)
        for _ in range(20):
            r1 = random_density_matrix(2, rng)
            r2 = random_density_matrix(2, rng)
            direct = float(np.real(np.trace(ham.to_matrix() @ r2.mat @ r1.mat)))
            assert abs(derangement_trace(r1, r2, ham) - direct) <= 1e-12

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            derangement_trace(DensityMatrix.ground(1), DensityMatrix.ground(2))


class TestMeasurementCircuit:
    def test_single_pair_equals_bsigma(self):
        b, _ = swap_diag()
        circ = build_measurement_circuit(1)
        assert qcore.unitary_distance(circuit_unitary(circ), b) <= 1e-10

    def test_bsigma_gate_budget(self):
        gates = bsigma_gates(0, 1)
        assert sum(1 for g in gates if g.kind == "cx") == BSIGMA_CX_COST

    def test_full_transform_tensor_structure(self):
        b, _ = swap_diag()
        circ = build_measurement_circuit(2)
        got = circuit_unitary(circ)
        # pairs (0,2) and (1,3): permute the b x b tensor product accordingly
        perm = qcore.permutation_matrix([0, 2, 1, 3])
        want = perm.conj().T @ qcore.kron(b, b) @ perm
        assert qcore.unitary_distance(got, want) <= 1e-10

    def test_noisy_flag_stamps_durations(self, profile):
        timed = build_measurement_circuit(2, noisy_bs=True, profile=profile)
        untimed = build_measurement_circuit(2)
        assert sum(g.duration for g in untimed.gates) == 0
        assert sum(g.duration for g in timed.gates) > 0

    def test_vd_via_noiseless_path_matches_direct(self, profile, ansatz_params):
        circ = transpile(build_ansatz(3, 4), profile)
        rho = simulate(circ.bind(ansatz_params(3, 4, 0)), profile, noisy=True)
        ham = build_tfi(3, 1.0)
        den, num = measured_pair(rho, rho, [None, ham], profile, noisy_bs=False)
        want = vd_energy(rho, ham, 2).energy
        assert num.real / den.real == pytest.approx(want, abs=1e-10)

    def test_noisy_path_degrades_estimate(self, profile, ansatz_params):
        circ = transpile(build_ansatz(3, 4), profile)
        rho = simulate(circ.bind(ansatz_params(3, 4, 0)), profile, noisy=True)
        ham = build_tfi(3, 1.0)
        exact = vd_energy(rho, ham, 2).energy
        den, num = measured_pair(rho, rho, [None, ham], profile, noisy_bs=True)
        noisy = num.real / den.real
        assert abs(noisy + 4.0) > abs(exact + 4.0)


class TestAlternatingSwap:
    def test_single_pair_needs_no_swaps(self):
        swaps, ledger = alternating_swap_route(1, CouplingGraph.line(2))
        assert swaps == () and ledger.g_swap_total == 0

    def test_three_qubit_counts(self):
        swaps, ledger = alternating_swap_route(3, CouplingGraph.line(6))
        assert len(swaps) == 3
        assert ledger.g_swap_total == 9
        assert formula_swap_cx(3) == 18  # nominal tally reported alongside

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_swap_count_formula(self, n):
        swaps, _ = alternating_swap_route(n, CouplingGraph.line(2 * n))
        assert len(swaps) == n * (n - 1) // 2

    def test_requires_path(self):
        disconnected = CouplingGraph(4, ((0, 1), (2, 3)))
        with pytest.raises(ValueError, match="path"):
            alternating_swap_route(2, disconnected)

    def test_routed_stage_equivalent_to_unrouted(self):
        for n in (2, 3):
            stage, layout, _ = measurement_stage(n, "alternating")
            unrouted = build_measurement_circuit(n)
            p = qcore.permutation_matrix(layout)
            d = qcore.unitary_distance(circuit_unitary(stage), p @ circuit_unitary(unrouted))
            assert d <= 1e-10


class TestGreedyRoute:
    def test_legal_circuit_untouched(self):
        g = CouplingGraph.line(3)
        circ = Circuit(3, (cx(0, 1), cx(1, 2)))
        routed, ledger = greedy_baseline_route(circ, g)
        assert ledger.g_swap_total == 0
        assert routed.count("cx") == 2

    def test_distance_three_inserts_two_swaps(self):
        g = CouplingGraph.line(4)
        circ = Circuit(4, (cx(0, 3),))
        routed, ledger = greedy_baseline_route(circ, g)
        assert ledger.g_swap_total == 6  # 2 swaps at 3 cx each

    def test_routed_equivalence_up_to_permutation(self):
        for n in (2, 3):
            unrouted = build_measurement_circuit(n)
            routed, _, layout = _greedy_route(unrouted, CouplingGraph.line(2 * n))
            p = qcore.permutation_matrix(layout)
            d = qcore.unitary_distance(circuit_unitary(routed), p @ circuit_unitary(unrouted))
            assert d <= 1e-10

    def test_disconnected_graph_rejected(self):
        disconnected = CouplingGraph(4, ((0, 1), (2, 3)))
        with pytest.raises(ValueError, match="disconnected"):
            greedy_baseline_route(Circuit(4, (cx(0, 3),)), disconnected)


class TestLedgers:
    def test_identity_enforced(self):
        with pytest.raises(ValueError):
            GateLedger(1, 2, 3, 7)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    @pytest.mark.parametrize("graph_name", ["line", "heavy_hex"])
    def test_alternating_beats_greedy(self, n, graph_name):
        if graph_name == "line":
            graph = CouplingGraph.line(2 * n)
        else:
            graph = CouplingGraph.heavy_hex_27()
        _, _, alt = measurement_stage(n, "alternating", graph)
        _, _, greedy = measurement_stage(n, "greedy", graph)
        assert alt.g_tot <= greedy.g_tot
        assert alt.g_derange == greedy.g_derange == BSIGMA_CX_COST * n

    def test_workload_ledger_composition(self):
        led = workload_ledger(3, 6, "alternating")
        assert led.g_vqe == 2 * 6 * 3
        assert led.g_swap_total == 9
        assert led.g_derange == 12
        assert led.g_tot == led.g_vqe + led.g_swap_total + led.g_derange

    def test_measurement_workload_ordering(self):
        alt = workload_ledger(3, 6, "alternating")
        greedy = workload_ledger(3, 6, "greedy")
        assert alt.g_tot < greedy.g_tot


class TestCouplingGraph:
    def test_heavy_hex_loads(self):
        g = CouplingGraph.heavy_hex_27()
        assert g.n_qubits == 27
        assert len(g.edges) == 28
        assert g.is_connected()
        assert len(g.find_path(10)) == 10

    def test_file_roundtrip(self, tmp_path):
        import json

        g = CouplingGraph.line(4)
        p = tmp_path / "graph.json"
        p.write_text(json.dumps({"n_qubits": 4, "edges": [list(e) for e in g.edges]}))
        assert CouplingGraph.from_file(p) == g

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            CouplingGraph.from_dict({"n_qubits": 2, "edges": [], "color": "red"})

    def test_shortest_path(self):
        g = CouplingGraph.heavy_hex_27()
        path = g.shortest_path(0, 9)
        assert path[0] == 0 and path[-1] == 9
        assert all(g.has_edge(a, b) for a, b in zip(path, path[1:]))


class TestMeasuredPairRoutings:
    @pytest.mark.parametrize("routing", ["none", "alternating", "greedy"])
    def test_noiseless_matches_direct_traces(self, profile, routing):
        rng = np.random.default_rng(2)
        r1 = random_density_matrix(3, rng)
        r2 = random_density_matrix(3, rng)
        ham = build_tfi(3, 1.0)
        den, num = measured_pair(r1, r2, [None, ham], profile, noisy_bs=False, routing=routing)
        assert den.real == pytest.approx(np.trace(r1.mat @ r2.mat).real, abs=1e-10)
        want = np.trace(ham.to_matrix() @ r2.mat @ r1.mat)
        assert num == pytest.approx(complex(want), abs=1e-10)
