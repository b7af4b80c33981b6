import numpy as np
import pytest

from qemlab import qcore
from qemlab.boost import (
    BoostSpec,
    boost_crosstalk,
    boost_decoherence,
    boost_gate_repetition,
    boost_probabilistic,
    make_fault_family,
)
from qemlab.circuit import Circuit, build_ansatz, circuit_unitary, cx, transpile, zero_state
from qemlab.noise import DensityMatrix, DeviceProfile, depolarize, simulate


@pytest.fixture(scope="module")
def bound_circuit(profile, ansatz_params):
    circ = transpile(build_ansatz(3, 2), profile)
    return circ.bind(ansatz_params(3, 2, 0))


def fidelity_to_ideal(rho, bound, profile):
    psi = circuit_unitary(bound) @ zero_state(bound.n_qubits)
    return float(np.real(psi.conj() @ rho.mat @ psi))


class TestBoostSpec:
    def test_rejects_unknown_flavor(self):
        with pytest.raises(ValueError):
            BoostSpec("folding", 1.0)

    def test_rejects_fractional_repetition(self):
        with pytest.raises(ValueError):
            BoostSpec("gate_repetition", 1.5)

    def test_rejects_substretch(self):
        with pytest.raises(ValueError):
            BoostSpec("probabilistic", 0.5)


class TestDecoherence:
    def test_zero_buffer_identity(self, bound_circuit, profile):
        boosted = boost_decoherence(bound_circuit, 0.0)
        a = simulate(bound_circuit, profile, noisy=True)
        b = simulate(boosted, profile, noisy=True)
        assert np.max(np.abs(a.mat - b.mat)) < 1e-14

    def test_appends_delay_per_qubit(self, bound_circuit):
        boosted = boost_decoherence(bound_circuit, 123.0)
        tail = boosted.gates[-3:]
        assert [g.kind for g in tail] == ["delay"] * 3
        assert [g.qubits[0] for g in tail] == [0, 1, 2]
        assert all(g.duration == 123.0 for g in tail)

    def test_larger_buffer_lower_fidelity(self, bound_circuit, profile):
        f_small = fidelity_to_ideal(
            simulate(boost_decoherence(bound_circuit, 1e2), profile), bound_circuit, profile
        )
        f_large = fidelity_to_ideal(
            simulate(boost_decoherence(bound_circuit, 1e4), profile), bound_circuit, profile
        )
        assert f_large < f_small

    def test_noiseless_unaffected(self, bound_circuit, profile):
        boosted = boost_decoherence(bound_circuit, 1e4)
        a = simulate(bound_circuit, profile, noisy=False)
        b = simulate(boosted, profile, noisy=False)
        assert np.max(np.abs(a.mat - b.mat)) < 1e-12

    def test_rejects_negative_buffer(self, bound_circuit):
        with pytest.raises(ValueError):
            boost_decoherence(bound_circuit, -1.0)


class TestGateRepetition:
    def test_zero_repetitions_identity(self, bound_circuit):
        assert boost_gate_repetition(bound_circuit, 0).gates == bound_circuit.gates

    def test_cx_count_multiplier(self, bound_circuit):
        base = bound_circuit.count("cx")
        for k in (1, 2, 3):
            assert boost_gate_repetition(bound_circuit, k).count("cx") == (2 * k + 1) * base

    def test_single_cx_k1_equals_threefold_composition(self):
        prof = DeviceProfile.from_dict(
            {
                "n_qubits": 2, "t1": 1e18, "t2": 1e18, "sx_duration": 0.0,
                "cx_duration": 100.0, "sx_depol": 0.0, "cx_depol": 0.03,
                "coupling_edges": [[0, 1]],
            }
        )
        circ = Circuit(2, (cx(0, 1, duration=100.0),))
        got = simulate(boost_gate_repetition(circ, 1), prof, noisy=True)
        # oracle: three noisy cx applications composed by hand
        want = DensityMatrix.ground(2)
        u = circuit_unitary(circ)
        for _ in range(3):
            want = DensityMatrix(2, u @ want.mat @ u.conj().T)
            want = depolarize(depolarize(want, 0, 0.03), 1, 0.03)
        assert np.max(np.abs(got.mat - want.mat)) < 1e-12

    def test_unitary_equivalence_k2(self, profile):
        rng = np.random.default_rng(11)
        for _ in range(5):
            circ = transpile(build_ansatz(3, 1), profile)
            params = rng.uniform(0, 2 * np.pi, len(circ.parameters))
            bound = circ.bind(params)
            boosted = boost_gate_repetition(bound, 2)
            d = qcore.unitary_distance(circuit_unitary(bound), circuit_unitary(boosted))
            assert d <= 1e-10


class TestCrosstalk:
    def test_level_zero_identity(self, bound_circuit, profile):
        boosted, schedule = boost_crosstalk(bound_circuit, profile, 0)
        assert boosted is bound_circuit and schedule == {}

    def test_level_one_doubles_rate(self, bound_circuit, profile):
        boosted, schedule = boost_crosstalk(bound_circuit, profile, 1)
        full = simulate(boosted, profile, noisy=True, crosstalk_schedule=schedule)
        reduced = qcore.partial_trace(full.mat, range(3), full.n_qubits)
        # oracle by construction: same circuit with cx_depol doubled
        doubled = DeviceProfile.from_dict(
            {
                "n_qubits": profile.n_qubits,
                "t1": list(profile.t1), "t2": list(profile.t2),
                "sx_duration": profile.sx_duration, "cx_duration": profile.cx_duration,
                "sx_depol": profile.sx_depol, "cx_depol": 2.0 * profile.cx_depol,
                "coupling_edges": [list(e) for e in profile.coupling_edges],
            }
        )
        want = simulate(bound_circuit, doubled, noisy=True)
        assert np.max(np.abs(reduced - want.mat)) < 1e-12

    def test_system_unitary_untouched(self, bound_circuit, profile):
        boosted, _ = boost_crosstalk(bound_circuit, profile, 1)
        full = simulate(boosted, profile, noisy=False)
        reduced = qcore.partial_trace(full.mat, range(3), full.n_qubits)
        want = simulate(bound_circuit, profile, noisy=False)
        assert np.max(np.abs(reduced - want.mat)) < 1e-12

    def test_level_exceeds_available(self, bound_circuit, profile):
        with pytest.raises(ValueError, match="exceeds"):
            boost_crosstalk(bound_circuit, profile, 2)


class TestProbabilistic:
    def test_stretch_one_identity(self, bound_circuit, profile):
        directive = boost_probabilistic(bound_circuit, 1.0)
        a = simulate(bound_circuit, profile, noisy=True)
        b = simulate(directive.circuit, profile, noisy=True, pauli_stretch=directive.stretch)
        assert np.max(np.abs(a.mat - b.mat)) < 1e-14

    def test_stretch_two_composes_base_rate_once_more(self):
        prof = DeviceProfile.from_dict(
            {
                "n_qubits": 2, "t1": 1e18, "t2": 1e18, "sx_duration": 0.0,
                "cx_duration": 0.0, "sx_depol": 0.004, "cx_depol": 0.03,
                "coupling_edges": [[0, 1]],
            }
        )
        from qemlab.circuit import sx

        circ = Circuit(2, (sx(0), cx(0, 1), sx(1)))
        got = simulate(circ, prof, noisy=True, pauli_stretch=2.0)
        # oracle: replay with each gate's depolarizing channel applied twice
        from qemlab.circuit import SX_MATRIX, CX_MATRIX

        want = DensityMatrix.ground(2)

        def unitary(m, qubits):
            ops = [np.eye(2, dtype=complex)] * 2
            if len(qubits) == 1:
                ops[qubits[0]] = m
                full = qcore.kron_all(ops)
            else:
                full = m
            return DensityMatrix(2, full @ want.mat @ full.conj().T)

        want = unitary(SX_MATRIX, (0,))
        want = depolarize(depolarize(want, 0, 0.004), 0, 0.004)
        want = unitary(CX_MATRIX, (0, 1))
        for q in (0, 1):
            want = depolarize(depolarize(want, q, 0.03), q, 0.03)
        want = unitary(SX_MATRIX, (1,))
        want = depolarize(depolarize(want, 1, 0.004), 1, 0.004)
        assert np.max(np.abs(got.mat - want.mat)) < 1e-12

    def test_insertion_probabilities_normalized(self, bound_circuit, profile):
        rho = simulate(bound_circuit, profile, noisy=True, pauli_stretch=3.0)
        assert abs(np.trace(rho.mat) - 1.0) <= 1e-12

    def test_excessive_stretch_rejected(self, bound_circuit, profile):
        with pytest.raises(ValueError, match="exceeds 1"):
            simulate(bound_circuit, profile, noisy=True, pauli_stretch=1e4)


class TestFaultFamily:
    def test_single_base_spec(self, bound_circuit, profile):
        fam = make_fault_family(bound_circuit, [BoostSpec.base()], profile)
        want = simulate(bound_circuit, profile, noisy=True)
        assert len(fam) == 1
        assert np.max(np.abs(fam[0].mat - want.mat)) < 1e-14

    def test_boosted_state_distinct(self, bound_circuit, profile):
        fam = make_fault_family(
            bound_circuit,
            [BoostSpec.base(), BoostSpec("decoherence", 1e4)],
            profile,
        )
        for rho in fam:
            rho.validate()
        dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(fam[0].mat - fam[1].mat)))
        assert dist > 1e-4

    def test_three_member_family_purity_ordering(self, bound_circuit, profile):
        fam = make_fault_family(
            bound_circuit,
            [
                BoostSpec.base(),
                BoostSpec("gate_repetition", 1),
                BoostSpec("decoherence", 1e3),
            ],
            profile,
        )
        assert len(fam) == 3
        base_purity = fam[0].purity()
        assert fam[1].purity() <= base_purity + 1e-12
        assert fam[2].purity() <= base_purity + 1e-12

    @pytest.mark.parametrize(
        "flavor,grid",
        [
            ("decoherence", [0.0, 1e2, 1e3, 1e4]),
            ("gate_repetition", [0, 1, 2]),
            ("probabilistic", [1.0, 2.0, 3.0]),
        ],
    )
    def test_purity_and_fidelity_monotone(self, bound_circuit, profile, flavor, grid):
        specs = [BoostSpec(flavor, m) for m in grid]
        fam = make_fault_family(bound_circuit, specs, profile)
        purities = [rho.purity() for rho in fam]
        fids = [fidelity_to_ideal(rho, bound_circuit, profile) for rho in fam]
        assert all(a >= b - 1e-12 for a, b in zip(purities, purities[1:]))
        assert all(a >= b - 1e-12 for a, b in zip(fids, fids[1:]))

    def test_crosstalk_family_reduces_to_system(self, bound_circuit, profile):
        fam = make_fault_family(
            bound_circuit,
            [BoostSpec.base(), BoostSpec("crosstalk", 1)],
            profile,
        )
        assert all(rho.n_qubits == 3 for rho in fam)
        for rho in fam:
            rho.validate()

    def test_empty_specs_rejected(self, bound_circuit, profile):
        with pytest.raises(ValueError):
            make_fault_family(bound_circuit, [], profile)
