"""qemlab: a desk-scale quantum error-mitigation laboratory.

Exact density-matrix simulation with hardware-style noise, four noise-boost
procedures for building fault subspaces, virtual distillation and
generalized-subspace mitigation solvers, entangled-measurement routing with
cx-count ledgers, and a benchmark harness over the transverse-field Ising
model.
"""

from .boost import BoostSpec, boost_decoherence, boost_gate_repetition, \
    boost_crosstalk, boost_probabilistic, make_fault_family
from .circuit import Circuit, Gate, PauliSum, build_ansatz, build_tfi, \
    optimize, statevector_energy, transpile
from .mitigate import MitigationResult, SubspaceSpec, gse_energy, raw_energy, vd_energy
from .noise import DensityMatrix, DeviceProfile, amplitude_damp, dephase, \
    depolarize, expectation, simulate
from .qcore import eigh, gen_eigh, kron, partial_trace
from .route import CouplingGraph, GateLedger, alternating_swap_route, \
    build_measurement_circuit, derangement_trace, greedy_baseline_route, swap_diag

__version__ = "0.1.0"
