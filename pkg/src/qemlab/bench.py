"""Experiment runner: config ingestion, depth sweeps across mitigation
methods and boost flavors, the exact-diagonalization oracle, and CSV
persistence.

Sweeps are deterministic for a fixed (config, seed): optimized parameters,
simulated states, and solver output depend only on seeded inputs, and rows
are assembled in sorted (method, depth) order. The wall_ms timing column is
the one intentionally nondeterministic field; determinism checks compare
CSV content with that column masked.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import mitigate, qcore, route
from .boost import BoostSpec, make_fault_family
from .circuit import (
    OptimizeError,
    build_ansatz,
    build_tfi,
    load_parameters,
    optimize,
    save_parameters,
    statevector_energy,
    transpile,
)
from .mitigate import MitigationResult, SubspaceSpec
from .noise import DensityMatrix, DeviceProfile, expectation, simulate
from .route import GateLedger

SOLVERS = ("raw", "vd", "gse_power", "gse_fault")

_CONFIG_KEYS = {
    "n_qubits",
    "h",
    "depths",
    "seed",
    "profile_path",
    "methods",
    "noisy_measurement",
    "routing",
    "rel_threshold",
    "params_dir",
}
_METHOD_KEYS = {"label", "solver", "m", "max_power", "boosts"}


@dataclass(frozen=True)
class MethodSpec:
    """One mitigation method to run at every depth."""

    label: str
    solver: str
    m: int = 2
    max_power: int = 1
    boosts: tuple[BoostSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.solver == "vd" and self.m < 2:
            raise ValueError("vd needs m >= 2")
        if self.solver == "gse_power" and self.max_power < 1:
            raise ValueError("gse_power needs max_power >= 1")
        if self.solver == "gse_fault" and not self.boosts:
            raise ValueError("gse_fault needs a boost list")

    @classmethod
    def from_dict(cls, data) -> "MethodSpec":
        unknown = set(data) - _METHOD_KEYS
        if unknown:
            raise ValueError(f"unknown method keys: {sorted(unknown)}")
        boosts = tuple(
            BoostSpec(b["flavor"], float(b["magnitude"])) for b in data.get("boosts", ())
        )
        return cls(
            label=str(data["label"]),
            solver=str(data["solver"]),
            m=int(data.get("m", 2)),
            max_power=int(data.get("max_power", 1)),
            boosts=boosts,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    n_qubits: int
    h: float
    depths: tuple[int, ...]
    seed: int
    methods: tuple[MethodSpec, ...]
    profile_path: str = ""
    noisy_measurement: bool = False
    routing: str = "none"
    rel_threshold: float = 1e-10
    params_dir: str = ""

    def __post_init__(self) -> None:
        if not 2 <= self.n_qubits <= 5:
            raise ValueError("n_qubits must be in [2, 5] (2n <= 10 simulation cap)")
        if not self.depths or list(self.depths) != sorted(set(self.depths)):
            raise ValueError("depths must be nonempty and strictly ascending")
        if self.routing not in route.ROUTINGS:
            raise ValueError(f"routing must be one of {route.ROUTINGS}")
        labels = [m.label for m in self.methods]
        if not labels or len(set(labels)) != len(labels):
            raise ValueError("methods must be nonempty with unique labels")

    @classmethod
    def from_dict(cls, data, base_dir: Path | None = None) -> "ExperimentConfig":
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

        def resolve(p: str) -> str:
            if not p or base_dir is None:
                return p
            q = Path(p)
            return str(q if q.is_absolute() else base_dir / q)

        return cls(
            n_qubits=int(data["n_qubits"]),
            h=float(data.get("h", 1.0)),
            depths=tuple(int(d) for d in data["depths"]),
            seed=int(data.get("seed", 0)),
            methods=tuple(MethodSpec.from_dict(m) for m in data["methods"]),
            profile_path=resolve(str(data.get("profile_path", ""))),
            noisy_measurement=bool(data.get("noisy_measurement", False)),
            routing=str(data.get("routing", "none")),
            rel_threshold=float(data.get("rel_threshold", 1e-10)),
            params_dir=resolve(str(data.get("params_dir", ""))),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        with open(p) as f:
            return cls.from_dict(json.load(f), base_dir=p.parent)

    def profile(self) -> DeviceProfile:
        if self.profile_path:
            return DeviceProfile.from_file(self.profile_path)
        return DeviceProfile.default()


RESULT_FIELDS = (
    "method",
    "depth",
    "energy",
    "exact",
    "abs_error",
    "purity",
    "rank_kept",
    "g_tot",
    "wall_ms",
)


@dataclass(frozen=True)
class ResultRow:
    method: str
    depth: int
    energy: float
    exact: float
    abs_error: float
    purity: float
    rank_kept: int
    g_tot: int
    wall_ms: float

    def __post_init__(self) -> None:
        if abs(self.abs_error - abs(self.energy - self.exact)) > 1e-9:
            raise ValueError("abs_error does not match |energy - exact|")

    def as_csv(self) -> list[str]:
        return [
            self.method,
            str(self.depth),
            f"{self.energy:.12g}",
            f"{self.exact:.12g}",
            f"{self.abs_error:.12g}",
            f"{self.purity:.12g}",
            str(self.rank_kept),
            str(self.g_tot),
            f"{self.wall_ms:.12g}",
        ]


def oracle_energy(n: int, h: float) -> float:
    """Exact ground energy of the transverse-field Ising ring."""
    if not 2 <= n <= 10:
        raise ValueError("oracle supports n in [2, 10]")
    hm = build_tfi(n, h).to_matrix()
    return float(qcore.eigh(hm).eigenvalues[0])


def _ansatz_parameters(cfg: ExperimentConfig, depth: int) -> np.ndarray:
    """Optimized parameters for one depth, cached in params_dir when set.

    Optimizer failures are recorded as the best point found; the sweep
    proceeds with it.
    """
    ham = build_tfi(cfg.n_qubits, cfg.h)
    circ = build_ansatz(cfg.n_qubits, depth)
    cache = None
    if cfg.params_dir:
        cache = Path(cfg.params_dir) / (
            f"params_n{cfg.n_qubits}_d{depth}_s{cfg.seed}.json"
        )
        if cache.exists():
            data = load_parameters(cache)
            if data["n_qubits"] == cfg.n_qubits and data["depth"] == depth:
                return data["parameters"]
    try:
        params = optimize(circ, ham, seed=cfg.seed)
    except OptimizeError as err:
        params = err.best_params
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        energy = statevector_energy(circ, ham, params)
        save_parameters(cache, cfg.n_qubits, depth, cfg.seed, energy, params)
    return params


def _boosted_cx_count(base_cx: int, spec: BoostSpec) -> int:
    if spec.flavor == "gate_repetition":
        return base_cx * (2 * int(spec.magnitude) + 1)
    if spec.flavor == "crosstalk":
        return base_cx * (1 + int(spec.magnitude))
    return base_cx


def _method_ledger(
    cfg: ExperimentConfig, method: MethodSpec, depth: int, base_cx: int
) -> GateLedger:
    """CX ledger for one evaluation of the method at this depth.

    raw uses a single state-prep copy and no entangled measurement. The
    two-copy methods price state prep for the most expensive measured pair
    plus the swap and basis-transform overhead of the configured routing.
    """
    if method.solver == "raw":
        return GateLedger.make(g_vqe=base_cx)
    _, _, stage = route.measurement_stage(cfg.n_qubits, cfg.routing)
    if method.solver == "gse_fault":
        costs = sorted((_boosted_cx_count(base_cx, b) for b in method.boosts), reverse=True)
        pair = costs[0] + (costs[1] if len(costs) > 1 else costs[0])
    else:
        pair = 2 * base_cx
    return GateLedger.make(
        g_vqe=pair, g_swap_total=stage.g_swap_total, g_derange=stage.g_derange
    )


def _measured_moments(
    rho: DensityMatrix,
    ham,
    cfg: ExperimentConfig,
    profile: DeviceProfile,
) -> tuple[float, float]:
    """(Tr[rho^2], Tr[rho^2 H]) estimated through the noisy measured path."""
    den, num = route.measured_pair(
        rho,
        rho,
        [None, ham],
        profile,
        noisy_bs=True,
        routing=cfg.routing,
    )
    return float(den.real), float(num.real)


def _run_method(
    cfg: ExperimentConfig,
    method: MethodSpec,
    circ_bound,
    rho: DensityMatrix,
    ham,
    profile: DeviceProfile,
) -> MitigationResult:
    n = cfg.n_qubits
    dim = 2**n
    if method.solver == "raw":
        return mitigate.raw_energy(rho, ham)
    if method.solver == "vd":
        if not cfg.noisy_measurement:
            return mitigate.vd_energy(rho, ham, method.m)
        if method.m != 2:
            raise ValueError("the measured path supports two copies only")
        den, num = _measured_moments(rho, ham, cfg, profile)
        if abs(den) < 1e-14:
            raise ValueError("measured Tr[rho^2] is numerically degenerate")
        return MitigationResult(
            method=method.label,
            energy=num / den,
            coefficients=(),
            metric_spectrum=(den / dim,),
            rank_kept=1,
        )
    if method.solver == "gse_power":
        if not cfg.noisy_measurement:
            return mitigate.gse_energy(
                [rho], ham, SubspaceSpec.power(method.max_power), cfg.rel_threshold
            )
        if method.max_power != 1:
            raise ValueError("the measured path supports max_power = 1 only")
        den, num = _measured_moments(rho, ham, cfg, profile)
        hmat = ham.to_matrix()
        h00 = float(np.trace(hmat).real) / dim
        h01 = expectation(rho, ham) / dim
        hm = np.array([[h00, h01], [h01, num / dim]], dtype=complex)
        sm = np.array([[1.0, 1.0 / dim], [1.0 / dim, den / dim]], dtype=complex)
        return mitigate.gse_from_matrices(hm, sm, cfg.rel_threshold, method="gse_power1")
    # gse_fault
    family = make_fault_family(circ_bound, method.boosts, profile)
    spec = SubspaceSpec.fault(range(len(family)))
    if not cfg.noisy_measurement:
        return mitigate.gse_energy(family, ham, spec, cfg.rel_threshold)
    k = len(family)
    hm = np.zeros((k, k), dtype=complex)
    sm = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(i, k):
            s_ij, h_ij = route.measured_pair(
                family[i],
                family[j],
                [None, ham],
                profile,
                noisy_bs=True,
                routing=cfg.routing,
            )
            sm[i, j], sm[j, i] = s_ij / dim, np.conj(s_ij) / dim
            hm[i, j], hm[j, i] = h_ij / dim, np.conj(h_ij) / dim
    hm = 0.5 * (hm + hm.conj().T)
    sm = 0.5 * (sm + sm.conj().T)
    return mitigate.gse_from_matrices(hm, sm, cfg.rel_threshold, method=method.label)


def run_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """One ResultRow per (method, depth), sorted by method label then depth."""
    profile = cfg.profile()
    ham = build_tfi(cfg.n_qubits, cfg.h)
    exact = oracle_energy(cfg.n_qubits, cfg.h)
    rows: list[ResultRow] = []
    for depth in cfg.depths:
        params = _ansatz_parameters(cfg, depth)
        circ = transpile(build_ansatz(cfg.n_qubits, depth), profile)
        bound = circ.bind(params)
        rho = simulate(bound, profile, noisy=True)
        purity = rho.purity()
        base_cx = bound.count("cx")
        for method in cfg.methods:
            t0 = time.perf_counter()
            res = _run_method(cfg, method, bound, rho, ham, profile)
            wall_ms = 1000.0 * (time.perf_counter() - t0)
            ledger = _method_ledger(cfg, method, depth, base_cx)
            rows.append(
                ResultRow(
                    method=method.label,
                    depth=depth,
                    energy=res.energy,
                    exact=exact,
                    abs_error=abs(res.energy - exact),
                    purity=purity,
                    rank_kept=res.rank_kept,
                    g_tot=ledger.g_tot,
                    wall_ms=wall_ms,
                )
            )
    rows.sort(key=lambda r: (r.method, r.depth))
    return rows


def write_csv(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow(r.as_csv())


def read_csv(path) -> list[ResultRow]:
    rows: list[ResultRow] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(RESULT_FIELDS):
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            rows.append(
                ResultRow(
                    method=rec["method"],
                    depth=int(rec["depth"]),
                    energy=float(rec["energy"]),
                    exact=float(rec["exact"]),
                    abs_error=float(rec["abs_error"]),
                    purity=float(rec["purity"]),
                    rank_kept=int(rec["rank_kept"]),
                    g_tot=int(rec["g_tot"]),
                    wall_ms=float(rec["wall_ms"]),
                )
            )
    return rows


def csv_rows_match(path_a, path_b) -> bool:
    """Byte-level CSV comparison with the wall_ms timing column masked."""
    def strip(path) -> str:
        out = io.StringIO()
        with open(path, newline="") as f:
            w = csv.writer(out)
            for rec in csv.reader(f):
                w.writerow(rec[:-1])
        return out.getvalue()

    return strip(path_a) == strip(path_b)


@dataclass(frozen=True)
class MethodSummary:
    method: str
    rows: int
    mean_abs_error: float
    min_abs_error: float


def write_summary_csv(summaries: Sequence[MethodSummary], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("method", "rows", "mean_abs_error", "min_abs_error"))
        for s in summaries:
            w.writerow((s.method, s.rows, f"{s.mean_abs_error:.12g}", f"{s.min_abs_error:.12g}"))


def report(rows: Sequence[ResultRow]) -> tuple[str, list[MethodSummary]]:
    """Aggregate min and mean error per method, best method first."""
    if not rows:
        raise ValueError("no rows to report")
    by_method: dict[str, list[ResultRow]] = {}
    for r in rows:
        by_method.setdefault(r.method, []).append(r)
    summaries = [
        MethodSummary(
            method=m,
            rows=len(rs),
            mean_abs_error=float(np.mean([r.abs_error for r in rs])),
            min_abs_error=float(np.min([r.abs_error for r in rs])),
        )
        for m, rs in by_method.items()
    ]
    summaries.sort(key=lambda s: (s.mean_abs_error, s.method))
    lines = [f"{'method':<24}{'rows':>6}{'mean |err|':>14}{'min |err|':>14}"]
    for s in summaries:
        lines.append(
            f"{s.method:<24}{s.rows:>6}{s.mean_abs_error:>14.6g}{s.min_abs_error:>14.6g}"
        )
    return "\n".join(lines), summaries
