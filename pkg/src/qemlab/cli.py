"""Command-line interface: oracle, optimize, run, route, report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, route
from .circuit import (
    OptimizeError,
    build_ansatz,
    build_tfi,
    optimize,
    save_parameters,
    statevector_energy,
)
from .route import CouplingGraph


def _cmd_oracle(args) -> int:
    print(f"{bench.oracle_energy(args.n, args.h):.9f}")
    return 0


def _cmd_optimize(args) -> int:
    ham = build_tfi(args.n, args.h)
    circ = build_ansatz(args.n, args.depth)
    try:
        params = optimize(circ, ham, seed=args.seed, restarts=args.restarts)
        status = "converged"
    except OptimizeError as err:
        params = err.best_params
        status = "best-effort (target not reached)"
    energy = statevector_energy(circ, ham, params)
    save_parameters(args.out, args.n, args.depth, args.seed, energy, params)
    print(f"{status}: energy {energy:.9f} written to {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = bench.ExperimentConfig.from_file(args.config)
    rows = bench.run_sweep(cfg)
    bench.write_csv(rows, args.out)
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def _cmd_route(args) -> int:
    if args.graph == "line":
        graph = CouplingGraph.line(2 * args.n)
    elif args.graph == "heavy-hex":
        graph = CouplingGraph.heavy_hex_27()
    else:
        graph = CouplingGraph.from_file(args.graph)
    swaps, alt = route.alternating_swap_route(args.n, graph)
    meas = route.build_measurement_circuit(args.n)
    _, greedy = route.greedy_baseline_route(meas, graph)
    print(f"{'router':<14}{'swaps':>7}{'swap cx':>9}{'derange cx':>12}{'total cx':>10}")
    derange = route.BSIGMA_CX_COST * args.n
    for name, swap_cx, n_swaps in (
        ("alternating", alt.g_swap_total, len(swaps)),
        ("greedy", greedy.g_swap_total, greedy.g_swap_total // route.SWAP_CX_COST),
    ):
        ledger = route.GateLedger.make(g_swap_total=swap_cx, g_derange=derange)
        print(f"{name:<14}{n_swaps:>7}{swap_cx:>9}{derange:>12}{ledger.g_tot:>10}")
    print(
        f"nominal swap tally n(n+1)/2: {route.formula_swap_cx(args.n)} cx "
        f"(constructive count uses n(n-1)/2 swaps)"
    )
    return 0


def _cmd_report(args) -> int:
    rows = bench.read_csv(args.infile)
    summary, aggregates = bench.report(rows)
    print(summary)
    if args.out:
        bench.write_summary_csv(aggregates, args.out)
        print(f"summary csv: {args.out}")
    if args.figdir:
        from .plotting import render_report_figures

        for p in render_report_figures(rows, args.figdir):
            print(f"figure: {p}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qemlab",
        description="Noisy-simulation benchmark of subspace-based error mitigation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact ground energy of the Ising ring")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=float, default=1.0)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("optimize", help="optimize ansatz parameters and save them")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("run", help="run a configured depth sweep to CSV")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("route", help="print the cx-count ledger table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--graph", default="line", help="line, heavy-hex, or a graph file")
    p.set_defaults(func=_cmd_route)

    p = sub.add_parser("report", help="summarize a results CSV (and render figures)")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None,
                   help="write the per-method aggregate CSV here")
    p.add_argument("--figdir", type=Path, default=None,
                   help="directory for rendered figures (PNG)")
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
