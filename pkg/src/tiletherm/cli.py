"""Command line front end.

Each subcommand runs one stage from files on disk so a full run can be
re-driven piecemeal; ``pipeline`` chains everything and writes the summary.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import floorplan as fp
from . import pipeline as pl
from . import power as pw
from . import scheduling as sch
from . import thermal as th
from .fileio import atomic_write
from .model import load_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiletherm",
        description="map a CNN onto a tile accelerator and simulate its "
        "power and temperature",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str, *, flp=False, dt=False, seed=False,
            mapping=True, heatmap=False, splits=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", required=True, help="scenario manifest (TOML)")
        p.add_argument("--out", default="out", help="output directory")
        if mapping:
            p.add_argument(
                "--mapping", default=None,
                help="default | swapped:<pe_a>,<pe_b> (overrides the manifest)",
            )
        if flp:
            p.add_argument("--flp", default=None, help="floorplan file to use")
        if dt:
            p.add_argument("--dt-cycles", type=int, default=None,
                           help="transient/resampling step in base cycles")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="annealing seed (overrides the manifest)")
        if heatmap:
            p.add_argument("--heatmap", action="store_true",
                           help="also render a steady-state pixmap")
        if splits:
            p.add_argument("--splits", default="",
                           help="comma-separated compression windows in cycles")
            p.add_argument("--repeats", type=int, default=1,
                           help="repetitions of each trace variant")
        return p

    add("map", "assign layers and emit the pixel schedule")
    add("trace", "emit the resampled power trace", dt=True)
    add("floorplan", "anneal a coarse plan and refine it", mapping=False, seed=True)
    add("thermal-steady", "steady temperatures under mean power",
        flp=True, seed=True, heatmap=True)
    add("thermal-transient", "transient temperatures under the pixel trace",
        flp=True, dt=True, seed=True)
    add("pipeline", "run every stage and write the summary",
        flp=True, dt=True, seed=True, heatmap=True)
    add("upper-bound", "peak temperature under compressed repeated power",
        flp=True, dt=True, seed=True, splits=True)
    cmp_p = add("compare-flp", "steady temperature deltas between two plans")
    cmp_p.add_argument("flp_a", help="first floorplan file")
    cmp_p.add_argument("flp_b", help="second floorplan file")
    return parser


def _prepare(args):
    scn = load_scenario(args.scenario)
    os.makedirs(args.out, exist_ok=True)
    return scn


def _cmd_map(args) -> int:
    scn = _prepare(args)
    mapping, strace, _trace = pl.prepare_power(scn, args.mapping or scn.mapping)
    sch.dump_schedule(strace, os.path.join(args.out, "schedule.txt"))
    lines = [f"{l}\t{mapping.pe_of(l)}" for l in strace.layer_names]
    atomic_write(os.path.join(args.out, "mapping.txt"), "\n".join(lines) + "\n")
    print(f"makespan_cycles = {strace.makespan}")
    print(f"bubble_fraction = {pl.bubble_fraction(strace):.6f}")
    return 0


def _cmd_trace(args) -> int:
    scn = _prepare(args)
    _mapping, _strace, trace = pl.prepare_power(scn, args.mapping or scn.mapping)
    dt = args.dt_cycles or scn.dt_cycles
    pw.export_ptrace(trace, dt, os.path.join(args.out, "power.ptrace"))
    print(f"total_energy_j = {trace.total_energy():.9e}")
    print(f"duration_cycles = {trace.duration_cycles}")
    return 0


def _cmd_floorplan(args) -> int:
    scn = _prepare(args)
    plan, coarse = pl.resolve_floorplan(
        scn, None, scn.seed if args.seed is None else args.seed
    )
    fp.export_flp(coarse, os.path.join(args.out, "floorplan_coarse.flp"))
    fp.export_flp(plan, os.path.join(args.out, "floorplan.flp"))
    used = sum(b.area for b in plan.blocks)
    print(f"blocks = {len(plan.blocks)}")
    print(f"die_utilization = {used / (plan.die_w_mm * plan.die_h_mm):.4f}")
    return 0


def _thermal_input(args, scn):
    _mapping, strace, trace = pl.prepare_power(scn, args.mapping or scn.mapping)
    plan, _coarse = pl.resolve_floorplan(
        scn,
        args.flp or scn.floorplan_path,
        scn.seed if getattr(args, "seed", None) is None else args.seed,
    )
    net = th.build_network(plan, scn.package)
    return strace, trace, plan, net


def _cmd_thermal_steady(args) -> int:
    scn = _prepare(args)
    _strace, trace, plan, net = _thermal_input(args, scn)
    field = th.solve_steady(net, pl.mean_power_w(trace))
    th.write_temps(os.path.join(args.out, "steady.temps"), field)
    if args.heatmap:
        th.write_heatmap(os.path.join(args.out, "steady.ppm"), plan, field)
    block_temp = {b.name: field.steady_of(b.name) for b in plan.blocks}
    hottest = max(block_temp, key=block_temp.get)
    print(f"hottest_block = {hottest}")
    print(f"steady_max_k = {field.steady.max():.6f}")
    return 0


def _cmd_thermal_transient(args) -> int:
    scn = _prepare(args)
    _strace, trace, _plan, net = _thermal_input(args, scn)
    dt = args.dt_cycles or scn.dt_cycles
    tb = 1.0 / scn.architecture.base_clock_hz
    samples = pw.resample(trace, dt)
    node_samples = th.map_power(net, trace.components, samples)
    field = th.simulate_transient(net, node_samples, dt * tb)
    th.write_ttrace(os.path.join(args.out, "transient.ttrace"), field)
    print(f"transient_peak_rise_k = {field.transient.max() - net.ambient_k:.6f}")
    return 0


def _cmd_pipeline(args) -> int:
    scn = _prepare(args)
    result = pl.run_pipeline(
        scn,
        args.out,
        mapping=args.mapping,
        flp_path=args.flp,
        dt_cycles=args.dt_cycles,
        seed=args.seed,
        heatmap=args.heatmap,
    )
    print(f"total_energy_j = {result.total_energy_j:.9e}")
    print(f"total_latency_cycles = {result.total_latency_cycles}")
    print(f"hottest_block = {result.hottest_block}")
    print(f"steady_max_k = {result.steady_max_k:.6f}")
    print(f"transient_peak_rise_k = {result.transient_peak_rise_k:.6f}")
    print(f"summary = {os.path.join(args.out, 'summary.txt')}")
    return 0


def _cmd_upper_bound(args) -> int:
    scn = _prepare(args)
    splits = [int(v) for v in args.splits.split(",") if v.strip()]
    rows = pl.upper_bound(
        scn,
        args.out,
        splits,
        args.repeats,
        mapping=args.mapping,
        flp_path=args.flp,
        dt_cycles=args.dt_cycles,
        seed=args.seed,
    )
    for row in rows:
        print(
            f"{row.variant}: duration={row.duration_cycles} cycles, "
            f"peak_rise={row.peak_rise_k:.6f} K"
        )
    return 0


def _cmd_compare_flp(args) -> int:
    scn = _prepare(args)
    result = pl.compare_floorplans(
        scn, args.flp_a, args.flp_b, out_dir=args.out, mapping=args.mapping
    )
    print(f"steady_max_a_k = {result.steady_max_a_k:.6f}")
    print(f"steady_max_b_k = {result.steady_max_b_k:.6f}")
    print(f"max_steady_delta_k = {result.max_steady_delta_k:.6f}")
    print(f"max_block_delta_k = {result.max_block_delta_k:.6f}")
    return 0


_COMMANDS = {
    "map": _cmd_map,
    "trace": _cmd_trace,
    "floorplan": _cmd_floorplan,
    "thermal-steady": _cmd_thermal_steady,
    "thermal-transient": _cmd_thermal_transient,
    "pipeline": _cmd_pipeline,
    "upper-bound": _cmd_upper_bound,
    "compare-flp": _cmd_compare_flp,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"tiletherm {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
