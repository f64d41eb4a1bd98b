"""End-to-end scenario runs plus the temperature studies built on them.

Every stage writes its artifact through the owning module's emitter, so each
output file re-parses with that module's parser and downstream stages can be
re-run from files alone.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from . import floorplan as fp
from . import power as pw
from . import scheduling as sch
from . import thermal as th
from .fileio import atomic_write
from .model import Scenario


class PipelineError(RuntimeError):
    """A stage failed; the message names the stage."""


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    mapping: str
    total_energy_j: float
    total_latency_cycles: int
    component_energy_j: dict[str, float]
    bubble_fraction: float
    steady_max_k: float
    steady_min_k: float
    hottest_block: str
    transient_peak_rise_k: float
    stage_seconds: dict[str, float]
    artifacts: dict[str, str]


@dataclass(frozen=True)
class UpperBoundRow:
    variant: str
    duration_cycles: int
    peak_rise_k: float
    rep_peaks_k: tuple[float, ...]
    ttrace_path: str


@dataclass(frozen=True)
class FloorplanComparison:
    steady_max_a_k: float
    steady_max_b_k: float
    max_steady_delta_k: float  # |max_a - max_b|
    max_block_delta_k: float  # max over common blocks of |T_b - T_a|
    rows: tuple[tuple[str, float, float, float], ...]  # name, T_a, T_b, delta


def _stage(name: str, timings: dict[str, float], fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:
        raise PipelineError(f"stage {name}: {exc}") from exc
    timings[name] = time.perf_counter() - t0
    return out


def _out(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, name)


# ---------------------------------------------------------------------------
# shared stage helpers


def prepare_power(scn: Scenario, mapping_mode: str):
    """Assignment, schedule and pixel power trace for one scenario run."""
    mapping = sch.assign_layers(scn.workload, scn.architecture, mapping_mode)
    strace = sch.schedule(scn.workload, mapping, scn.architecture)
    actions = sch.count_actions(scn.workload, mapping, scn.architecture)
    trace = pw.pixel_power_trace(strace, actions, scn.energy, scn.architecture)
    return mapping, strace, trace


def resolve_floorplan(scn: Scenario, flp_path: str | None, seed: int):
    """Load the given plan, or anneal a fresh coarse plan and refine it."""
    if flp_path:
        return fp.parse_flp(flp_path), None
    arch = scn.architecture
    lumps = fp.lump(arch)
    coarse = fp.anneal(lumps, (arch.die_w_mm, arch.die_h_mm), seed, arch.floorplan)
    return fp.refine(coarse, lumps), coarse


def bubble_fraction(strace: sch.ScheduleTrace) -> float:
    """Idle share of PE active windows (first start to last finish per PE)."""
    gap_total = span_total = 0
    for pe in strace.pes():
        intervals = strace.pe_intervals(pe)
        if len(intervals) == 0:
            continue
        span_total += int(intervals[:, 1].max() - intervals[:, 0].min())
        gap_total += sum(e - s for s, e in sch.bubble_intervals(strace, pe))
    return gap_total / span_total if span_total else 0.0


def mean_power_w(trace: pw.PowerTrace) -> dict[str, float]:
    horizon = trace.duration_cycles * trace.time_base_s
    return {c: trace.energy(c) / horizon for c in trace.components}


# ---------------------------------------------------------------------------
# full pipeline


def run_pipeline(
    scn: Scenario,
    out_dir: str,
    *,
    mapping: str | None = None,
    flp_path: str | None = None,
    dt_cycles: int | None = None,
    seed: int | None = None,
    heatmap: bool = False,
) -> ScenarioResult:
    mapping_mode = mapping or scn.mapping
    dt = dt_cycles or scn.dt_cycles
    rng_seed = scn.seed if seed is None else seed
    plan_path = flp_path or scn.floorplan_path
    tb = 1.0 / scn.architecture.base_clock_hz

    timings: dict[str, float] = {}
    artifacts: dict[str, str] = {}

    def do_schedule():
        mp, strace, trace = prepare_power(scn, mapping_mode)
        sch.dump_schedule(strace, _out(out_dir, "schedule.txt"))
        lines = [f"{l}\t{mp.pe_of(l)}" for l in strace.layer_names]
        atomic_write(_out(out_dir, "mapping.txt"), "\n".join(lines) + "\n")
        return mp, strace, trace

    _mp, strace, trace = _stage("schedule", timings, do_schedule)
    artifacts["schedule"] = _out(out_dir, "schedule.txt")
    artifacts["mapping"] = _out(out_dir, "mapping.txt")

    def do_power():
        pw.export_ptrace(trace, dt, _out(out_dir, "power.ptrace"))
        return bubble_fraction(strace)

    bubbles = _stage("power", timings, do_power)
    artifacts["ptrace"] = _out(out_dir, "power.ptrace")

    def do_floorplan():
        plan, coarse = resolve_floorplan(scn, plan_path, rng_seed)
        if coarse is not None:
            fp.export_flp(coarse, _out(out_dir, "floorplan_coarse.flp"))
        fp.export_flp(plan, _out(out_dir, "floorplan.flp"))
        return plan

    plan = _stage("floorplan", timings, do_floorplan)
    artifacts["floorplan"] = _out(out_dir, "floorplan.flp")

    def do_steady():
        net = th.build_network(plan, scn.package)
        field = th.solve_steady(net, mean_power_w(trace))
        th.write_temps(_out(out_dir, "steady.temps"), field)
        if heatmap:
            th.write_heatmap(_out(out_dir, "steady.ppm"), plan, field)
        return net, field

    net, steady = _stage("steady", timings, do_steady)
    artifacts["steady"] = _out(out_dir, "steady.temps")
    if heatmap:
        artifacts["heatmap"] = _out(out_dir, "steady.ppm")

    def do_transient():
        samples = pw.resample(trace, dt)
        node_samples = th.map_power(net, trace.components, samples)
        field = th.simulate_transient(net, node_samples, dt * tb)
        th.write_ttrace(_out(out_dir, "transient.ttrace"), field)
        return field

    transient = _stage("transient", timings, do_transient)
    artifacts["ttrace"] = _out(out_dir, "transient.ttrace")

    block_temp = {
        b.name: steady.steady_of(b.name) for b in plan.blocks
    }
    hottest = max(block_temp, key=block_temp.get)
    result = ScenarioResult(
        scenario=scn.name,
        mapping=mapping_mode,
        total_energy_j=trace.total_energy(),
        total_latency_cycles=strace.makespan,
        component_energy_j={c: trace.energy(c) for c in trace.components},
        bubble_fraction=bubbles,
        steady_max_k=float(steady.steady.max()),
        steady_min_k=float(steady.steady.min()),
        hottest_block=hottest,
        transient_peak_rise_k=float(transient.transient.max()) - net.ambient_k,
        stage_seconds=timings,
        artifacts=artifacts,
    )
    write_summary(_out(out_dir, "summary.txt"), result)
    return result


def write_summary(path: str, r: ScenarioResult) -> None:
    lines = [
        f"scenario={r.scenario}",
        f"mapping={r.mapping}",
        f"total_energy_j={r.total_energy_j:.9e}",
        f"total_latency_cycles={r.total_latency_cycles}",
        f"bubble_fraction={r.bubble_fraction:.6f}",
        f"steady_max_k={r.steady_max_k:.6f}",
        f"steady_min_k={r.steady_min_k:.6f}",
        f"hottest_block={r.hottest_block}",
        f"transient_peak_rise_k={r.transient_peak_rise_k:.6f}",
    ]
    for stage, seconds in r.stage_seconds.items():
        lines.append(f"stage_{stage}_s={seconds:.3f}")
    lines.append("")
    lines.append("component\tenergy_j")
    for name, energy in r.component_energy_j.items():
        lines.append(f"{name}\t{energy:.9e}")
    atomic_write(path, "\n".join(lines) + "\n")


def parse_summary(path: str) -> tuple[dict[str, str], dict[str, float]]:
    """Read a summary back as (flat key=value map, per-component energies)."""
    meta: dict[str, str] = {}
    comps: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("component\t"):
                continue
            if "=" in line and "\t" not in line:
                key, _, value = line.partition("=")
                meta[key] = value
            else:
                name, _, value = line.partition("\t")
                comps[name] = float(value)
    return meta, comps


# ---------------------------------------------------------------------------
# temperature upper-bound study


def upper_bound(
    scn: Scenario,
    out_dir: str,
    splits: list[int],
    repeats: int,
    *,
    mapping: str | None = None,
    flp_path: str | None = None,
    dt_cycles: int | None = None,
    seed: int | None = None,
    include_original: bool = False,
) -> list[UpperBoundRow]:
    """Peak temperature under debubbled/compressed/repeated power.

    Each variant repeats its trace ``repeats`` times and starts from the
    steady state of its own average power, so per-repetition peaks read out
    the equilibrium ripple rather than a cold-start ramp.
    """
    if repeats < 1:
        raise PipelineError("stage upper-bound: repeats must be >= 1")
    mapping_mode = mapping or scn.mapping
    dt = dt_cycles or scn.dt_cycles
    rng_seed = scn.seed if seed is None else seed
    tb = 1.0 / scn.architecture.base_clock_hz
    timings: dict[str, float] = {}

    def do_prepare():
        _mp, strace, trace = prepare_power(scn, mapping_mode)
        return strace, trace

    strace, trace = _stage("schedule", timings, do_prepare)

    def do_variants():
        debubbled = pw.remove_bubbles(trace, strace)
        variants = [("original", trace)] if include_original else []
        variants.append(("debubbled", debubbled))
        for split in splits:
            if not 0 < split < debubbled.duration_cycles:
                raise ValueError(
                    f"split {split} out of range (0, {debubbled.duration_cycles})"
                )
            variants.append((f"split-{split}", pw.wrap_to_window(debubbled, split)))
        return variants

    variants = _stage("power", timings, do_variants)

    def do_floorplan():
        plan, _coarse = resolve_floorplan(scn, flp_path or scn.floorplan_path, rng_seed)
        return plan

    plan = _stage("floorplan", timings, do_floorplan)

    def do_simulate():
        net = th.build_network(plan, scn.package)
        solver = th.TransientSolver(net, dt * tb)
        rows = []
        for name, vtrace in variants:
            rep_trace = pw.repeat(vtrace, repeats)
            samples = pw.resample(rep_trace, dt)
            node_samples = th.map_power(net, rep_trace.components, samples)
            warm = th.solve_steady(net, mean_power_w(vtrace))
            temps = solver.run(node_samples, t0_k=warm.steady)
            field = th.TemperatureField(
                node_names=net.node_names,
                ambient_k=net.ambient_k,
                transient=temps,
                dt_s=dt * tb,
            )
            path = _out(out_dir, f"upper_{name}.ttrace")
            th.write_ttrace(path, field)
            rises = temps.max(axis=1) - net.ambient_k
            mid = (np.arange(len(rises)) + 0.5) * dt
            rep_of = np.minimum(
                (mid // vtrace.duration_cycles).astype(int), repeats - 1
            )
            rep_peaks = tuple(
                float(rises[rep_of == r].max()) for r in range(repeats)
            )
            rows.append(
                UpperBoundRow(
                    variant=name,
                    duration_cycles=vtrace.duration_cycles,
                    peak_rise_k=float(rises.max()),
                    rep_peaks_k=rep_peaks,
                    ttrace_path=path,
                )
            )
        return rows

    rows = _stage("transient", timings, do_simulate)

    lines = [
        f"scenario={scn.name}",
        f"mapping={mapping_mode}",
        f"dt_cycles={dt}",
        f"repeats={repeats}",
        "",
        "variant\tduration_cycles\tpeak_rise_k\trep_peaks_k",
    ]
    for row in rows:
        reps = ",".join(f"{p:.6f}" for p in row.rep_peaks_k)
        lines.append(
            f"{row.variant}\t{row.duration_cycles}\t{row.peak_rise_k:.6f}\t{reps}"
        )
    atomic_write(_out(out_dir, "upper_bound.txt"), "\n".join(lines) + "\n")
    return rows


def parse_upper_bound(path: str) -> list[UpperBoundRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or "=" in line or line.startswith("variant\t"):
                continue
            variant, duration, peak, reps = line.split("\t")
            rows.append(
                UpperBoundRow(
                    variant=variant,
                    duration_cycles=int(duration),
                    peak_rise_k=float(peak),
                    rep_peaks_k=tuple(float(v) for v in reps.split(",")),
                    ttrace_path="",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# floorplan comparison


def compare_floorplans(
    scn: Scenario,
    flp_a: str,
    flp_b: str,
    *,
    out_dir: str | None = None,
    mapping: str | None = None,
) -> FloorplanComparison:
    """Steady solves for two plans under identical power; per-block deltas."""
    mapping_mode = mapping or scn.mapping
    timings: dict[str, float] = {}

    def do_power():
        _mp, _strace, trace = prepare_power(scn, mapping_mode)
        return mean_power_w(trace)

    power = _stage("power", timings, do_power)

    def do_solve():
        fields = []
        for path in (flp_a, flp_b):
            plan = fp.parse_flp(path)
            missing = sorted(
                set(power) - {b.name for b in plan.blocks}
            )
            if missing:
                raise ValueError(
                    f"floorplan {path} lacks blocks for components: "
                    + ", ".join(missing)
                )
            net = th.build_network(plan, scn.package)
            fields.append(th.solve_steady(net, power))
        return fields

    field_a, field_b = _stage("steady", timings, do_solve)

    common = [n for n in field_a.node_names if n in set(field_b.node_names)]
    rows = tuple(
        (
            name,
            field_a.steady_of(name),
            field_b.steady_of(name),
            field_b.steady_of(name) - field_a.steady_of(name),
        )
        for name in common
    )
    max_a = float(field_a.steady.max())
    max_b = float(field_b.steady.max())
    result = FloorplanComparison(
        steady_max_a_k=max_a,
        steady_max_b_k=max_b,
        max_steady_delta_k=abs(max_a - max_b),
        max_block_delta_k=max(abs(r[3]) for r in rows),
        rows=rows,
    )
    if out_dir is not None:
        lines = [
            f"scenario={scn.name}",
            f"plan_a={flp_a}",
            f"plan_b={flp_b}",
            f"steady_max_a_k={max_a:.6f}",
            f"steady_max_b_k={max_b:.6f}",
            f"max_steady_delta_k={result.max_steady_delta_k:.6f}",
            f"max_block_delta_k={result.max_block_delta_k:.6f}",
            "",
            "block\tsteady_a_k\tsteady_b_k\tdelta_k",
        ]
        for name, ta, tbk, delta in rows:
            lines.append(f"{name}\t{ta:.6f}\t{tbk:.6f}\t{delta:+.6f}")
        atomic_write(_out(out_dir, "compare.txt"), "\n".join(lines) + "\n")
    return result
