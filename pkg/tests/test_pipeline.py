"""End-to-end runs, studies built on them, and the command line."""

import math
import os

import numpy as np
import pytest

from tiletherm import cli
from tiletherm import floorplan as fp
from tiletherm import pipeline as pl
from tiletherm import power as pw
from tiletherm import scheduling as sch
from tiletherm import thermal as th
from tiletherm.floorplan import Block, Floorplan
from tiletherm.model import load_scenario

from conftest import DATA


TINY_WORKLOAD = """\
[workload]
name = "tiny"

[[layer]]
name = "l0"
kind = "conv"
input_h = 4
input_w = 4
input_c = 1
kernel = 1
stride = 1
output_h = 4
output_w = 4
output_c = 2
predecessors = []
macs_per_output_pixel = 4
buffer_reads_per_pixel = 1
buffer_writes_per_pixel = 1
imem_fetch_instructions = 3

[[layer]]
name = "l1"
kind = "pool"
input_h = 4
input_w = 4
input_c = 2
kernel = 2
stride = 2
output_h = 2
output_w = 2
output_c = 2
predecessors = ["l0"]
macs_per_output_pixel = 2
buffer_reads_per_pixel = 1
buffer_writes_per_pixel = 1
imem_fetch_instructions = 2
"""

TINY_ARCH = """\
[tile]
name = "tiny_tile"
base_clock_hz = 1000000000
die_w_mm = 3.0
die_h_mm = 3.0

[floorplan]
moves_per_temp = 80
stop_window = 3

[[pe]]
name = "a0"
kind = "aimcore"
clock_hz = 1000000000
macs_per_cycle = 4
actbuf = "b0"
imem = "i0"
rows = 64
cols = 4

[[pe]]
name = "a1"
kind = "aimcore"
clock_hz = 500000000
macs_per_cycle = 4
actbuf = "b1"
imem = "i1"
rows = 64
cols = 4

[[pe]]
name = "v0"
kind = "vfu"
clock_hz = 1000000000
macs_per_cycle = 2
actbuf = "b2"
imem = "i2"

[[component]]
name = "a0"
class = "aimcore"
area_mm2 = 0.8

[[component]]
name = "a1"
class = "aimcore"
area_mm2 = 0.8

[[component]]
name = "v0"
class = "vfu"
area_mm2 = 0.6

[[component]]
name = "b0"
class = "actbuf"
area_mm2 = 0.5

[[component]]
name = "b1"
class = "actbuf"
area_mm2 = 0.5

[[component]]
name = "b2"
class = "actbuf"
area_mm2 = 0.5

[[component]]
name = "i0"
class = "imem"
area_mm2 = 0.3

[[component]]
name = "i1"
class = "imem"
area_mm2 = 0.3

[[component]]
name = "i2"
class = "imem"
area_mm2 = 0.3
"""

TINY_PACKAGE = """\
[package]
convection_resistance_k_per_w = 0.17
ambient_k = 313.15

[[layer]]
name = "die"
footprint_w_mm = 3.0
footprint_h_mm = 3.0
thickness_mm = 0.5
conductivity_w_per_mk = 140.0
volumetric_heat_capacity_j_per_m3k = 1750000.0

[[layer]]
name = "sink"
footprint_w_mm = 4.0
footprint_h_mm = 4.0
thickness_mm = 1.0
conductivity_w_per_mk = 400.0
volumetric_heat_capacity_j_per_m3k = 3550000.0
"""

TINY_SCENARIO = """\
[scenario]
name = "tiny"
workload = "workload.toml"
architecture = "arch.toml"
energy_table = "energy.toml"
package = "package.toml"
floorplan = "tiny.flp"
mapping = "default"
dt_cycles = 5
seed = 3
"""


@pytest.fixture(scope="module")
def tiny_env(tmp_path_factory):
    """A complete fast scenario on disk: manifest path plus variants."""
    root = tmp_path_factory.mktemp("tiny")
    (root / "workload.toml").write_text(TINY_WORKLOAD)
    (root / "arch.toml").write_text(TINY_ARCH)
    (root / "energy.toml").write_text(
        (DATA / "energy_table.toml").read_text()
    )
    (root / "package.toml").write_text(TINY_PACKAGE)
    names = ["a0", "a1", "v0", "b0", "b1", "b2", "i0", "i1", "i2"]
    blocks = tuple(
        Block(n, 1.0, 1.0, float(k % 3), float(k // 3))
        for k, n in enumerate(names)
    )
    fp.export_flp(Floorplan(3.0, 3.0, blocks, provenance="fine"),
                  str(root / "tiny.flp"))
    (root / "scenario.toml").write_text(TINY_SCENARIO)
    # same scenario without a pinned floorplan: stages must anneal one
    (root / "scenario_anneal.toml").write_text(
        TINY_SCENARIO.replace('floorplan = "tiny.flp"\n', "")
    )
    return root


@pytest.fixture(scope="module")
def tiny_scn(tiny_env):
    return load_scenario(str(tiny_env / "scenario.toml"))


# ---------------------------------------------------------------------------
# full pipeline on the shipped scenario


def test_pipeline_writes_every_artifact(pipeline_result):
    result, out_dir = pipeline_result
    assert set(result.artifacts) == {
        "schedule", "mapping", "ptrace", "floorplan", "steady", "heatmap",
        "ttrace",
    }
    for path in result.artifacts.values():
        assert os.path.exists(path)
    assert os.path.exists(os.path.join(out_dir, "summary.txt"))
    # the plan came from the manifest, so no fresh coarse plan is written
    assert not os.path.exists(os.path.join(out_dir, "floorplan_coarse.flp"))


def test_pipeline_result_consistency(pipeline_result, scenario,
                                     shipped_schedule, shipped_trace):
    result, _ = pipeline_result
    _mapping, strace = shipped_schedule
    assert result.scenario == scenario.name
    assert result.mapping == "default"
    assert result.total_latency_cycles == strace.makespan
    assert result.total_energy_j == pytest.approx(
        shipped_trace.total_energy(), rel=1e-12
    )
    comp_names = {c.name for c in scenario.architecture.components}
    assert set(result.component_energy_j) == comp_names
    assert sum(result.component_energy_j.values()) == pytest.approx(
        result.total_energy_j, rel=1e-9
    )
    assert result.bubble_fraction == pytest.approx(
        pl.bubble_fraction(strace), rel=1e-12
    )
    assert 0.0 < result.bubble_fraction < 1.0
    assert result.hottest_block in comp_names
    assert result.steady_max_k > result.steady_min_k > scenario.package.ambient_k
    assert result.transient_peak_rise_k > 0.0
    assert set(result.stage_seconds) == {
        "schedule", "power", "floorplan", "steady", "transient",
    }


def test_pipeline_artifacts_reparse(pipeline_result, scenario, shipped_trace):
    result, _ = pipeline_result
    records = sch.parse_schedule_dump(result.artifacts["schedule"])
    layers = {r[0] for r in records}
    assert layers == {l.name for l in scenario.workload.layers}

    with open(result.artifacts["mapping"], encoding="utf-8") as fh:
        rows = [line.split("\t") for line in fh.read().splitlines()]
    assert {r[0] for r in rows} == layers
    pes = {p.name for p in scenario.architecture.pes}
    assert all(r[1] in pes for r in rows)

    header, samples, meta = pw.parse_ptrace(result.artifacts["ptrace"])
    assert header == shipped_trace.components
    assert meta["dt_cycles"] == "1000"
    assert samples.shape[0] == math.ceil(shipped_trace.duration_cycles / 1000)

    plan = fp.parse_flp(result.artifacts["floorplan"])
    assert {b.name for b in plan.blocks} == {
        c.name for c in scenario.architecture.components
    }

    temps = th.parse_temps(result.artifacts["steady"])
    assert set(temps) >= {c.name for c in scenario.architecture.components}
    assert max(temps.values()) == pytest.approx(result.steady_max_k, abs=1e-6)
    assert temps[result.hottest_block] == pytest.approx(
        max(temps[c.name] for c in scenario.architecture.components),
        abs=1e-9,
    )

    field = th.parse_ttrace(result.artifacts["ttrace"])
    assert field.dt_s == pytest.approx(1e-6)  # 1000 cycles at 1 GHz
    assert field.transient.shape == (samples.shape[0], len(temps))
    assert field.transient.max() - scenario.package.ambient_k == pytest.approx(
        result.transient_peak_rise_k, abs=1e-5
    )

    with open(result.artifacts["heatmap"], "rb") as fh:
        assert fh.read(11) == b"P6\n360 357\n"


def test_summary_round_trip(pipeline_result):
    result, out_dir = pipeline_result
    meta, comps = pl.parse_summary(os.path.join(out_dir, "summary.txt"))
    assert meta["scenario"] == result.scenario
    assert meta["mapping"] == result.mapping
    assert int(meta["total_latency_cycles"]) == result.total_latency_cycles
    assert float(meta["total_energy_j"]) == pytest.approx(
        result.total_energy_j, rel=1e-8
    )
    assert float(meta["bubble_fraction"]) == pytest.approx(
        result.bubble_fraction, abs=1e-6
    )
    assert float(meta["steady_max_k"]) == pytest.approx(
        result.steady_max_k, abs=1e-6
    )
    assert meta["hottest_block"] == result.hottest_block
    assert float(meta["transient_peak_rise_k"]) == pytest.approx(
        result.transient_peak_rise_k, abs=1e-6
    )
    assert "stage_schedule_s" in meta
    for name, energy in result.component_energy_j.items():
        assert comps[name] == pytest.approx(energy, rel=1e-8)


def test_mean_power_matches_trace_energy(shipped_trace):
    mean = pl.mean_power_w(shipped_trace)
    assert set(mean) == set(shipped_trace.components)
    horizon = shipped_trace.duration_cycles * shipped_trace.time_base_s
    for name, watts in mean.items():
        assert watts >= 0.0
        assert watts == pytest.approx(
            shipped_trace.energy(name) / horizon, rel=1e-12
        )


# ---------------------------------------------------------------------------
# pipeline options on the tiny scenario


def test_pipeline_mapping_override(tiny_scn, tmp_path):
    base = pl.run_pipeline(tiny_scn, str(tmp_path / "a"))
    swapped = pl.run_pipeline(
        tiny_scn, str(tmp_path / "b"), mapping="swapped:a0,a1"
    )
    assert base.mapping == "default"
    assert swapped.mapping == "swapped:a0,a1"
    # energy is mapping-independent under a shared energy table; latency
    # moves because a1 runs at half the base clock
    assert swapped.total_energy_j == pytest.approx(
        base.total_energy_j, rel=1e-12
    )
    assert swapped.total_latency_cycles != base.total_latency_cycles

    def mapped_pe(out, layer):
        with open(os.path.join(out, "mapping.txt"), encoding="utf-8") as fh:
            return dict(line.split("\t") for line in fh.read().splitlines())[layer]

    a, b = mapped_pe(str(tmp_path / "a"), "l0"), mapped_pe(str(tmp_path / "b"), "l0")
    assert {a, b} == {"a0", "a1"}


def test_pipeline_dt_override(tiny_scn, tmp_path):
    result = pl.run_pipeline(tiny_scn, str(tmp_path), dt_cycles=7)
    _, samples, meta = pw.parse_ptrace(result.artifacts["ptrace"])
    assert meta["dt_cycles"] == "7"
    assert samples.shape[0] == math.ceil(result.total_latency_cycles / 7)
    field = th.parse_ttrace(result.artifacts["ttrace"])
    assert field.dt_s == pytest.approx(7e-9)
    assert field.transient.shape[0] == samples.shape[0]


def test_pipeline_anneals_when_no_plan_is_given(tiny_env, tmp_path):
    scn = load_scenario(str(tiny_env / "scenario_anneal.toml"))
    assert scn.floorplan_path is None
    result = pl.run_pipeline(scn, str(tmp_path), seed=11)
    coarse_path = os.path.join(str(tmp_path), "floorplan_coarse.flp")
    assert os.path.exists(coarse_path)
    coarse = fp.parse_flp(coarse_path)
    assert {b.name for b in coarse.blocks} == {"aimcore", "vfu", "actbuf", "imem"}
    fine = fp.parse_flp(result.artifacts["floorplan"])
    assert {b.name for b in fine.blocks} == {
        "a0", "a1", "v0", "b0", "b1", "b2", "i0", "i1", "i2"
    }
    fp.check_plan(fine)


def test_pipeline_wraps_stage_failures(tiny_scn, tmp_path):
    with pytest.raises(pl.PipelineError, match="stage schedule"):
        pl.run_pipeline(tiny_scn, str(tmp_path), mapping="swapped:a0,zz")


# ---------------------------------------------------------------------------
# upper-bound study


@pytest.fixture(scope="module")
def tiny_debubbled(tiny_scn):
    _mapping, strace, trace = pl.prepare_power(tiny_scn, "default")
    return pw.remove_bubbles(trace, strace)


def test_upper_bound_rows_and_files(tiny_scn, tiny_debubbled, tmp_path):
    split = tiny_debubbled.duration_cycles // 2
    rows = pl.upper_bound(
        tiny_scn, str(tmp_path), [split], repeats=3, include_original=True
    )
    assert [r.variant for r in rows] == [
        "original", "debubbled", f"split-{split}",
    ]
    assert rows[0].duration_cycles >= rows[1].duration_cycles
    assert rows[1].duration_cycles == tiny_debubbled.duration_cycles
    assert rows[2].duration_cycles <= split
    for row in rows:
        assert len(row.rep_peaks_k) == 3
        assert row.peak_rise_k == pytest.approx(max(row.rep_peaks_k), abs=1e-12)
        assert row.peak_rise_k > 0.0
        assert os.path.exists(row.ttrace_path)
        field = th.parse_ttrace(row.ttrace_path)
        steps = 3 * row.duration_cycles / tiny_scn.dt_cycles
        assert field.transient.shape[0] == max(1, math.ceil(steps))


def test_upper_bound_report_round_trip(tiny_scn, tiny_debubbled, tmp_path):
    split = max(1, tiny_debubbled.duration_cycles // 3)
    rows = pl.upper_bound(tiny_scn, str(tmp_path), [split], repeats=2)
    report = pl.parse_upper_bound(os.path.join(str(tmp_path), "upper_bound.txt"))
    assert [r.variant for r in report] == [r.variant for r in rows]
    for got, want in zip(report, rows):
        assert got.duration_cycles == want.duration_cycles
        assert got.peak_rise_k == pytest.approx(want.peak_rise_k, abs=1e-6)
        assert got.rep_peaks_k == pytest.approx(want.rep_peaks_k, abs=1e-6)


def test_upper_bound_rejects_bad_inputs(tiny_scn, tmp_path):
    with pytest.raises(pl.PipelineError, match="repeats must be >= 1"):
        pl.upper_bound(tiny_scn, str(tmp_path), [], repeats=0)
    with pytest.raises(pl.PipelineError, match="out of range"):
        pl.upper_bound(tiny_scn, str(tmp_path), [10**9], repeats=1)


# ---------------------------------------------------------------------------
# floorplan comparison


def test_compare_floorplans_reports_deltas(scenario, tmp_path):
    flp_a = str(DATA / "floorplan.flp")
    flp_b = str(DATA / "floorplan_alt.flp")
    result = pl.compare_floorplans(scenario, flp_a, flp_b,
                                   out_dir=str(tmp_path))
    assert result.max_steady_delta_k == pytest.approx(
        abs(result.steady_max_a_k - result.steady_max_b_k), rel=1e-12
    )
    deltas = {name: delta for name, _, _, delta in result.rows}
    comp_names = {c.name for c in scenario.architecture.components}
    assert comp_names <= set(deltas)
    assert result.max_block_delta_k == pytest.approx(
        max(abs(d) for d in deltas.values()), rel=1e-12
    )
    # the two shipped plans differ only in the vfu swap
    assert result.max_block_delta_k < 0.05

    with open(os.path.join(str(tmp_path), "compare.txt"), encoding="utf-8") as fh:
        text = fh.read()
    assert f"steady_max_a_k={result.steady_max_a_k:.6f}" in text
    assert f"max_block_delta_k={result.max_block_delta_k:.6f}" in text
    assert text.count("\n") >= 8 + len(result.rows)


def test_compare_floorplans_needs_all_components(tiny_env, tiny_scn, tmp_path):
    good = str(tiny_env / "tiny.flp")
    plan = fp.parse_flp(good)
    renamed = tuple(
        Block("other" if b.name == "a0" else b.name, b.w_mm, b.h_mm,
              b.x_mm, b.y_mm)
        for b in plan.blocks
    )
    bad = str(tmp_path / "bad.flp")
    fp.export_flp(Floorplan(plan.die_w_mm, plan.die_h_mm, renamed,
                            provenance="fine"), bad)
    with pytest.raises(pl.PipelineError, match="lacks blocks for components: a0"):
        pl.compare_floorplans(tiny_scn, good, bad, out_dir=str(tmp_path))


def test_compare_floorplan_with_itself_is_flat(tiny_env, tiny_scn, tmp_path):
    path = str(tiny_env / "tiny.flp")
    result = pl.compare_floorplans(tiny_scn, path, path,
                                   out_dir=str(tmp_path))
    assert result.max_steady_delta_k == 0.0
    assert result.max_block_delta_k == 0.0


# ---------------------------------------------------------------------------
# command line


def _run_cli(args):
    return cli.main(args)


def test_cli_map(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli(["map", "--scenario", str(tiny_env / "scenario.toml"),
                   "--out", out])
    assert rc == 0
    captured = capsys.readouterr()
    assert "makespan_cycles = " in captured.out
    assert "bubble_fraction = " in captured.out
    assert os.path.exists(os.path.join(out, "schedule.txt"))
    assert os.path.exists(os.path.join(out, "mapping.txt"))


def test_cli_trace(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli(["trace", "--scenario", str(tiny_env / "scenario.toml"),
                   "--out", out, "--dt-cycles", "3"])
    assert rc == 0
    assert "total_energy_j = " in capsys.readouterr().out
    _, _, meta = pw.parse_ptrace(os.path.join(out, "power.ptrace"))
    assert meta["dt_cycles"] == "3"


def test_cli_floorplan(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli([
        "floorplan", "--scenario", str(tiny_env / "scenario_anneal.toml"),
        "--out", out, "--seed", "5",
    ])
    assert rc == 0
    captured = capsys.readouterr()
    assert "blocks = 9" in captured.out
    assert "die_utilization = " in captured.out
    fp.check_plan(fp.parse_flp(os.path.join(out, "floorplan.flp")))
    fp.check_plan(fp.parse_flp(os.path.join(out, "floorplan_coarse.flp")))


def test_cli_thermal_steady(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli([
        "thermal-steady", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", out, "--heatmap",
    ])
    assert rc == 0
    captured = capsys.readouterr()
    assert "hottest_block = " in captured.out
    assert "steady_max_k = " in captured.out
    assert os.path.exists(os.path.join(out, "steady.temps"))
    with open(os.path.join(out, "steady.ppm"), "rb") as fh:
        assert fh.read(2) == b"P6"


def test_cli_thermal_transient(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli([
        "thermal-transient", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", out, "--dt-cycles", "4",
    ])
    assert rc == 0
    assert "transient_peak_rise_k = " in capsys.readouterr().out
    field = th.parse_ttrace(os.path.join(out, "transient.ttrace"))
    assert field.dt_s == pytest.approx(4e-9)


def test_cli_pipeline(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    rc = _run_cli([
        "pipeline", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", out, "--heatmap",
    ])
    assert rc == 0
    captured = capsys.readouterr()
    assert "total_energy_j = " in captured.out
    assert "summary = " in captured.out
    meta, _ = pl.parse_summary(os.path.join(out, "summary.txt"))
    assert meta["scenario"] == "tiny"


def test_cli_upper_bound(tiny_env, tiny_debubbled, tmp_path, capsys):
    out = str(tmp_path)
    split = max(1, tiny_debubbled.duration_cycles // 2)
    rc = _run_cli([
        "upper-bound", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", out, "--splits", str(split), "--repeats", "2",
    ])
    assert rc == 0
    captured = capsys.readouterr()
    assert "debubbled: " in captured.out
    assert f"split-{split}: " in captured.out
    rows = pl.parse_upper_bound(os.path.join(out, "upper_bound.txt"))
    assert [r.variant for r in rows] == ["debubbled", f"split-{split}"]


def test_cli_compare_flp(tiny_env, tmp_path, capsys):
    out = str(tmp_path)
    path = str(tiny_env / "tiny.flp")
    rc = _run_cli([
        "compare-flp", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", out, path, path,
    ])
    assert rc == 0
    assert "max_steady_delta_k = 0.000000" in capsys.readouterr().out
    assert os.path.exists(os.path.join(out, "compare.txt"))


def test_cli_reports_errors_on_stderr(tiny_env, tmp_path, capsys):
    rc = _run_cli([
        "pipeline", "--scenario", str(tiny_env / "nope.toml"),
        "--out", str(tmp_path),
    ])
    assert rc == 1
    captured = capsys.readouterr()
    assert captured.err.startswith("tiletherm pipeline: ")

    rc = _run_cli([
        "map", "--scenario", str(tiny_env / "scenario.toml"),
        "--out", str(tmp_path), "--mapping", "swapped:a0,a0",
    ])
    assert rc == 1
    assert "tiletherm map: " in capsys.readouterr().err


def test_cli_requires_a_command():
    with pytest.raises(SystemExit):
        cli.main([])
