"""Piecewise-constant power traces and the transforms used by the case studies.

A trace holds, per hardware component, disjoint sorted (start_cycle, end_cycle,
watts) segments.  Power is energy divided by interval duration, so every
transform here (aggregation, bubble removal, superposition, repetition,
resampling) is written to conserve total energy to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fileio import atomic_write
from .model import ArchitectureSpec, EnergyTable
from .scheduling import ActionCounts, ScheduleTrace, global_busy_union


class PowerError(ValueError):
    pass


Segments = tuple[np.ndarray, np.ndarray, np.ndarray]  # starts, ends, watts


def _empty() -> Segments:
    return (
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.float64),
    )


@dataclass(frozen=True)
class PowerTrace:
    time_base_s: float
    granularity: str  # pixel | layer | inference
    duration_cycles: int
    components: tuple[str, ...]
    segs: dict[str, Segments]
    # per (component, layer) energy attribution; lost after superimpose/repeat
    by_layer: dict[tuple[str, str], float] | None = None

    def energy(self, component: str) -> float:
        starts, ends, watts = self.segs[component]
        return float(((ends - starts) * self.time_base_s * watts).sum())

    def total_energy(self) -> float:
        return sum(self.energy(c) for c in self.components)

    def peak(self, component: str) -> float:
        watts = self.segs[component][2]
        return float(watts.max()) if len(watts) else 0.0


def _combine(starts, ends, watts) -> Segments:
    """Pointwise-sum possibly overlapping segments into disjoint sorted ones."""
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    watts = np.asarray(watts, dtype=np.float64)
    if len(starts) == 0:
        return _empty()
    times = np.concatenate([starts, ends])
    deltas = np.concatenate([watts, -watts])
    order = np.argsort(times, kind="stable")
    times, deltas = times[order], deltas[order]
    edges, first = np.unique(times, return_index=True)
    level = np.add.reduceat(deltas, first).cumsum()
    seg_s, seg_e, seg_w = edges[:-1], edges[1:], level[:-1]
    # drop zero spans left by cancellation noise
    eps = 1e-12 * float(np.abs(watts).max()) if len(watts) else 0.0
    keep = seg_w > eps
    return seg_s[keep], seg_e[keep], np.maximum(seg_w[keep], 0.0)


def _runs(starts: np.ndarray, finishes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse back-to-back slot intervals into maximal runs."""
    if len(starts) == 0:
        return starts, finishes
    breaks = np.nonzero(starts[1:] != finishes[:-1])[0] + 1
    run_s = starts[np.concatenate(([0], breaks))]
    run_e = finishes[np.concatenate((breaks - 1, [len(starts) - 1]))]
    return run_s, run_e


def pixel_power_trace(
    sched: ScheduleTrace,
    actions: ActionCounts,
    table: EnergyTable,
    arch: ArchitectureSpec,
) -> PowerTrace:
    """Pixel-granularity trace: one segment per busy run per component.

    Slots of one layer all share a duration and an energy, so back-to-back
    slots collapse into single segments without changing the power function.
    One-time instruction fetch energy lands in a 1-cycle segment at the
    layer's first slot start.
    """
    cls_of = {c.name: c.cls for c in arch.components}
    tb = 1.0 / arch.base_clock_hz
    pending: dict[str, list[Segments]] = {c.name: [] for c in arch.components}
    by_layer: dict[tuple[str, str], float] = {}

    for lname in sched.layer_names:
        starts, finishes = sched.starts[lname], sched.finishes[lname]
        dur_cycles = int(finishes[0] - starts[0])
        run_s, run_e = _runs(starts, finishes)
        for comp, _action, count in actions.per_slot[lname]:
            e_slot = count * table.energy(cls_of[comp], _action)
            if e_slot == 0.0:
                continue
            p = e_slot / (dur_cycles * tb)
            pending[comp].append(
                (run_s, run_e, np.full(len(run_s), p, dtype=np.float64))
            )
            key = (comp, lname)
            by_layer[key] = by_layer.get(key, 0.0) + e_slot * len(starts)
        for comp, _action, count in actions.one_time[lname]:
            e_once = count * table.energy(cls_of[comp], _action)
            if e_once == 0.0:
                continue
            t0 = int(starts[0])
            pending[comp].append(
                (
                    np.array([t0], dtype=np.int64),
                    np.array([t0 + 1], dtype=np.int64),
                    np.array([e_once / tb], dtype=np.float64),
                )
            )
            key = (comp, lname)
            by_layer[key] = by_layer.get(key, 0.0) + e_once

    segs: dict[str, Segments] = {}
    for comp, chunks in pending.items():
        if not chunks:
            segs[comp] = _empty()
            continue
        segs[comp] = _combine(
            np.concatenate([c[0] for c in chunks]),
            np.concatenate([c[1] for c in chunks]),
            np.concatenate([c[2] for c in chunks]),
        )
    return PowerTrace(
        time_base_s=tb,
        granularity="pixel",
        duration_cycles=sched.makespan,
        components=tuple(c.name for c in arch.components),
        segs=segs,
        by_layer=by_layer,
    )


def aggregate(trace: PowerTrace, granularity: str, sched: ScheduleTrace) -> PowerTrace:
    """Average each component's power over layer spans or the inference span.

    Layer granularity spreads each (component, layer) energy share uniformly
    over that layer's span and sums overlapping spans pointwise, which keeps
    total energy exact even when co-mapped layers interleave.
    """
    if granularity == "inference":
        dur = trace.duration_cycles
        segs: dict[str, Segments] = {}
        for comp in trace.components:
            e = trace.energy(comp)
            if e == 0.0:
                segs[comp] = _empty()
                continue
            segs[comp] = (
                np.array([0], dtype=np.int64),
                np.array([dur], dtype=np.int64),
                np.array([e / (dur * trace.time_base_s)]),
            )
        return replace(trace, granularity="inference", segs=segs, by_layer=None)
    if granularity != "layer":
        raise PowerError(f"unknown aggregation granularity '{granularity}'")
    if trace.by_layer is None:
        raise PowerError("trace lost per-layer attribution; aggregate earlier")
    segs = {}
    by_layer = dict(trace.by_layer)
    for comp in trace.components:
        starts, ends, watts = [], [], []
        for lname in sched.layer_names:
            e = trace.by_layer.get((comp, lname), 0.0)
            if e == 0.0:
                continue
            s0, s1 = sched.layer_span(lname)
            starts.append(s0)
            ends.append(s1)
            watts.append(e / ((s1 - s0) * trace.time_base_s))
        segs[comp] = _combine(starts, ends, watts)
    return replace(trace, granularity="layer", segs=segs, by_layer=by_layer)


def remove_bubbles(trace: PowerTrace, sched: ScheduleTrace) -> PowerTrace:
    """Delete globally idle cycles (all PEs idle) from the timeline.

    Every segment lies inside some globally busy interval (a powered component
    implies a busy PE), so compaction is a per-interval left shift.
    """
    busy = global_busy_union(sched)
    if len(busy) == 0:
        return trace
    lengths = busy[:, 1] - busy[:, 0]
    new_starts = np.concatenate(([0], lengths.cumsum()[:-1]))
    shift = busy[:, 0] - new_starts  # per busy interval
    segs: dict[str, Segments] = {}
    for comp in trace.components:
        s, e, w = trace.segs[comp]
        if len(s) == 0:
            segs[comp] = trace.segs[comp]
            continue
        idx = np.searchsorted(busy[:, 0], s, side="right") - 1
        segs[comp] = (s - shift[idx], e - shift[idx], w)
    duration = int(lengths.sum())
    return replace(trace, segs=segs, duration_cycles=duration)


def superimpose(trace: PowerTrace, split_cycle: int) -> PowerTrace:
    """Fold the tail [split, D) back onto t=0 and add it to the head."""
    dur = trace.duration_cycles
    if not 0 < split_cycle < dur:
        raise PowerError(f"split {split_cycle} outside (0, {dur})")
    segs: dict[str, Segments] = {}
    for comp in trace.components:
        s, e, w = trace.segs[comp]
        head = s < split_cycle
        tail = e > split_cycle
        parts_s = [s[head], np.maximum(s[tail] - split_cycle, 0)]
        parts_e = [np.minimum(e[head], split_cycle), e[tail] - split_cycle]
        parts_w = [w[head], w[tail]]
        segs[comp] = _combine(
            np.concatenate(parts_s),
            np.concatenate(parts_e),
            np.concatenate(parts_w),
        )
    return replace(
        trace,
        segs=segs,
        duration_cycles=max(split_cycle, dur - split_cycle),
        by_layer=None,
    )


def wrap_to_window(trace: PowerTrace, window_cycles: int) -> PowerTrace:
    """Superimpose repeatedly until the trace fits in ``window_cycles``.

    Iterated folding at a fixed split equals wrapping the whole timeline
    modulo the window, while preserving energy at every step.
    """
    if window_cycles <= 0:
        raise PowerError("window must be positive")
    out = trace
    while out.duration_cycles > window_cycles:
        out = superimpose(out, window_cycles)
    return out


def repeat(trace: PowerTrace, n: int) -> PowerTrace:
    """Concatenate the trace back-to-back n times."""
    if n < 1:
        raise PowerError("repeat count must be >= 1")
    if n == 1:
        return trace
    dur = trace.duration_cycles
    segs: dict[str, Segments] = {}
    for comp in trace.components:
        s, e, w = trace.segs[comp]
        offs = (np.arange(n, dtype=np.int64) * dur)[:, None]
        segs[comp] = (
            (s[None, :] + offs).ravel(),
            (e[None, :] + offs).ravel(),
            np.tile(w, n),
        )
    return replace(trace, segs=segs, duration_cycles=n * dur, by_layer=None)


# ---------------------------------------------------------------------------
# resampling + ptrace file I/O


def resample(trace: PowerTrace, dt_cycles: int) -> np.ndarray:
    """Fixed-step average powers, shape (steps, n_components).

    Each step's power is the energy inside its window divided by the full
    window, i.e. interval-overlap-weighted averaging; summed energy matches
    the trace exactly.
    """
    if dt_cycles <= 0:
        raise PowerError("dt must be positive")
    steps = max(1, -(-trace.duration_cycles // dt_cycles))
    edges = np.arange(steps + 1, dtype=np.float64) * dt_cycles
    out = np.zeros((steps, len(trace.components)))
    for j, comp in enumerate(trace.components):
        s, e, w = trace.segs[comp]
        if len(s) == 0:
            continue
        # cumulative energy (in watt·cycles) is piecewise linear between
        # segment boundaries and flat across gaps
        seg_energy = (e - s) * w
        cum = np.concatenate(([0.0], seg_energy.cumsum()))
        pts_t = np.empty(2 * len(s))
        pts_E = np.empty(2 * len(s))
        pts_t[0::2], pts_t[1::2] = s, e
        pts_E[0::2], pts_E[1::2] = cum[:-1], cum[1:]
        cum_at_edges = np.interp(edges, pts_t, pts_E)
        out[:, j] = np.diff(cum_at_edges) / dt_cycles
    return out


def export_ptrace(trace: PowerTrace, dt_cycles: int, path: str) -> np.ndarray:
    """Write resampled powers in ptrace convention plus a metadata sidecar."""
    samples = resample(trace, dt_cycles)
    lines = [" ".join(trace.components)]
    for row in samples:
        lines.append(" ".join(f"{v:.9e}" for v in row))
    atomic_write(path, "\n".join(lines) + "\n")
    meta = [
        f"dt_cycles={dt_cycles}",
        f"time_base_s={trace.time_base_s!r}",
        f"duration_cycles={trace.duration_cycles}",
        f"granularity={trace.granularity}",
    ]
    atomic_write(path + ".meta", "\n".join(meta) + "\n")
    return samples


def parse_ptrace(path: str) -> tuple[tuple[str, ...], np.ndarray, dict[str, str]]:
    """Read a ptrace file (+sidecar if present) back into memory."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header:
            raise PowerError(f"{path}: empty ptrace")
        rows = [
            [float(v) for v in line.split()]
            for line in fh
            if line.strip()
        ]
    samples = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    meta: dict[str, str] = {}
    try:
        with open(path + ".meta", "r", encoding="utf-8") as fh:
            for line in fh:
                if "=" in line:
                    k, v = line.strip().split("=", 1)
                    meta[k] = v
    except FileNotFoundError:
        pass
    return tuple(header), samples, meta


def aggregate_peak(trace: PowerTrace) -> float:
    """Peak of the summed-over-components power function."""
    starts = np.concatenate([trace.segs[c][0] for c in trace.components])
    ends = np.concatenate([trace.segs[c][1] for c in trace.components])
    watts = np.concatenate([trace.segs[c][2] for c in trace.components])
    s, e, w = _combine(starts, ends, watts)
    return float(w.max()) if len(w) else 0.0
