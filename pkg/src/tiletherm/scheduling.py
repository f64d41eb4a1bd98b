"""Layer-to-PE assignment and pixel-granularity schedule construction.

A schedule assigns every output pixel of every layer a [start, finish) interval
in base-clock cycles on its PE.  Inter-layer dependencies are tracked at row
granularity for conv/pool consumers (an output row waits for whole predecessor
rows), at pixel index for elementwise consumers, and on the full predecessor
tensor for fc consumers.  Idle gaps forced by unmet dependencies are the
pipeline bubbles later visible in the power traces.

A layer whose output channels exceed the array width of its AiMCore is
scheduled as ceil(output_c / cols) consecutive slots per raster position; the
shipped configs always use a single slot per position.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .model import ArchitectureSpec, LayerSpec, PESpec, WorkloadGraph, parse_mapping_mode


class SchedulingError(ValueError):
    pass


@dataclass(frozen=True)
class Mapping:
    """Layer name -> PE name assignment plus the mode that produced it."""

    assignment: dict[str, str]
    mode: str = "default"

    def pe_of(self, layer: str) -> str:
        return self.assignment[layer]


@dataclass(frozen=True)
class ScheduleTrace:
    """Start/finish cycles per (layer, slot) plus derived per-PE intervals."""

    layer_names: tuple[str, ...]
    pe_of: dict[str, str]
    starts: dict[str, np.ndarray]
    finishes: dict[str, np.ndarray]
    slots_per_position: dict[str, int]
    makespan: int

    def first_start(self, layer: str) -> int:
        return int(self.starts[layer][0])

    def last_finish(self, layer: str) -> int:
        return int(self.finishes[layer][-1])

    def layer_span(self, layer: str) -> tuple[int, int]:
        return self.first_start(layer), self.last_finish(layer)

    def pe_intervals(self, pe: str) -> np.ndarray:
        """All busy intervals of one PE as an (n, 2) array sorted by start."""
        chunks = [
            np.stack([self.starts[l], self.finishes[l]], axis=1)
            for l in self.layer_names
            if self.pe_of[l] == pe
        ]
        if not chunks:
            return np.empty((0, 2), dtype=np.int64)
        merged = np.concatenate(chunks)
        return merged[np.argsort(merged[:, 0], kind="stable")]

    def pes(self) -> tuple[str, ...]:
        seen = dict.fromkeys(self.pe_of.values())
        return tuple(seen)


@dataclass(frozen=True)
class ActionCounts:
    """Action counts attached to schedule intervals.

    ``per_slot`` lists (component, action, count) charged during every slot
    interval of the layer; ``one_time`` lists counts charged as a single
    1-cycle event at the layer's first slot start (instruction fetch).
    """

    per_slot: dict[str, tuple[tuple[str, str, int], ...]]
    one_time: dict[str, tuple[tuple[str, str, int], ...]]


def layer_weights(layer: LayerSpec) -> int:
    """Weight cells a conv/fc layer occupies in an in-memory compute array."""
    return layer.kernel * layer.kernel * layer.input_c * layer.output_c


def assign_layers(
    graph: WorkloadGraph, arch: ArchitectureSpec, mode: str = "default"
) -> Mapping:
    """Deterministically assign layers to PEs.

    conv/fc layers go to AiMCores by greedy balancing of weight-cell load
    (each layer to the currently least-loaded core, ties to the earlier
    declared core); elementwise/pool layers round-robin over VFUs.  The
    ``swapped:<a>,<b>`` mode exchanges the full layer sets of two same-kind
    PEs afterwards.
    """
    swap = parse_mapping_mode(mode, arch)
    aimcores = arch.pes_of_kind("aimcore")
    vfus = arch.pes_of_kind("vfu")

    compute_layers = [l for l in graph.layers if l.kind in ("conv", "fc")]
    simd_layers = [l for l in graph.layers if l.kind in ("elementwise", "pool")]
    if compute_layers and not aimcores:
        raise SchedulingError("workload has conv/fc layers but no aimcore PE")
    if simd_layers and not vfus:
        raise SchedulingError("workload has elementwise/pool layers but no vfu PE")

    total_weights = sum(layer_weights(l) for l in compute_layers)
    capacity = sum(p.weight_capacity for p in aimcores)
    if compute_layers and total_weights > capacity:
        raise SchedulingError(
            f"layer weights ({total_weights} cells) exceed aggregate aimcore "
            f"capacity ({capacity} cells)"
        )

    assignment: dict[str, str] = {}
    load = {p.name: 0 for p in aimcores}
    for l in compute_layers:
        # min() is stable: first (declaration-order) PE wins ties
        target = min(aimcores, key=lambda p: load[p.name])
        assignment[l.name] = target.name
        load[target.name] += layer_weights(l)
    for i, l in enumerate(simd_layers):
        assignment[l.name] = vfus[i % len(vfus)].name

    if swap is not None:
        a, b = swap
        for name, pe in assignment.items():
            if pe == a:
                assignment[name] = b
            elif pe == b:
                assignment[name] = a
    return Mapping(assignment=assignment, mode=mode)


def pixel_latency(layer: LayerSpec, pe: PESpec, arch: ArchitectureSpec) -> int:
    """Base-clock cycles to produce one output slot of ``layer`` on ``pe``."""
    compute = -(-layer.macs_per_output_pixel // pe.macs_per_cycle)  # ceil div
    cycles = compute * arch.cycle_ratio(pe) + arch.comm_cycles_per_pixel
    return max(cycles, 1)


def slots_per_position(layer: LayerSpec, pe: PESpec) -> int:
    """Slots scheduled per raster position (channel groups on narrow arrays)."""
    if pe.kind == "aimcore" and pe.cols > 0:
        return -(-layer.output_c // pe.cols)
    return 1


def _required_prefix(layer: LayerSpec, pred: LayerSpec, pred_slots_per_pos: int,
                     position: int) -> int:
    """Number of leading predecessor slots a given output position needs."""
    if layer.kind == "elementwise":
        return (position + 1) * pred_slots_per_pos
    if layer.kind == "fc":
        return pred.output_pixels * pred_slots_per_pos
    # conv/pool rule: whole predecessor rows up to y*stride + kernel - 1
    y = position // layer.output_w
    rows = min(y * layer.stride + layer.kernel, pred.output_h)
    return rows * pred.output_w * pred_slots_per_pos


def schedule(
    graph: WorkloadGraph, mapping: Mapping, arch: ArchitectureSpec
) -> ScheduleTrace:
    """Discrete-event schedule of every (layer, slot) on its assigned PE.

    Pixels of one layer issue in raster order; a PE that is idle picks the
    ready slot of its lowest-indexed layer.  Dispatch opportunities only arise
    at slot completion times, so an event queue over completions reproduces a
    cycle-by-cycle simulation exactly.
    """
    pes = {p.name: p for p in arch.pes}
    layers = graph.layers
    n = len(layers)
    pe_names = [mapping.pe_of(l.name) for l in layers]
    for l, pe_name in zip(layers, pe_names):
        kind = pes[pe_name].kind
        want = "aimcore" if l.kind in ("conv", "fc") else "vfu"
        if kind != want:
            raise SchedulingError(
                f"layer '{l.name}' ({l.kind}) cannot run on {kind} '{pe_name}'"
            )

    spp = [slots_per_position(l, pes[pe_names[i]]) for i, l in enumerate(layers)]
    n_slots = [l.output_pixels * spp[i] for i, l in enumerate(layers)]
    latency = [pixel_latency(l, pes[pe_names[i]], arch) for i, l in enumerate(layers)]
    pred_idx = [[graph.index(p) for p in l.predecessors] for l in layers]

    starts = [np.empty(n_slots[i], dtype=np.int64) for i in range(n)]
    finishes = [np.empty(n_slots[i], dtype=np.int64) for i in range(n)]
    next_slot = [0] * n
    issued_finish = [0] * n  # finish time of the most recently issued slot

    pe_layers: dict[str, list[int]] = {p.name: [] for p in arch.pes}
    for i in range(n):
        pe_layers[pe_names[i]].append(i)
    pe_free_at = {p.name: 0 for p in arch.pes}

    def ready_time(i: int) -> int | None:
        """Earliest start of layer i's next slot, or None if deps unissued."""
        s = next_slot[i]
        t = 0
        position = s // spp[i]
        for q in pred_idx[i]:
            need = _required_prefix(layers[i], layers[q], spp[q], position)
            if need > 0:
                if next_slot[q] < need:
                    return None
                t = max(t, int(finishes[q][need - 1]))
        return t

    # completion events: (time, counter) – counter only breaks heap ties
    events: list[tuple[int, int]] = []
    counter = 0
    remaining = sum(n_slots)

    def dispatch(now: int) -> int:
        nonlocal counter, remaining
        dispatched = 0
        for pe_name, members in pe_layers.items():
            if pe_free_at[pe_name] > now:
                continue
            # lowest layer index with a ready slot wins
            for i in members:
                if next_slot[i] >= n_slots[i]:
                    continue
                r = ready_time(i)
                if r is None or r > now:
                    continue
                s = next_slot[i]
                starts[i][s] = now
                finishes[i][s] = now + latency[i]
                next_slot[i] = s + 1
                pe_free_at[pe_name] = now + latency[i]
                heapq.heappush(events, (now + latency[i], counter))
                counter += 1
                remaining -= 1
                dispatched += 1
                break
        return dispatched

    dispatch(0)
    while remaining > 0:
        if not events:
            blocked = next(
                (
                    (layers[i].name, layers[q].name)
                    for i in range(n)
                    if next_slot[i] < n_slots[i]
                    for q in pred_idx[i]
                    if next_slot[q] < _required_prefix(
                        layers[i], layers[q], spp[q], next_slot[i] // spp[i]
                    )
                ),
                ("<unknown>", "<unknown>"),
            )
            raise SchedulingError(
                f"schedule deadlock: '{blocked[0]}' waits on '{blocked[1]}'"
            )
        now = events[0][0]
        while events and events[0][0] == now:
            heapq.heappop(events)
        dispatch(now)

    makespan = max(int(finishes[i][-1]) for i in range(n)) if n else 0
    return ScheduleTrace(
        layer_names=tuple(l.name for l in layers),
        pe_of={l.name: pe_names[i] for i, l in enumerate(layers)},
        starts={l.name: starts[i] for i, l in enumerate(layers)},
        finishes={l.name: finishes[i] for i, l in enumerate(layers)},
        slots_per_position={l.name: spp[i] for i, l in enumerate(layers)},
        makespan=makespan,
    )


def count_actions(
    graph: WorkloadGraph, mapping: Mapping, arch: ArchitectureSpec
) -> ActionCounts:
    """Per-slot and one-time action counts for every layer.

    Reads hit the producing PE's own activation buffer; writes hit the buffer
    of each distinct consumer layer's PE (a sink layer writes back to its own
    buffer).  Instruction fetches are charged once per layer at its first slot.
    """
    pes = {p.name: p for p in arch.pes}
    per_slot: dict[str, tuple[tuple[str, str, int], ...]] = {}
    one_time: dict[str, tuple[tuple[str, str, int], ...]] = {}
    for l in graph.layers:
        pe = pes[mapping.pe_of(l.name)]
        acts: list[tuple[str, str, int]] = []
        if pe.kind == "aimcore":
            acts.append((pe.name, "mac", l.macs_per_output_pixel))
            acts.append((pe.name, "array_activate", 1))
        else:
            acts.append((pe.name, "simd_op", l.macs_per_output_pixel))
        acts.append((pe.actbuf, "read", l.buffer_reads_per_pixel))
        consumers = graph.successors(l.name)
        dest_bufs = list(dict.fromkeys(
            pes[mapping.pe_of(c.name)].actbuf for c in consumers
        )) or [pe.actbuf]
        for buf in dest_bufs:
            acts.append((buf, "write", l.buffer_writes_per_pixel))
        per_slot[l.name] = tuple(acts)
        if l.imem_fetch_instructions > 0:
            one_time[l.name] = ((pe.imem, "fetch", l.imem_fetch_instructions),)
        else:
            one_time[l.name] = ()
    return ActionCounts(per_slot=per_slot, one_time=one_time)


def merge_intervals(intervals: np.ndarray) -> np.ndarray:
    """Merge touching/overlapping [start, end) intervals (input sorted)."""
    if len(intervals) == 0:
        return intervals.reshape(0, 2)
    merged = [[int(intervals[0][0]), int(intervals[0][1])]]
    for s, e in intervals[1:]:
        if s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], int(e))
        else:
            merged.append([int(s), int(e)])
    return np.asarray(merged, dtype=np.int64)


def bubble_intervals(trace: ScheduleTrace, pe: str) -> list[tuple[int, int]]:
    """Maximal idle gaps of one PE between its first start and last finish."""
    busy = merge_intervals(trace.pe_intervals(pe))
    gaps = []
    for prev, nxt in zip(busy[:-1], busy[1:]):
        if nxt[0] > prev[1]:
            gaps.append((int(prev[1]), int(nxt[0])))
    return gaps


def global_busy_union(trace: ScheduleTrace) -> np.ndarray:
    """Union of busy intervals over all PEs; complement = global bubbles."""
    chunks = [trace.pe_intervals(pe) for pe in trace.pes()]
    merged = np.concatenate([c for c in chunks if len(c)]) if chunks else None
    if merged is None or len(merged) == 0:
        return np.empty((0, 2), dtype=np.int64)
    merged = merged[np.argsort(merged[:, 0], kind="stable")]
    return merge_intervals(merged)


# ---------------------------------------------------------------------------
# schedule dump file: one record per slot


def dump_schedule(trace: ScheduleTrace, path: str) -> None:
    """Write the per-pixel schedule as a whitespace-separated table."""
    from .fileio import atomic_write

    lines = ["layer pixel pe start finish"]
    for name in trace.layer_names:
        pe = trace.pe_of[name]
        st, fi = trace.starts[name], trace.finishes[name]
        for p in range(len(st)):
            lines.append(f"{name} {p} {pe} {st[p]} {fi[p]}")
    atomic_write(path, "\n".join(lines) + "\n")


def parse_schedule_dump(path: str) -> list[tuple[str, int, str, int, int]]:
    """Read a schedule dump back as (layer, pixel, pe, start, finish) records."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if header != ["layer", "pixel", "pe", "start", "finish"]:
            raise SchedulingError(f"{path}: not a schedule dump")
        for ln, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5:
                raise SchedulingError(f"{path}:{ln}: malformed record")
            records.append(
                (parts[0], int(parts[1]), parts[2], int(parts[3]), int(parts[4]))
            )
    return records
