"""Configuration model: workload, architecture, energy table, package and scenario files.

Every named constant in the simulator enters through one of five TOML files;
nothing numeric is hard-coded downstream.  Parsing validates the documented
invariants eagerly so later stages can assume well-formed inputs.

File schemas (see the shipped files under ``tiletherm/data`` for worked
examples):

* workload:   ``[workload]`` header + one ``[[layer]]`` table per layer
* architecture: ``[tile]`` header, ``[[pe]]`` and ``[[component]]`` tables,
  optional ``[floorplan]`` policy section
* energy table: one table per component class mapping action name -> joules
* package:    ``[package]`` header + ordered ``[[layer]]`` stack tables
* scenario:   ``[scenario]`` manifest naming the other four files plus
  mapping/floorplan/dt/seed overrides
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

LAYER_KINDS = ("conv", "fc", "elementwise", "pool")
PE_KINDS = ("aimcore", "vfu")
COMPONENT_CLASSES = ("aimcore", "vfu", "actbuf", "imem")

# action vocabulary per component class; the scheduler emits exactly these
ACTIONS = {
    "aimcore": ("mac", "array_activate"),
    "vfu": ("simd_op",),
    "actbuf": ("read", "write"),
    "imem": ("fetch",),
}


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class LayerSpec:
    """One CNN layer node: tensor geometry plus per-pixel action counts."""

    name: str
    kind: str
    input_h: int
    input_w: int
    input_c: int
    kernel: int
    stride: int
    output_h: int
    output_w: int
    output_c: int
    predecessors: tuple[str, ...]
    macs_per_output_pixel: int
    buffer_reads_per_pixel: int
    buffer_writes_per_pixel: int
    imem_fetch_instructions: int

    @property
    def output_pixels(self) -> int:
        return self.output_h * self.output_w


@dataclass(frozen=True)
class WorkloadGraph:
    """Validated DAG of layers; layer order in the file fixes the layer index."""

    name: str
    layers: tuple[LayerSpec, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {l.name: i for i, l in enumerate(self.layers)}
        )

    def layer(self, name: str) -> LayerSpec:
        return self.layers[self._index[name]]

    def index(self, name: str) -> int:
        return self._index[name]

    def successors(self, name: str) -> tuple[LayerSpec, ...]:
        return tuple(l for l in self.layers if name in l.predecessors)


@dataclass(frozen=True)
class PESpec:
    name: str
    kind: str
    clock_hz: int
    macs_per_cycle: int
    actbuf: str
    imem: str
    rows: int = 0  # aimcore only
    cols: int = 0  # aimcore only

    @property
    def weight_capacity(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    cls: str
    area_mm2: float
    capacity_bytes: int = 0  # memories only


@dataclass(frozen=True)
class FloorplanPolicy:
    """Floorplanner knobs: aspect bounds per class, adjacency weights, schedule."""

    min_ar: dict[str, float]
    max_ar: dict[str, float]
    w_area: float = 1.0
    w_adj: float = 0.5
    adj_pe_actbuf: float = 2.0
    adj_pe_imem: float = 1.0
    initial_acceptance: float = 0.9
    cooling: float = 0.98
    moves_per_temp: int = 500
    stop_rel_improvement: float = 1e-3
    stop_window: int = 5

    def aspect_bounds(self, cls: str) -> tuple[float, float]:
        return self.min_ar.get(cls, 0.25), self.max_ar.get(cls, 4.0)


@dataclass(frozen=True)
class ArchitectureSpec:
    tile_name: str
    base_clock_hz: int
    comm_cycles_per_pixel: int
    pes: tuple[PESpec, ...]
    components: tuple[ComponentSpec, ...]
    die_w_mm: float
    die_h_mm: float
    floorplan: FloorplanPolicy

    def pe(self, name: str) -> PESpec:
        for p in self.pes:
            if p.name == name:
                return p
        raise KeyError(name)

    def component(self, name: str) -> ComponentSpec:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def pes_of_kind(self, kind: str) -> tuple[PESpec, ...]:
        return tuple(p for p in self.pes if p.kind == kind)

    def cycle_ratio(self, pe: PESpec) -> int:
        return self.base_clock_hz // pe.clock_hz


@dataclass(frozen=True)
class EnergyTable:
    """Per (component class, action) energy in joules."""

    energies: dict[str, dict[str, float]]

    def energy(self, cls: str, action: str) -> float:
        return self.energies[cls][action]


@dataclass(frozen=True)
class PackageLayer:
    name: str
    footprint_w_mm: float
    footprint_h_mm: float
    thickness_mm: float
    conductivity_w_per_mk: float
    volumetric_heat_capacity_j_per_m3k: float


@dataclass(frozen=True)
class PackageSpec:
    """Vertical package stack, die first, plus the convection boundary."""

    layers: tuple[PackageLayer, ...]
    convection_resistance_k_per_w: float
    ambient_k: float


@dataclass(frozen=True)
class Scenario:
    """Loaded scenario bundle: the four sub-configs plus run options."""

    name: str
    workload: WorkloadGraph
    architecture: ArchitectureSpec
    energy: EnergyTable
    package: PackageSpec
    mapping: str = "default"
    floorplan_path: str | None = None
    dt_cycles: int = 1000
    seed: int = 1


# ---------------------------------------------------------------------------
# parsing helpers


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _take(table: dict, key: str, typ, where: str, default=None):
    if key not in table:
        if default is not None:
            return default
        raise ConfigError(f"{where}: missing field '{key}'")
    val = table[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if typ is int and isinstance(val, float):
        if val != int(val):
            raise ConfigError(f"{where}: field '{key}' must be an integer")
        val = int(val)
    if not isinstance(val, typ):
        raise ConfigError(f"{where}: field '{key}' has wrong type")
    return val


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def parse_workload(path: str) -> WorkloadGraph:
    """Parse and validate a workload file into a :class:`WorkloadGraph`."""
    doc = _load_toml(path)
    head = doc.get("workload", {})
    name = _take(head, "name", str, f"{path} [workload]")
    raw_layers = doc.get("layer", [])
    _require(len(raw_layers) >= 1, f"{path}: workload has no layers")

    layers = []
    for i, t in enumerate(raw_layers):
        where = f"{path} layer[{i}]"
        spec = LayerSpec(
            name=_take(t, "name", str, where),
            kind=_take(t, "kind", str, where),
            input_h=_take(t, "input_h", int, where),
            input_w=_take(t, "input_w", int, where),
            input_c=_take(t, "input_c", int, where),
            kernel=_take(t, "kernel", int, where),
            stride=_take(t, "stride", int, where),
            output_h=_take(t, "output_h", int, where),
            output_w=_take(t, "output_w", int, where),
            output_c=_take(t, "output_c", int, where),
            predecessors=tuple(_take(t, "predecessors", list, where, default=[])),
            macs_per_output_pixel=_take(t, "macs_per_output_pixel", int, where),
            buffer_reads_per_pixel=_take(t, "buffer_reads_per_pixel", int, where),
            buffer_writes_per_pixel=_take(t, "buffer_writes_per_pixel", int, where),
            imem_fetch_instructions=_take(
                t, "imem_fetch_instructions", int, where, default=0
            ),
        )
        _validate_layer(spec, where)
        layers.append(spec)

    graph = WorkloadGraph(name=name, layers=tuple(layers))
    _validate_graph(graph, path)
    return graph


def _validate_layer(l: LayerSpec, where: str) -> None:
    _require(l.kind in LAYER_KINDS, f"{where}: unknown kind '{l.kind}'")
    for f_ in (
        "input_h", "input_w", "input_c", "kernel", "stride",
        "output_h", "output_w", "output_c",
        "macs_per_output_pixel", "buffer_reads_per_pixel",
        "buffer_writes_per_pixel",
    ):
        _require(getattr(l, f_) >= 1, f"{where}: {f_} must be >= 1")
    _require(l.imem_fetch_instructions >= 0, f"{where}: imem_fetch_instructions < 0")
    names = set(l.predecessors)
    _require(len(names) == len(l.predecessors), f"{where}: duplicate predecessor")


def _validate_graph(g: WorkloadGraph, path: str) -> None:
    seen: set[str] = set()
    for l in g.layers:
        _require(l.name not in seen, f"{path}: duplicate layer name '{l.name}'")
        seen.add(l.name)
    for l in g.layers:
        for p in l.predecessors:
            _require(p in seen, f"{path}: layer '{l.name}' references unknown '{p}'")

    # cycle check by DFS
    state: dict[str, int] = {}

    def visit(name: str) -> None:
        if state.get(name) == 1:
            raise ConfigError(f"{path}: dependency cycle through '{name}'")
        if state.get(name) == 2:
            return
        state[name] = 1
        for p in g.layer(name).predecessors:
            visit(p)
        state[name] = 2

    for l in g.layers:
        visit(l.name)

    for l in g.layers:
        where = f"{path} layer '{l.name}'"
        if l.kind in ("conv", "pool") and l.predecessors:
            want_h = (l.input_h - l.kernel) // l.stride + 1
            want_w = (l.input_w - l.kernel) // l.stride + 1
            _require(
                (l.output_h, l.output_w) == (want_h, want_w),
                f"{where}: declared output {l.output_h}x{l.output_w} does not match "
                f"derived {want_h}x{want_w} (padding is not modeled)",
            )
        if l.kind == "elementwise":
            _require(
                (l.output_h, l.output_w, l.output_c)
                == (l.input_h, l.input_w, l.input_c),
                f"{where}: elementwise output dims must equal input dims",
            )
        for p in l.predecessors:
            pl = g.layer(p)
            _require(
                (pl.output_h, pl.output_w, pl.output_c)
                == (l.input_h, l.input_w, l.input_c),
                f"{where}: input {l.input_h}x{l.input_w}x{l.input_c} does not match "
                f"predecessor '{p}' output {pl.output_h}x{pl.output_w}x{pl.output_c}",
            )


def parse_architecture(path: str) -> ArchitectureSpec:
    """Parse and validate an architecture (tile) file."""
    doc = _load_toml(path)
    head = doc.get("tile", {})
    where = f"{path} [tile]"
    tile_name = _take(head, "name", str, where)
    base_clock = _take(head, "base_clock_hz", int, where)
    comm = _take(head, "comm_cycles_per_pixel", int, where, default=0)
    die_w = _take(head, "die_w_mm", float, where)
    die_h = _take(head, "die_h_mm", float, where)
    _require(base_clock > 0, f"{where}: base_clock_hz must be > 0")
    _require(comm >= 0, f"{where}: comm_cycles_per_pixel must be >= 0")
    _require(die_w > 0 and die_h > 0, f"{where}: die dimensions must be > 0")

    comps = []
    for i, t in enumerate(doc.get("component", [])):
        w = f"{path} component[{i}]"
        c = ComponentSpec(
            name=_take(t, "name", str, w),
            cls=_take(t, "class", str, w),
            area_mm2=_take(t, "area_mm2", float, w),
            capacity_bytes=_take(t, "capacity_bytes", int, w, default=0),
        )
        _require(c.cls in COMPONENT_CLASSES, f"{w}: unknown class '{c.cls}'")
        _require(c.area_mm2 > 0, f"{w}: area_mm2 must be > 0")
        comps.append(c)
    _require(len(comps) >= 1, f"{path}: component list is empty")
    by_name = {c.name: c for c in comps}
    _require(len(by_name) == len(comps), f"{path}: duplicate component name")

    pes = []
    for i, t in enumerate(doc.get("pe", [])):
        w = f"{path} pe[{i}]"
        p = PESpec(
            name=_take(t, "name", str, w),
            kind=_take(t, "kind", str, w),
            clock_hz=_take(t, "clock_hz", int, w),
            macs_per_cycle=_take(t, "macs_per_cycle", int, w),
            actbuf=_take(t, "actbuf", str, w),
            imem=_take(t, "imem", str, w),
            rows=_take(t, "rows", int, w, default=0),
            cols=_take(t, "cols", int, w, default=0),
        )
        _require(p.kind in PE_KINDS, f"{w}: unknown kind '{p.kind}'")
        _require(p.clock_hz > 0, f"{w}: clock_hz must be > 0")
        _require(p.macs_per_cycle >= 1, f"{w}: macs_per_cycle must be >= 1")
        _require(
            base_clock % p.clock_hz == 0,
            f"{w}: clock_hz must divide base_clock_hz to an integer ratio",
        )
        if p.kind == "aimcore":
            _require(p.rows >= 1 and p.cols >= 1, f"{w}: aimcore needs rows/cols")
        else:
            _require(p.rows == 0 and p.cols == 0, f"{w}: rows/cols are aimcore-only")
        for ref, cls in ((p.actbuf, "actbuf"), (p.imem, "imem")):
            _require(ref in by_name, f"{w}: unknown component '{ref}'")
            _require(by_name[ref].cls == cls, f"{w}: '{ref}' is not a {cls}")
        _require(p.name in by_name, f"{w}: PE '{p.name}' has no component entry")
        _require(
            by_name[p.name].cls == p.kind,
            f"{w}: component class for '{p.name}' must be '{p.kind}'",
        )
        pes.append(p)
    _require(len(pes) >= 1, f"{path}: no PEs declared")
    _require(len({p.name for p in pes}) == len(pes), f"{path}: duplicate PE name")
    owned = [p.actbuf for p in pes] + [p.imem for p in pes]
    _require(len(set(owned)) == len(owned), f"{path}: a buffer is owned by two PEs")

    fp = doc.get("floorplan", {})
    policy = FloorplanPolicy(
        min_ar={k: float(v) for k, v in fp.get("min_ar", {}).items()},
        max_ar={k: float(v) for k, v in fp.get("max_ar", {}).items()},
        w_area=float(fp.get("w_area", 1.0)),
        w_adj=float(fp.get("w_adj", 0.5)),
        adj_pe_actbuf=float(fp.get("adj_pe_actbuf", 2.0)),
        adj_pe_imem=float(fp.get("adj_pe_imem", 1.0)),
        initial_acceptance=float(fp.get("initial_acceptance", 0.9)),
        cooling=float(fp.get("cooling", 0.98)),
        moves_per_temp=int(fp.get("moves_per_temp", 500)),
        stop_rel_improvement=float(fp.get("stop_rel_improvement", 1e-3)),
        stop_window=int(fp.get("stop_window", 5)),
    )

    arch = ArchitectureSpec(
        tile_name=tile_name,
        base_clock_hz=base_clock,
        comm_cycles_per_pixel=comm,
        pes=tuple(pes),
        components=tuple(comps),
        die_w_mm=die_w,
        die_h_mm=die_h,
        floorplan=policy,
    )
    total_area = sum(c.area_mm2 for c in comps)
    _require(
        total_area <= die_w * die_h + 1e-12,
        f"{path}: component area {total_area:.4f} mm2 exceeds die area",
    )
    return arch


def parse_energy_table(path: str) -> EnergyTable:
    """Parse the per-action energy table; every known action must be present."""
    doc = _load_toml(path)
    energies: dict[str, dict[str, float]] = {}
    for cls, table in doc.items():
        _require(cls in ACTIONS, f"{path}: unknown component class '{cls}'")
        _require(isinstance(table, dict), f"{path}: [{cls}] must be a table")
        energies[cls] = {}
        for action, val in table.items():
            _require(
                action in ACTIONS[cls],
                f"{path}: unknown action '{action}' for class '{cls}'",
            )
            val = float(val)
            _require(val >= 0, f"{path}: {cls}.{action} must be >= 0")
            energies[cls][action] = val
    for cls, actions in ACTIONS.items():
        for action in actions:
            _require(
                cls in energies and action in energies[cls],
                f"{path}: missing energy for {cls}.{action}",
            )
    return EnergyTable(energies=energies)


def parse_package(path: str) -> PackageSpec:
    """Parse the package stack file (die-first layer order)."""
    doc = _load_toml(path)
    head = doc.get("package", {})
    where = f"{path} [package]"
    conv_r = _take(head, "convection_resistance_k_per_w", float, where)
    ambient = _take(head, "ambient_k", float, where)
    _require(conv_r > 0, f"{where}: convection resistance must be > 0")
    _require(ambient > 0, f"{where}: ambient_k must be > 0")

    layers = []
    for i, t in enumerate(doc.get("layer", [])):
        w = f"{path} layer[{i}]"
        lay = PackageLayer(
            name=_take(t, "name", str, w),
            footprint_w_mm=_take(t, "footprint_w_mm", float, w),
            footprint_h_mm=_take(t, "footprint_h_mm", float, w),
            thickness_mm=_take(t, "thickness_mm", float, w),
            conductivity_w_per_mk=_take(t, "conductivity_w_per_mk", float, w),
            volumetric_heat_capacity_j_per_m3k=_take(
                t, "volumetric_heat_capacity_j_per_m3k", float, w
            ),
        )
        for f_ in (
            "footprint_w_mm", "footprint_h_mm", "thickness_mm",
            "conductivity_w_per_mk", "volumetric_heat_capacity_j_per_m3k",
        ):
            _require(getattr(lay, f_) > 0, f"{w}: {f_} must be > 0")
        layers.append(lay)
    _require(len(layers) >= 2, f"{path}: package needs at least die and one layer")
    for a, b in zip(layers, layers[1:]):
        _require(
            b.footprint_w_mm >= a.footprint_w_mm - 1e-12
            and b.footprint_h_mm >= a.footprint_h_mm - 1e-12,
            f"{path}: footprints must be non-decreasing outward "
            f"({a.name} -> {b.name})",
        )
    return PackageSpec(
        layers=tuple(layers),
        convection_resistance_k_per_w=conv_r,
        ambient_k=ambient,
    )


def load_scenario(path: str) -> Scenario:
    """Load a scenario manifest and all four sub-configs it names.

    Relative paths inside the manifest resolve against the manifest's
    directory.  Cross-file checks (clock ratios, energy coverage) run here so
    a loaded Scenario is ready for every downstream stage.
    """
    doc = _load_toml(path)
    head = doc.get("scenario", {})
    where = f"{path} [scenario]"
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    name = _take(head, "name", str, where)
    workload = parse_workload(resolve(_take(head, "workload", str, where)))
    arch = parse_architecture(resolve(_take(head, "architecture", str, where)))
    energy = parse_energy_table(resolve(_take(head, "energy_table", str, where)))
    package = parse_package(resolve(_take(head, "package", str, where)))
    mapping = _take(head, "mapping", str, where, default="default")
    parse_mapping_mode(mapping, arch)  # validate eagerly
    flp = head.get("floorplan")
    dt_cycles = _take(head, "dt_cycles", int, where, default=1000)
    seed = _take(head, "seed", int, where, default=1)
    _require(dt_cycles >= 1, f"{where}: dt_cycles must be >= 1")

    die = package.layers[0]
    _require(
        math.isclose(die.footprint_w_mm, arch.die_w_mm, rel_tol=1e-9)
        and math.isclose(die.footprint_h_mm, arch.die_h_mm, rel_tol=1e-9),
        f"{path}: package die footprint must match the architecture die size",
    )
    return Scenario(
        name=name,
        workload=workload,
        architecture=arch,
        energy=energy,
        package=package,
        mapping=mapping,
        floorplan_path=resolve(flp) if flp else None,
        dt_cycles=dt_cycles,
        seed=seed,
    )


def parse_mapping_mode(text: str, arch: ArchitectureSpec) -> tuple[str, str] | None:
    """Parse a mapping mode string: ``default`` or ``swapped:<pe_a>,<pe_b>``.

    Returns the swapped PE pair, or None for the default mode.
    """
    if text == "default":
        return None
    if text.startswith("swapped:"):
        parts = text[len("swapped:"):].split(",")
        _require(len(parts) == 2, f"mapping '{text}': expected swapped:<a>,<b>")
        a, b = (p.strip() for p in parts)
        try:
            pa, pb = arch.pe(a), arch.pe(b)
        except KeyError as exc:
            raise ConfigError(f"mapping '{text}': unknown PE {exc}") from exc
        _require(a != b, f"mapping '{text}': the two PEs must differ")
        _require(
            pa.kind == pb.kind,
            f"mapping '{text}': swapped PEs must share a kind",
        )
        return a, b
    raise ConfigError(f"unknown mapping mode '{text}'")


# ---------------------------------------------------------------------------
# serialization (round-trips through the parsers above)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def _emit_table(name: str, table: dict, array: bool = False) -> list[str]:
    lines = [f"[[{name}]]" if array else f"[{name}]"]
    for k, v in table.items():
        lines.append(f"{k} = {_fmt_value(v)}")
    lines.append("")
    return lines


def serialize_workload(g: WorkloadGraph) -> str:
    lines = _emit_table("workload", {"name": g.name})
    for l in g.layers:
        t = {f.name: getattr(l, f.name) for f in fields(l)}
        t["predecessors"] = list(l.predecessors)
        lines += _emit_table("layer", t, array=True)
    return "\n".join(lines)


def serialize_architecture(a: ArchitectureSpec) -> str:
    lines = _emit_table(
        "tile",
        {
            "name": a.tile_name,
            "base_clock_hz": a.base_clock_hz,
            "comm_cycles_per_pixel": a.comm_cycles_per_pixel,
            "die_w_mm": a.die_w_mm,
            "die_h_mm": a.die_h_mm,
        },
    )
    for p in a.pes:
        t = {
            "name": p.name, "kind": p.kind, "clock_hz": p.clock_hz,
            "macs_per_cycle": p.macs_per_cycle,
            "actbuf": p.actbuf, "imem": p.imem,
        }
        if p.kind == "aimcore":
            t["rows"], t["cols"] = p.rows, p.cols
        lines += _emit_table("pe", t, array=True)
    for c in a.components:
        t = {"name": c.name, "class": c.cls, "area_mm2": c.area_mm2}
        if c.capacity_bytes:
            t["capacity_bytes"] = c.capacity_bytes
        lines += _emit_table("component", t, array=True)
    pol = a.floorplan
    lines += [
        "[floorplan]",
        f"w_area = {_fmt_value(pol.w_area)}",
        f"w_adj = {_fmt_value(pol.w_adj)}",
        f"adj_pe_actbuf = {_fmt_value(pol.adj_pe_actbuf)}",
        f"adj_pe_imem = {_fmt_value(pol.adj_pe_imem)}",
        f"initial_acceptance = {_fmt_value(pol.initial_acceptance)}",
        f"cooling = {_fmt_value(pol.cooling)}",
        f"moves_per_temp = {pol.moves_per_temp}",
        f"stop_rel_improvement = {_fmt_value(pol.stop_rel_improvement)}",
        f"stop_window = {pol.stop_window}",
        "",
    ]
    if pol.min_ar:
        lines += _emit_table("floorplan.min_ar", pol.min_ar)
    if pol.max_ar:
        lines += _emit_table("floorplan.max_ar", pol.max_ar)
    return "\n".join(lines)


def serialize_energy_table(e: EnergyTable) -> str:
    lines: list[str] = []
    for cls in ACTIONS:
        lines += _emit_table(cls, e.energies[cls])
    return "\n".join(lines)


def serialize_package(p: PackageSpec) -> str:
    lines = _emit_table(
        "package",
        {
            "convection_resistance_k_per_w": p.convection_resistance_k_per_w,
            "ambient_k": p.ambient_k,
        },
    )
    for lay in p.layers:
        lines += _emit_table(
            "layer",
            {
                "name": lay.name,
                "footprint_w_mm": lay.footprint_w_mm,
                "footprint_h_mm": lay.footprint_h_mm,
                "thickness_mm": lay.thickness_mm,
                "conductivity_w_per_mk": lay.conductivity_w_per_mk,
                "volumetric_heat_capacity_j_per_m3k":
                    lay.volumetric_heat_capacity_j_per_m3k,
            },
            array=True,
        )
    return "\n".join(lines)
