"""Compact RC thermal network: build from a floorplan and package stack, solve.

Node topology per package layer, die first:
  * die: one node per floorplan block, plus passive silicon fillers covering
    dead space so lateral conduction paths survive gaps;
  * interior layers at the die footprint (TIM): per-block mirrors;
  * interior layers with a larger footprint (heat spreader): per-block center
    mirrors plus four peripheral ring nodes (N/S full width, E/W inner height,
    an exact tiling of the annulus);
  * last layer (heat sink): one center node covering the previous footprint
    plus four rings; every sink node convects to ambient in proportion to its
    top area.

Lateral conductance between edge-sharing nodes of one layer is
k*t*shared_edge/centroid_distance; vertical conductance between stacked nodes
is the series pair of half-thickness resistances t/(2*k*A) evaluated on the
lower node's footprint.  Temperatures solve in superheat form (G*theta = P)
with ambient grounded, so the system matrix is SPD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .fileio import atomic_write, atomic_write_bytes
from .floorplan import Floorplan, dead_space_rects
from .model import PackageSpec

_EDGE_EPS_MM = 1e-6  # rectangles closer than this share an edge


class ThermalError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalNetwork:
    node_names: tuple[str, ...]
    node_layers: tuple[str, ...]
    rects_mm: np.ndarray  # (n, 4) x, y, w, h in die-centered coordinates
    areas_m2: np.ndarray
    volumes_m3: np.ndarray
    conductance: csc_matrix  # Laplacian + diag(ambient links), SPD
    capacitance: np.ndarray
    g_ambient: np.ndarray
    ambient_k: float
    die_nodes: dict[str, int]  # floorplan block name -> node index

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    def index(self, name: str) -> int:
        return self.node_names.index(name)


@dataclass(frozen=True)
class TemperatureField:
    node_names: tuple[str, ...]
    ambient_k: float
    steady: np.ndarray | None = None  # (n,) kelvin
    transient: np.ndarray | None = None  # (steps, n) kelvin
    dt_s: float | None = None

    def steady_of(self, name: str) -> float:
        return float(self.steady[self.node_names.index(name)])


# ---------------------------------------------------------------------------
# geometry helpers


def _ring_rects(inner, outer, prefix):
    """Tile outer minus inner with N/S full-width and E/W inner-height rings."""
    x, y, w, h = inner
    X, Y, W, H = outer
    ox, oy = x - X, y - Y
    rects = []
    if oy > _EDGE_EPS_MM:
        rects.append((f"{prefix}_s", (X, Y, W, oy)))
        rects.append((f"{prefix}_n", (X, y + h, W, oy)))
    if ox > _EDGE_EPS_MM:
        rects.append((f"{prefix}_w", (X, y, ox, h)))
        rects.append((f"{prefix}_e", (x + w, y, ox, h)))
    return rects


def _lateral_edges(rects):
    """Yield (i, j, shared_edge_mm, centroid_distance_mm) for touching rects."""
    n = len(rects)
    for i in range(n):
        xi, yi, wi, hi = rects[i]
        for j in range(i + 1, n):
            xj, yj, wj, hj = rects[j]
            edge = 0.0
            if abs(xi + wi - xj) < _EDGE_EPS_MM or abs(xj + wj - xi) < _EDGE_EPS_MM:
                edge = min(yi + hi, yj + hj) - max(yi, yj)
            elif abs(yi + hi - yj) < _EDGE_EPS_MM or abs(yj + hj - yi) < _EDGE_EPS_MM:
                edge = min(xi + wi, xj + wj) - max(xi, xj)
            if edge <= _EDGE_EPS_MM:
                continue
            dx = (xi + wi / 2) - (xj + wj / 2)
            dy = (yi + hi / 2) - (yj + hj / 2)
            yield i, j, edge, math.hypot(dx, dy)


def _contains(rect, px, py) -> bool:
    x, y, w, h = rect
    return (
        x - _EDGE_EPS_MM <= px <= x + w + _EDGE_EPS_MM
        and y - _EDGE_EPS_MM <= py <= y + h + _EDGE_EPS_MM
    )


# ---------------------------------------------------------------------------
# network construction


def build_network(plan: Floorplan, pkg: PackageSpec) -> ThermalNetwork:
    """Assemble the RC network for a floorplan under a package stack."""
    die = pkg.layers[0]
    if not (
        math.isclose(die.footprint_w_mm, plan.die_w_mm, rel_tol=1e-9)
        and math.isclose(die.footprint_h_mm, plan.die_h_mm, rel_tol=1e-9)
    ):
        raise ThermalError("package die footprint does not match the floorplan")

    names: list[str] = []
    layer_names: list[str] = []
    rects: list[tuple[float, float, float, float]] = []
    layer_slices: list[slice] = []  # node range per package layer

    def add(name: str, layer: str, rect) -> int:
        names.append(name)
        layer_names.append(layer)
        rects.append(tuple(float(v) for v in rect))
        return len(names) - 1

    # die layer: blocks then fillers
    die_nodes: dict[str, int] = {}
    start = 0
    for b in list(plan.blocks) + dead_space_rects(plan):
        die_nodes[b.name] = add(b.name, die.name, (b.x_mm, b.y_mm, b.w_mm, b.h_mm))
    layer_slices.append(slice(start, len(names)))
    die_rects = rects[:]

    # all layers center on the die; interior rings tile (footprint - die),
    # the last layer's center covers the whole previous footprint
    die_rect = (0.0, 0.0, plan.die_w_mm, plan.die_h_mm)
    die_names = list(names)
    prev_outer = die_rect
    for li, lay in enumerate(pkg.layers[1:], start=1):
        start = len(names)
        last = li == len(pkg.layers) - 1
        x0 = die_rect[0] - (lay.footprint_w_mm - die_rect[2]) / 2
        y0 = die_rect[1] - (lay.footprint_h_mm - die_rect[3]) / 2
        outer = (x0, y0, lay.footprint_w_mm, lay.footprint_h_mm)
        if last:
            add(lay.name, lay.name, prev_outer)
            inner = prev_outer
        else:
            for r, nm in zip(die_rects, die_names):
                add(f"{lay.name}_{nm}", lay.name, r)
            inner = die_rect
        for nm, r in _ring_rects(inner, outer, lay.name):
            add(nm, lay.name, r)
        layer_slices.append(slice(start, len(names)))
        prev_outer = outer

    n = len(names)
    rects_arr = np.asarray(rects)
    areas_m2 = rects_arr[:, 2] * rects_arr[:, 3] * 1e-6
    volumes = np.empty(n)
    caps = np.empty(n)
    for li, lay in enumerate(pkg.layers):
        s = layer_slices[li]
        volumes[s] = areas_m2[s] * lay.thickness_mm * 1e-3
        caps[s] = lay.volumetric_heat_capacity_j_per_m3k * volumes[s]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def couple(i: int, j: int, g: float) -> None:
        rows.extend((i, i, j, j))
        cols.extend((i, j, j, i))
        vals.extend((g, -g, g, -g))

    # lateral conduction within each layer
    for li, lay in enumerate(pkg.layers):
        s = layer_slices[li]
        layer_rects = rects[s]
        kt = lay.conductivity_w_per_mk * lay.thickness_mm * 1e-3
        count = 0
        for i, j, edge, dist in _lateral_edges(layer_rects):
            couple(s.start + i, s.start + j, kt * edge * 1e-3 / (dist * 1e-3))
            count += 1
        if li == 0 and len(layer_rects) > 1 and count == 0:
            raise ThermalError("degenerate floorplan: no edge-sharing die blocks")

    # vertical conduction: each node couples up into the node holding its centroid
    for li in range(len(pkg.layers) - 1):
        lo, hi = pkg.layers[li], pkg.layers[li + 1]
        s_lo, s_hi = layer_slices[li], layer_slices[li + 1]
        for i in range(s_lo.start, s_lo.stop):
            x, y, w, h = rects[i]
            cx, cy = x + w / 2, y + h / 2
            target = None
            for j in range(s_hi.start, s_hi.stop):
                if _contains(rects[j], cx, cy):
                    target = j
                    break
            if target is None:
                raise ThermalError(f"node {names[i]} has no upward conduction path")
            a = areas_m2[i]
            r = lo.thickness_mm * 1e-3 / (2 * lo.conductivity_w_per_mk * a)
            r += hi.thickness_mm * 1e-3 / (2 * hi.conductivity_w_per_mk * a)
            couple(i, target, 1.0 / r)

    # convection boundary: sink nodes share 1/R_conv by top area
    g_amb = np.zeros(n)
    s = layer_slices[-1]
    sink = pkg.layers[-1]
    sink_area = sink.footprint_w_mm * sink.footprint_h_mm * 1e-6
    for i in range(s.start, s.stop):
        g_amb[i] = areas_m2[i] / (pkg.convection_resistance_k_per_w * sink_area)
        rows.append(i)
        cols.append(i)
        vals.append(g_amb[i])

    G = csc_matrix((vals, (rows, cols)), shape=(n, n))

    # every node must reach the convection boundary
    comps, labels = connected_components(abs(G) > 0, directed=False)
    if comps != 1:
        raise ThermalError("thermal network is disconnected")

    return ThermalNetwork(
        node_names=tuple(names),
        node_layers=tuple(layer_names),
        rects_mm=rects_arr,
        areas_m2=areas_m2,
        volumes_m3=volumes,
        conductance=G,
        capacitance=caps,
        g_ambient=g_amb,
        ambient_k=pkg.ambient_k,
        die_nodes=die_nodes,
    )


# ---------------------------------------------------------------------------
# power mapping


def power_vector(net: ThermalNetwork, power: dict[str, float]) -> np.ndarray:
    """Per-node watts from a block-name map; unmatched names are an error."""
    vec = np.zeros(net.n_nodes)
    for name, watts in power.items():
        if name not in net.die_nodes:
            raise ThermalError(f"power component {name!r} has no floorplan block")
        vec[net.die_nodes[name]] += watts
    return vec


def map_power(
    net: ThermalNetwork, component_names, samples: np.ndarray
) -> np.ndarray:
    """Spread (steps, components) power samples onto (steps, nodes)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != len(component_names):
        raise ThermalError("power sample width does not match component list")
    out = np.zeros((samples.shape[0], net.n_nodes))
    for k, name in enumerate(component_names):
        if name not in net.die_nodes:
            raise ThermalError(f"power component {name!r} has no floorplan block")
        out[:, net.die_nodes[name]] += samples[:, k]
    return out


# ---------------------------------------------------------------------------
# solvers


def solve_steady(net: ThermalNetwork, power) -> TemperatureField:
    """Steady temperatures for per-node power (dict of block names or array)."""
    if isinstance(power, dict):
        p = power_vector(net, power)
    else:
        p = np.asarray(power, dtype=float)
        if p.shape != (net.n_nodes,):
            raise ThermalError("power vector length does not match network")
    lu = splu(net.conductance)
    theta = lu.solve(p)
    resid = np.abs(net.conductance @ theta - p).max()
    if resid > 1e-9 * max(np.abs(p).max(), 1e-300):
        raise ThermalError(f"steady solve residual too large ({resid:.3e} W)")
    return TemperatureField(
        node_names=net.node_names,
        ambient_k=net.ambient_k,
        steady=net.ambient_k + theta,
    )


class TransientSolver:
    """Backward-Euler integrator with the step matrix factored once."""

    def __init__(self, net: ThermalNetwork, dt_s: float):
        if dt_s <= 0:
            raise ThermalError("dt must be positive")
        self.net = net
        self.dt_s = dt_s
        self._c_over_dt = net.capacitance / dt_s
        n = net.n_nodes
        step_matrix = net.conductance + csc_matrix(
            (self._c_over_dt, (np.arange(n), np.arange(n))), shape=(n, n)
        )
        self._lu = splu(step_matrix)

    def run(self, node_samples: np.ndarray, t0_k: np.ndarray | None = None) -> np.ndarray:
        """Integrate one step per sample row; returns (steps, nodes) kelvin."""
        net = self.net
        samples = np.atleast_2d(np.asarray(node_samples, dtype=float))
        if samples.shape[1] != net.n_nodes:
            raise ThermalError("sample width does not match network")
        if t0_k is None:
            theta = np.zeros(net.n_nodes)
        else:
            t0_k = np.asarray(t0_k, dtype=float)
            if t0_k.shape != (net.n_nodes,):
                raise ThermalError("initial temperature length does not match network")
            theta = t0_k - net.ambient_k
        out = np.empty_like(samples)
        for step in range(samples.shape[0]):
            theta = self._lu.solve(self._c_over_dt * theta + samples[step])
            out[step] = theta
        return out + net.ambient_k


def simulate_transient(
    net: ThermalNetwork,
    node_samples: np.ndarray,
    dt_s: float,
    t0_k: np.ndarray | None = None,
) -> TemperatureField:
    temps = TransientSolver(net, dt_s).run(node_samples, t0_k)
    return TemperatureField(
        node_names=net.node_names,
        ambient_k=net.ambient_k,
        transient=temps,
        dt_s=dt_s,
    )


# ---------------------------------------------------------------------------
# file formats


def write_temps(path: str, field: TemperatureField) -> None:
    lines = [
        f"{name}\t{float(t):.6f}"
        for name, t in zip(field.node_names, field.steady)
    ]
    atomic_write(path, "\n".join(lines) + "\n")


def parse_temps(path: str) -> dict[str, float]:
    temps: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ThermalError(f"{path}:{ln}: expected 'name kelvin'")
            temps[parts[0]] = float(parts[1])
    return temps


def write_ttrace(path: str, field: TemperatureField) -> None:
    lines = [
        f"# dt_s {field.dt_s!r} ambient_k {field.ambient_k!r}",
        "\t".join(field.node_names),
    ]
    for row in field.transient:
        lines.append("\t".join(f"{t:.6f}" for t in row))
    atomic_write(path, "\n".join(lines) + "\n")


def parse_ttrace(path: str) -> TemperatureField:
    dt_s = None
    ambient = math.nan
    names: tuple[str, ...] | None = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                meta = dict(zip(parts[::2], parts[1::2]))
                dt_s = float(meta.get("dt_s", "nan"))
                ambient = float(meta.get("ambient_k", "nan"))
                continue
            if names is None:
                names = tuple(line.split())
                continue
            rows.append([float(v) for v in line.split()])
    if names is None or not rows:
        raise ThermalError(f"{path}: empty temperature trace")
    trans = np.asarray(rows)
    if trans.shape[1] != len(names):
        raise ThermalError(f"{path}: row width does not match header")
    return TemperatureField(
        node_names=names, ambient_k=ambient, transient=trans, dt_s=dt_s
    )


def write_heatmap(
    path: str, plan: Floorplan, field: TemperatureField, width_px: int = 360
) -> None:
    """Render die-layer steady temperatures as a binary portable pixmap."""
    height_px = max(1, round(width_px * plan.die_h_mm / plan.die_w_mm))
    temps = dict(zip(field.node_names, field.steady))
    die_temp = {b.name: temps[b.name] for b in plan.blocks if b.name in temps}
    if not die_temp:
        raise ThermalError("no floorplan block matches a network node")
    lo = min(die_temp.values())
    hi = max(die_temp.values())
    span = max(hi - lo, 1e-12)

    img = np.zeros((height_px, width_px, 3), dtype=np.uint8)
    xs = (np.arange(width_px) + 0.5) * plan.die_w_mm / width_px
    ys = (np.arange(height_px) + 0.5) * plan.die_h_mm / height_px
    for b in plan.blocks:
        if b.name not in die_temp:
            continue
        u = (die_temp[b.name] - lo) / span
        # blue (cold) to red (hot) with a white midpoint
        r = int(255 * min(1.0, 2 * u))
        g = int(255 * (1 - abs(2 * u - 1)))
        bl = int(255 * min(1.0, 2 * (1 - u)))
        col = np.searchsorted(xs, (b.x_mm, b.x_mm + b.w_mm))
        row = np.searchsorted(ys, (b.y_mm, b.y_mm + b.h_mm))
        img[row[0]:row[1], col[0]:col[1]] = (r, g, bl)

    header = f"P6\n{width_px} {height_px}\n255\n".encode("ascii")
    # pixmap rows run top to bottom; flip so y=0 sits at the bottom edge
    atomic_write_bytes(path, header + img[::-1].tobytes())
