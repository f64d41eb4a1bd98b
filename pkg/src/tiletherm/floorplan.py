"""Slicing-tree floorplanner: lump identical components, anneal, split back.

The annealer searches normalized Polish expressions of a slicing tree with the
classic move set (swap adjacent operands, complement an operator chain, swap an
operand/operator pair).  Soft blocks carry sampled width/height shape curves
clamped to per-class aspect-ratio bounds; curves combine bottom-up with Pareto
pruning, so realized plans are overlap-free by construction.  Cost couples die
usage with weighted centroid distances between lumps that exchange data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fileio import atomic_write
from .model import ArchitectureSpec, FloorplanPolicy

LEAF_POINTS = 33  # sampled aspect ratios per lump shape curve
NODE_POINTS = 48  # Pareto-pruned curve size cap at internal nodes
_EPS = 1e-9


class FloorplanError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    name: str
    w_mm: float
    h_mm: float
    x_mm: float
    y_mm: float

    @property
    def area(self) -> float:
        return self.w_mm * self.h_mm

    @property
    def centroid(self) -> tuple[float, float]:
        return self.x_mm + self.w_mm / 2, self.y_mm + self.h_mm / 2


@dataclass(frozen=True)
class Floorplan:
    die_w_mm: float
    die_h_mm: float
    blocks: tuple[Block, ...]
    provenance: str  # coarse | fine

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


@dataclass(frozen=True)
class LumpSpec:
    cls: str
    n: int
    area_mm2: float
    min_ar: float
    max_ar: float
    instances: tuple[str, ...]  # component names, declaration order
    # adjacency entries (other lump class, weight) anchored at this lump
    adjacency: tuple[tuple[str, float], ...] = ()


def lump(arch: ArchitectureSpec, policy: FloorplanPolicy | None = None) -> list[LumpSpec]:
    """One lump per component class, with PE-to-memory adjacency weights."""
    policy = policy or arch.floorplan
    classes: dict[str, list[str]] = {}
    areas: dict[str, float] = {}
    for c in arch.components:
        classes.setdefault(c.cls, []).append(c.name)
        areas[c.cls] = areas.get(c.cls, 0.0) + c.area_mm2
    lumps = []
    for cls, names in classes.items():
        lo, hi = policy.aspect_bounds(cls)
        adj: tuple[tuple[str, float], ...] = ()
        if cls in ("aimcore", "vfu"):
            adj = tuple(
                (mem, w)
                for mem, w in (
                    ("actbuf", policy.adj_pe_actbuf),
                    ("imem", policy.adj_pe_imem),
                )
                if mem in classes and w > 0
            )
        lumps.append(
            LumpSpec(
                cls=cls,
                n=len(names),
                area_mm2=areas[cls],
                min_ar=lo,
                max_ar=hi,
                instances=tuple(names),
                adjacency=adj,
            )
        )
    return lumps


# ---------------------------------------------------------------------------
# shape curves


@dataclass
class _Curve:
    w: np.ndarray
    h: np.ndarray
    ia: np.ndarray | None = None  # backpointer into left/only child
    ib: np.ndarray | None = None  # backpointer into right child


def _leaf_curve(l: LumpSpec) -> _Curve:
    if l.min_ar > l.max_ar:
        raise FloorplanError(f"lump {l.cls}: empty aspect range")
    ar = np.geomspace(l.min_ar, l.max_ar, LEAF_POINTS)
    w = np.sqrt(l.area_mm2 * ar)
    return _Curve(w=w, h=l.area_mm2 / w)


def _prune(w, h, ia, ib) -> _Curve:
    """Keep the Pareto frontier (w ascending, h strictly descending)."""
    order = np.lexsort((h, w))
    w, h, ia, ib = w[order], h[order], ia[order], ib[order]
    cummin = np.minimum.accumulate(h)
    keep = np.concatenate(([True], h[1:] < cummin[:-1]))
    w, h, ia, ib = w[keep], h[keep], ia[keep], ib[keep]
    if len(w) > NODE_POINTS:
        sel = np.unique(np.linspace(0, len(w) - 1, NODE_POINTS).round().astype(int))
        w, h, ia, ib = w[sel], h[sel], ia[sel], ib[sel]
    return _Curve(w=w, h=h, ia=ia, ib=ib)


def _combine_curves(a: _Curve, b: _Curve, op: str) -> _Curve:
    na, nb = len(a.w), len(b.w)
    ia = np.repeat(np.arange(na), nb)
    ib = np.tile(np.arange(nb), na)
    if op == "V":  # side by side
        w = a.w[ia] + b.w[ib]
        h = np.maximum(a.h[ia], b.h[ib])
    else:  # stacked
        w = np.maximum(a.w[ia], b.w[ib])
        h = a.h[ia] + b.h[ib]
    return _prune(w, h, ia, ib)


# ---------------------------------------------------------------------------
# expression evaluation


def _is_op(tok) -> bool:
    return tok == "V" or tok == "H"


def _eval_expr(tokens, lumps: list[LumpSpec]):
    """Bottom-up curves for a postfix expression; returns the node stack root."""
    stack: list[tuple] = []  # (curve, payload) payload = lump idx or (op, l, r)
    for tok in tokens:
        if _is_op(tok):
            right = stack.pop()
            left = stack.pop()
            curve = _combine_curves(left[0], right[0], tok)
            stack.append((curve, (tok, left, right)))
        else:
            stack.append((_leaf_curve(lumps[tok]), tok))
    if len(stack) != 1:
        raise FloorplanError("malformed slicing expression")
    return stack[0]


def _realize(node, point: int, x: float, y: float, lumps, out: list[Block]) -> None:
    curve, payload = node
    if isinstance(payload, int):
        l = lumps[payload]
        out.append(Block(l.cls, float(curve.w[point]), float(curve.h[point]), x, y))
        return
    op, left, right = payload
    pa, pb = int(curve.ia[point]), int(curve.ib[point])
    if op == "V":
        _realize(left, pa, x, y, lumps, out)
        _realize(right, pb, x + float(left[0].w[pa]), y, lumps, out)
    else:
        _realize(left, pa, x, y, lumps, out)
        _realize(right, pb, x, y + float(left[0].h[pa]), lumps, out)


def _plan_cost(blocks: list[Block], bbox_w: float, bbox_h: float,
               lumps: list[LumpSpec], die: tuple[float, float],
               policy: FloorplanPolicy) -> float:
    total_area = sum(l.area_mm2 for l in lumps)
    cost = policy.w_area * (bbox_w * bbox_h) / total_area
    if policy.w_adj > 0:
        cent = {b.name: b.centroid for b in blocks}
        half_perim = die[0] + die[1]
        adj = 0.0
        for l in lumps:
            for other, weight in l.adjacency:
                (xa, ya), (xb, yb) = cent[l.cls], cent[other]
                adj += weight * (abs(xa - xb) + abs(ya - yb)) / half_perim
        cost += policy.w_adj * adj
    return cost


def _evaluate(tokens, lumps, die, policy):
    """Best legal (cost, plan blocks) for an expression, or a penalized cost."""
    root = _eval_expr(tokens, lumps)
    curve = root[0]
    die_w, die_h = die
    legal = (curve.w <= die_w + _EPS) & (curve.h <= die_h + _EPS)
    best = None  # (cost, aspect tie-break, blocks)
    if legal.any():
        die_ar = die_w / die_h
        for point in np.nonzero(legal)[0]:
            blocks: list[Block] = []
            _realize(root, int(point), 0.0, 0.0, lumps, blocks)
            c = _plan_cost(blocks, float(curve.w[point]), float(curve.h[point]),
                          lumps, die, policy)
            # ties go to the point whose envelope best matches the die aspect
            tie = abs(math.log(float(curve.w[point] / curve.h[point]) / die_ar))
            if best is None or (c, tie) < (best[0], best[1]):
                best = (c, tie, blocks)
        return best[0], best[2]
    # nothing fits: penalized cost on the smallest-area point, no plan
    k = int(np.argmin(curve.w * curve.h))
    blocks = []
    _realize(root, k, 0.0, 0.0, lumps, blocks)
    c = _plan_cost(blocks, float(curve.w[k]), float(curve.h[k]), lumps, die, policy)
    overflow = max(curve.w[k] / die_w, curve.h[k] / die_h) - 1.0
    return c + 10.0 * (1.0 + overflow), None


def _initial_expression(n: int) -> list:
    tokens: list = [0]
    for i in range(1, n):
        tokens += [i, "V" if i % 2 else "H"]
    return tokens


def _moves(tokens, rng: np.random.Generator) -> list:
    """One random Wong-Liu perturbation of a normalized Polish expression."""
    tokens = list(tokens)
    operand_pos = [i for i, t in enumerate(tokens) if not _is_op(t)]
    kind = int(rng.integers(3)) if len(tokens) > 1 else -1
    if kind == 0 and len(operand_pos) >= 2:
        k = int(rng.integers(len(operand_pos) - 1))
        i, j = operand_pos[k], operand_pos[k + 1]
        tokens[i], tokens[j] = tokens[j], tokens[i]
        return tokens
    if kind == 1:
        chains = []
        i = 0
        while i < len(tokens):
            if _is_op(tokens[i]):
                j = i
                while j < len(tokens) and _is_op(tokens[j]):
                    j += 1
                chains.append((i, j))
                i = j
            else:
                i += 1
        if chains:
            i, j = chains[int(rng.integers(len(chains)))]
            for k in range(i, j):
                tokens[k] = "V" if tokens[k] == "H" else "H"
            return tokens
    if kind == 2:
        candidates = []
        for i in range(len(tokens) - 1):
            cand = list(tokens)
            cand[i], cand[i + 1] = cand[i + 1], cand[i]
            if _is_op(cand[i]) == _is_op(tokens[i]):
                continue  # swap must cross an operand/operator boundary
            if _normalized(cand):
                candidates.append(cand)
        if candidates:
            return candidates[int(rng.integers(len(candidates)))]
    # fall back to operand swap
    if len(operand_pos) >= 2:
        k = int(rng.integers(len(operand_pos) - 1))
        i, j = operand_pos[k], operand_pos[k + 1]
        tokens[i], tokens[j] = tokens[j], tokens[i]
    return tokens


def _normalized(tokens) -> bool:
    operands = ops = 0
    prev_op = None
    for t in tokens:
        if _is_op(t):
            ops += 1
            if ops >= operands:
                return False
            if t == prev_op:
                return False
            prev_op = t
        else:
            operands += 1
            prev_op = None
    return ops == operands - 1


def anneal(
    lumps: list[LumpSpec],
    die: tuple[float, float],
    seed: int,
    policy: FloorplanPolicy,
) -> Floorplan:
    """Simulated annealing over slicing trees; returns the best legal plan."""
    total_area = sum(l.area_mm2 for l in lumps)
    if total_area > die[0] * die[1] + _EPS:
        raise FloorplanError(
            f"lump area {total_area:.4f} mm2 exceeds die {die[0]}x{die[1]} mm"
        )
    rng = np.random.default_rng(seed)
    tokens = _initial_expression(len(lumps))
    cur_cost, cur_blocks = _evaluate(tokens, lumps, die, policy)
    best_cost, best_blocks = cur_cost, cur_blocks

    if len(lumps) > 1:
        # temperature calibrated so the initial acceptance ratio is met
        deltas = []
        probe = list(tokens)
        for _ in range(40):
            cand = _moves(probe, rng)
            c, _b = _evaluate(cand, lumps, die, policy)
            deltas.append(abs(c - cur_cost))
            probe = cand
        mean_delta = max(float(np.mean(deltas)), 1e-12)
        temp = -mean_delta / math.log(policy.initial_acceptance)

        history: list[float] = []
        while True:
            for _ in range(policy.moves_per_temp):
                cand = _moves(tokens, rng)
                cand_cost, cand_blocks = _evaluate(cand, lumps, die, policy)
                delta = cand_cost - cur_cost
                if delta <= 0 or rng.random() < math.exp(-delta / temp):
                    tokens, cur_cost = cand, cand_cost
                    if cand_blocks is not None and cand_cost < best_cost:
                        best_cost, best_blocks = cand_cost, cand_blocks
            history.append(best_cost)
            if len(history) > policy.stop_window:
                prev = history[-policy.stop_window - 1]
                if prev - best_cost < policy.stop_rel_improvement * abs(prev):
                    break
            temp *= policy.cooling
            if temp < 1e-12:
                break

    if best_blocks is None:
        raise FloorplanError("no legal floorplan within aspect bounds")
    plan = Floorplan(die[0], die[1], tuple(best_blocks), provenance="coarse")
    check_plan(plan)
    return plan


def refine(coarse: Floorplan, lumps: list[LumpSpec]) -> Floorplan:
    """Split each lumped block into its n identical instances.

    Equal-area guillotine cuts run perpendicular to the block's longer side;
    instances take the class's component names in declaration order, bottom-up
    / left-to-right.
    """
    by_cls = {l.cls: l for l in lumps}
    fine: list[Block] = []
    for b in coarse.blocks:
        l = by_cls[b.name]
        n = l.n
        for i, inst in enumerate(l.instances):
            if b.w_mm >= b.h_mm:
                fine.append(
                    Block(inst, b.w_mm / n, b.h_mm, b.x_mm + i * b.w_mm / n, b.y_mm)
                )
            else:
                fine.append(
                    Block(inst, b.w_mm, b.h_mm / n, b.x_mm, b.y_mm + i * b.h_mm / n)
                )
    plan = Floorplan(coarse.die_w_mm, coarse.die_h_mm, tuple(fine), provenance="fine")
    check_plan(plan)
    return plan


def check_plan(plan: Floorplan, tol: float = _EPS) -> None:
    """Raise unless all blocks are positive, in-die and pairwise disjoint."""
    if not plan.blocks:
        raise FloorplanError("empty floorplan")
    for b in plan.blocks:
        if b.w_mm <= 0 or b.h_mm <= 0:
            raise FloorplanError(f"block {b.name}: non-positive size")
        if (
            b.x_mm < -tol
            or b.y_mm < -tol
            or b.x_mm + b.w_mm > plan.die_w_mm + tol
            or b.y_mm + b.h_mm > plan.die_h_mm + tol
        ):
            raise FloorplanError(f"block {b.name}: outside the die outline")
    blocks = plan.blocks
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            a, b = blocks[i], blocks[j]
            if (
                a.x_mm + a.w_mm > b.x_mm + tol
                and b.x_mm + b.w_mm > a.x_mm + tol
                and a.y_mm + a.h_mm > b.y_mm + tol
                and b.y_mm + b.h_mm > a.y_mm + tol
            ):
                raise FloorplanError(f"blocks {a.name} and {b.name} overlap")


def swap_block_positions(plan: Floorplan, name_a: str, name_b: str) -> Floorplan:
    """Exchange the coordinates of two equal-size blocks (plan variant)."""
    a, b = plan.block(name_a), plan.block(name_b)
    if not (
        math.isclose(a.w_mm, b.w_mm, rel_tol=1e-12)
        and math.isclose(a.h_mm, b.h_mm, rel_tol=1e-12)
    ):
        raise FloorplanError("blocks must have identical size to swap positions")
    swapped = []
    for blk in plan.blocks:
        if blk.name == name_a:
            swapped.append(replace(blk, x_mm=b.x_mm, y_mm=b.y_mm))
        elif blk.name == name_b:
            swapped.append(replace(blk, x_mm=a.x_mm, y_mm=a.y_mm))
        else:
            swapped.append(blk)
    plan2 = Floorplan(plan.die_w_mm, plan.die_h_mm, tuple(swapped), plan.provenance)
    check_plan(plan2)
    return plan2


def dead_space_rects(plan: Floorplan) -> list[Block]:
    """Cover die area not occupied by blocks with maximal filler rectangles."""
    xs = sorted({0.0, plan.die_w_mm} | {b.x_mm for b in plan.blocks}
                | {b.x_mm + b.w_mm for b in plan.blocks})
    ys = sorted({0.0, plan.die_h_mm} | {b.y_mm for b in plan.blocks}
                | {b.y_mm + b.h_mm for b in plan.blocks})
    nx, ny = len(xs) - 1, len(ys) - 1
    covered = np.zeros((nx, ny), dtype=bool)
    xs_arr, ys_arr = np.asarray(xs), np.asarray(ys)
    for b in plan.blocks:
        i0 = int(np.searchsorted(xs_arr, b.x_mm + _EPS) - 1)
        i1 = int(np.searchsorted(xs_arr, b.x_mm + b.w_mm - _EPS))
        j0 = int(np.searchsorted(ys_arr, b.y_mm + _EPS) - 1)
        j1 = int(np.searchsorted(ys_arr, b.y_mm + b.h_mm - _EPS))
        covered[i0:i1, j0:j1] = True
    # greedy rectangle merge: grow runs along x, then extend them along y
    fillers: list[Block] = []
    used = covered.copy()
    for j in range(ny):
        i = 0
        while i < nx:
            if used[i, j]:
                i += 1
                continue
            i1 = i
            while i1 < nx and not used[i1, j]:
                i1 += 1
            j1 = j + 1
            while j1 < ny and not used[i:i1, j1].any():
                j1 += 1
            used[i:i1, j:j1] = True
            w = xs[i1] - xs[i]
            h = ys[j1] - ys[j]
            if w > _EPS and h > _EPS:
                fillers.append(
                    Block(f"filler{len(fillers)}", w, h, xs[i], ys[j])
                )
            i = i1
    return fillers


# ---------------------------------------------------------------------------
# .flp files (meters)


def export_flp(plan: Floorplan, path: str) -> None:
    lines = [
        f"# die {plan.die_w_mm * 1e-3:.12g} {plan.die_h_mm * 1e-3:.12g}",
        f"# provenance {plan.provenance}",
    ]
    for b in plan.blocks:
        lines.append(
            f"{b.name}\t{b.w_mm * 1e-3:.12g}\t{b.h_mm * 1e-3:.12g}"
            f"\t{b.x_mm * 1e-3:.12g}\t{b.y_mm * 1e-3:.12g}"
        )
    atomic_write(path, "\n".join(lines) + "\n")


def parse_flp(path: str) -> Floorplan:
    """Read a floorplan file; legality (overlap, in-die) is re-checked."""
    die_w = die_h = None
    provenance = "fine"
    blocks: list[Block] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["die"] and len(parts) == 3:
                    die_w, die_h = float(parts[1]) * 1e3, float(parts[2]) * 1e3
                elif parts[:1] == ["provenance"] and len(parts) == 2:
                    provenance = parts[1]
                continue
            parts = line.split()
            if len(parts) != 5:
                raise FloorplanError(f"{path}:{ln}: expected name w h x y")
            name, w, h, x, y = parts[0], *[float(v) * 1e3 for v in parts[1:]]
            blocks.append(Block(name, w, h, x, y))
    if not blocks:
        raise FloorplanError(f"{path}: empty floorplan")
    if die_w is None:
        die_w = max(b.x_mm + b.w_mm for b in blocks)
        die_h = max(b.y_mm + b.h_mm for b in blocks)
    plan = Floorplan(die_w, die_h, tuple(blocks), provenance)
    check_plan(plan)
    return plan
