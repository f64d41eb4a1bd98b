"""
Floorplanning the tile with simulated annealing on slicing trees
================================================================

Groups identical components into lumped blocks, anneals a coarse plan for
them, splits the lumps back into per-instance blocks, and compares the
result with the shipped plan.
"""

import os

from tiletherm import floorplan as fp
from tiletherm.model import load_scenario

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "src", "tiletherm", "data")
OUT = os.path.join(HERE, "out", "floorplan")
os.makedirs(OUT, exist_ok=True)

scn = load_scenario(os.path.join(DATA, "scenario.toml"))
arch = scn.architecture
die = (arch.die_w_mm, arch.die_h_mm)

# one lump per component class; PEs pull their buffers and memories closer
lumps = fp.lump(arch)
for lump in lumps:
    pulls = ", ".join(f"{cls} x{w}" for cls, w in lump.adjacency) or "none"
    print(f"  {lump.cls:8s} n={lump.n} area={lump.area_mm2:.4f} mm^2 "
          f"pulls: {pulls}")

coarse = fp.anneal(lumps, die, seed=scn.seed, policy=arch.floorplan)
fp.check_plan(coarse)
print(f"\ncoarse plan ({len(coarse.blocks)} lumped blocks):")
for b in coarse.blocks:
    print(f"  {b.name:8s} {b.w_mm:.3f} x {b.h_mm:.3f} at "
          f"({b.x_mm:.3f}, {b.y_mm:.3f})")

# refinement slices each lump into equal per-instance strips
plan = fp.refine(coarse, lumps)
fp.check_plan(plan)
used = sum(b.area for b in plan.blocks)
print(f"\nfine plan: {len(plan.blocks)} blocks, "
      f"die utilization {used / (die[0] * die[1]):.3f}")

# uncovered die area becomes explicit filler rectangles for the RC model
fillers = fp.dead_space_rects(plan)
print(f"dead space: {len(fillers)} fillers, "
      f"{sum(b.area for b in fillers):.4f} mm^2")

fp.export_flp(coarse, os.path.join(OUT, "annealed_coarse.flp"))
fp.export_flp(plan, os.path.join(OUT, "annealed.flp"))
print(f"wrote {os.path.join(OUT, 'annealed.flp')}")

# the shipped plan was produced the same way and pinned in the data dir
shipped = fp.parse_flp(os.path.join(DATA, "floorplan.flp"))
print(f"\nshipped plan: {len(shipped.blocks)} blocks "
      f"(provenance: {shipped.provenance})")

# same-size blocks can trade places; the alt shipped plan swaps the vector
# units to probe how sensitive temperatures are to placement
alt = fp.swap_block_positions(shipped, "vfu0", "vfu1")
fp.check_plan(alt)
print("swapped vfu0 and vfu1 to build the alternative plan")
