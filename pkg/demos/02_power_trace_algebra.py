"""
Power traces at pixel granularity and the transforms on them
============================================================

Derives the per-component transient power trace from the pixel schedule,
then walks through the trace algebra: coarser granularities, bubble
removal, folding into a shorter window, repetition, and resampling.
Every transform conserves energy.
"""

import os

import numpy as np

from tiletherm import power as pw
from tiletherm import scheduling as sch
from tiletherm.model import load_scenario

HERE = os.path.dirname(os.path.abspath(__file__))
SCENARIO = os.path.join(HERE, "..", "src", "tiletherm", "data", "scenario.toml")
OUT = os.path.join(HERE, "out", "power")
os.makedirs(OUT, exist_ok=True)

scn = load_scenario(SCENARIO)
mapping = sch.assign_layers(scn.workload, scn.architecture)
strace = sch.schedule(scn.workload, mapping, scn.architecture)
actions = sch.count_actions(scn.workload, mapping, scn.architecture)

# per-slot energies become piecewise-constant power over each slot's cycles
trace = pw.pixel_power_trace(strace, actions, scn.energy, scn.architecture)
e0 = trace.total_energy()
print(f"duration: {trace.duration_cycles} cycles "
      f"at {trace.time_base_s * 1e9:.1f} ns per cycle")
print(f"total energy: {e0 * 1e6:.6f} uJ")
print(f"peak combined power: {pw.aggregate_peak(trace) * 1e3:.3f} mW")

print("\nper-component energy:")
for name in trace.components:
    print(f"  {name:9s} {trace.energy(name) * 1e9:10.3f} nJ")

# averaging over layer spans or the whole inference keeps the energy
for granularity in ("layer", "inference"):
    coarse = pw.aggregate(trace, granularity, strace)
    drift = abs(coarse.total_energy() - e0) / e0
    print(f"\naggregate({granularity}): peak "
          f"{pw.aggregate_peak(coarse) * 1e3:.3f} mW, energy drift {drift:.1e}")

# deleting globally idle cycles compacts the timeline
debubbled = pw.remove_bubbles(trace, strace)
print(f"\ndebubbled: {debubbled.duration_cycles} cycles "
      f"(was {trace.duration_cycles})")

# folding halves the window and superimposes the halves
window = debubbled.duration_cycles // 4
folded = pw.wrap_to_window(debubbled, window)
print(f"folded into {window} cycles: duration {folded.duration_cycles}, "
      f"peak {pw.aggregate_peak(folded) * 1e3:.3f} mW "
      f"(was {pw.aggregate_peak(debubbled) * 1e3:.3f} mW)")

# back-to-back repetitions model consecutive inferences
tiled = pw.repeat(folded, 3)
print(f"3 repetitions: {tiled.duration_cycles} cycles, "
      f"energy {tiled.total_energy() * 1e6:.6f} uJ")

# fixed-step averages are what the transient thermal solver consumes
for dt in (100, 1000, 10000):
    samples = pw.resample(trace, dt)
    energy = samples.sum() * dt * trace.time_base_s
    print(f"resample(dt={dt:5d}): {samples.shape[0]:5d} steps, "
          f"energy drift {abs(energy - e0) / e0:.1e}")

path = os.path.join(OUT, "power.ptrace")
pw.export_ptrace(trace, 1000, path)
header, samples, meta = pw.parse_ptrace(path)
print(f"\nwrote {path}: {samples.shape[0]} rows x {len(header)} components, "
      f"dt {meta['dt_cycles']} cycles")
