"""
Steady and transient temperatures from the compact RC network
=============================================================

Builds the RC network for the shipped floorplan under its package stack,
solves the steady state under mean power, renders a heatmap, and then
integrates the pixel-level power trace through time.
"""

import os

from tiletherm import power as pw
from tiletherm import scheduling as sch
from tiletherm import thermal as th
from tiletherm.floorplan import parse_flp
from tiletherm.model import load_scenario
from tiletherm.pipeline import mean_power_w

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "src", "tiletherm", "data")
OUT = os.path.join(HERE, "out", "thermal")
os.makedirs(OUT, exist_ok=True)

scn = load_scenario(os.path.join(DATA, "scenario.toml"))
plan = parse_flp(scn.floorplan_path)

# die blocks, mirrored interposer/spreader nodes, ring nodes, one sink node
net = th.build_network(plan, scn.package)
print(f"network: {net.n_nodes} nodes "
      f"({sum(1 for l in net.node_layers if l == 'die')} on the die)")

mapping = sch.assign_layers(scn.workload, scn.architecture)
strace = sch.schedule(scn.workload, mapping, scn.architecture)
actions = sch.count_actions(scn.workload, mapping, scn.architecture)
trace = pw.pixel_power_trace(strace, actions, scn.energy, scn.architecture)

# steady state under each component's average power
power = mean_power_w(trace)
print(f"total mean power: {sum(power.values()) * 1e3:.3f} mW")
field = th.solve_steady(net, power)
ambient = scn.package.ambient_k
print(f"ambient {ambient:.2f} K, steady max {field.steady.max():.4f} K")

ranked = sorted(plan.blocks, key=lambda b: field.steady_of(b.name),
                reverse=True)
print("\nhottest blocks (steady rise above ambient):")
for b in ranked[:5]:
    rise = field.steady_of(b.name) - ambient
    print(f"  {b.name:9s} {rise * 1e3:8.3f} mK")

th.write_temps(os.path.join(OUT, "steady.temps"), field)
th.write_heatmap(os.path.join(OUT, "steady.ppm"), plan, field)
print(f"\nwrote {os.path.join(OUT, 'steady.ppm')} (portable pixmap)")

# transient: average the trace into fixed steps and integrate
dt = scn.dt_cycles
tb = 1.0 / scn.architecture.base_clock_hz
samples = pw.resample(trace, dt)
node_samples = th.map_power(net, trace.components, samples)
transient = th.simulate_transient(net, node_samples, dt * tb)
peak = transient.transient.max() - ambient
print(f"\ntransient: {samples.shape[0]} steps of {dt} cycles")
print(f"peak rise over one inference: {peak * 1e3:.3f} mK")

th.write_ttrace(os.path.join(OUT, "transient.ttrace"), transient)
print(f"wrote {os.path.join(OUT, 'transient.ttrace')}")
