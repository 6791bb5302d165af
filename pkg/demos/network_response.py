"""Response of a random-topology memristor network to sine and triangle drives.

Writes per-branch currents and branch voltages for both inputs so that the
I-V curves of all 20 devices can be plotted.
"""

import numpy as np

from memrc import CircuitSystem, VariabilitySpec, build_input, integrate, make_network, sample_devices
from memrc.harness.datasets import triangle_wave
from memrc.netlist import format_netlist

topo = make_network("rand-up", seed=0)
devs = sample_devices(VariabilitySpec(r_mean=50, sigma=0.2), topo.n_memristors, seed=1)
sys = CircuitSystem(topo, devs)
print(format_netlist(topo))

t = np.linspace(0, 1, 100)
ts = np.linspace(3.0, 6.0, 601)
for name, raw in (("sine", np.sin(2 * np.pi * 5 * t)), ("triangle", triangle_wave(t, 5))):
    traj = integrate(sys, build_input(raw, 0.5, 3.0, 3.0), sample_times=ts)
    v_branch = traj.nodal_voltages @ sys.incidence.E_m
    j = traj.branch_currents
    W = devs.memductance(traj.nodal_fluxes @ sys.incidence.E_m)
    print(f"{name:8s}: peak branch current {np.abs(j).max() * 1e3:.3f} mA, "
          f"largest memductance change {np.max(W.max(0) / W.min(0) - 1):.2f}")
    cols = ["t"] + [f"v_br{m}" for m in range(20)] + [f"j_{m}" for m in range(20)]
    np.savetxt(f"network_{name}.csv", np.column_stack([ts, v_branch, j]), delimiter=",",
               header=",".join(cols), comments="")
