"""Sine vs triangle classification across network types and ON/OFF ratios.

Also shows why accuracy collapses for weakly nonlinear devices: with one
source, every branch memductance is a function of the source flux alone,
so each state column is ``|v_s(t)| g(Phi_s(t))``.  When ``g`` hardly varies
the columns of both classes lie along the same direction.
"""

import numpy as np

from memrc import CircuitSystem, SolverConfig, build_input, integrate, make_network, sample_devices
from memrc.harness import ExperimentConfig, baseline_linear, run_sweep
from memrc.harness.experiment import prepare
from memrc.memristor import VariabilitySpec

base = ExperimentConfig.for_task("waveform", n_networks=3)
data = prepare(base)
cache = {}
print(f"linear baseline: {baseline_linear(base, data).mean:.3f}")
print("network   r=50   r=500  r=1e4")
for kind in ("ring-up", "ring-rp", "rand-up", "rand-rp"):
    res = run_sweep(base.replace(network=kind), "r_mean", [50.0, 500.0, 1e4], data, cache)
    print(f"{kind:8s} " + " ".join(f"{r.mean:6.3f}" for r in res))

# how much do memductances move during one drive?
topo = make_network("rand-rp", 3)
raw = np.sin(2 * np.pi * 5 * np.linspace(0, 1, 100))
for r in (50, 500, 1e4):
    sys = CircuitSystem(topo, sample_devices(VariabilitySpec(r, 0.2), 20, 9))
    traj = integrate(sys, build_input(raw, 0.5, 3, 3), SolverConfig(rtol=1e-9, atol=1e-13))
    W = sys.devices.memductance(traj.nodal_fluxes @ sys.incidence.E_m)
    print(f"r = {r:g}: largest relative memductance change {np.max(W.max(0) / W.min(0) - 1):.3f}")
