"""A single linear-drift memristor under a sine drive.

Compares the flux-domain memductance used by the circuit engine against a
direct integration of the doped-region width, and writes the I-V loop to
``single_device_iv.csv``.
"""

import numpy as np

from memrc import CircuitSystem, DeviceSet, InputSignal, NetworkTopology, SolverConfig, integrate
from memrc.memristor import DeviceParams, oracle_single_device

dev = DeviceParams(R_on=100.0, R_off=5000.0, w0=1e-9)
print(f"M0 = {dev.M0:.0f} ohm, a = {dev.a:.3g} ohm^2/Wb")

# time-domain reference: w(t) with RK4
v = lambda t: 0.5 * np.sin(2 * np.pi * 5 * t)  # noqa: E731
t, j_ref, w = oracle_single_device(dev, v, 1e-4, 1.0)
print(f"w/D ranges over [{w.min() / dev.D:.3f}, {w.max() / dev.D:.3f}] (no saturation)")

# the same device as a one-branch circuit, started after a 1 s rest
topo = NetworkTopology(2, ((0, 1),), ((0, 1),))
sys = CircuitSystem(topo, DeviceSet.from_params([dev]))
inp = InputSignal(np.sin(2 * np.pi * 5 * np.linspace(0, 1, 10001)), 0.5, 1.0, 1.0)
traj = integrate(sys, inp, SolverConfig(rtol=1e-10, atol=1e-14), sample_times=1.0 + t)
j = traj.branch_currents[:, 0]
print(f"max relative difference engine vs reference: {np.abs(j - j_ref).max() / np.abs(j_ref).max():.1e}")

# the loop is pinched: zero voltage means zero current
zero = np.abs(v(t)) < 1e-9
print(f"max |j| where |v| < 1 nV: {np.abs(j[zero]).max():.1e} A")

np.savetxt("single_device_iv.csv", np.column_stack([t, v(t), j]), delimiter=",",
           header="t,v,j", comments="")
