"""Reservoir computing with memristor networks.

Layers, bottom up: ``netlist`` (topologies), ``memristor`` (device model and
sampling), ``engine`` (circuit integration), ``reservoir`` (reset-and-drive),
``pipeline`` (masking, state collection, readout, cross validation) and
``harness`` (datasets, benchmark runs, CLI).
"""

__version__ = "0.1.0"

from .engine import CircuitSystem, InputSignal, SolverConfig, build_input, integrate, integrate_many
from .memristor import DeviceParams, DeviceSet, VariabilitySpec, memductance, sample_devices
from .netlist import NetworkTopology, build_incidence, generate_random, generate_ring, make_network
from .reservoir import ReservoirTrace, drive, drive_sequence

__all__ = [
    "CircuitSystem", "InputSignal", "SolverConfig", "build_input", "integrate", "integrate_many",
    "DeviceParams", "DeviceSet", "VariabilitySpec", "memductance", "sample_devices",
    "NetworkTopology", "build_incidence", "generate_random", "generate_ring", "make_network",
    "ReservoirTrace", "drive", "drive_sequence",
]
