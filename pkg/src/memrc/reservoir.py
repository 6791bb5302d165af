"""Driving a memristor circuit as a reservoir.

Every drive starts from zero nodal flux, i.e. each device at its sampled
initial memductance ``1/M0``; this is the reservoir reset.  Branch currents
are sampled at ``l_out`` uniformly spaced instants of the main period,
endpoints included.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .engine import CircuitSystem, InputSignal, IntegrationError, SolverConfig, integrate_many, main_grid


@dataclass(frozen=True)
class ReservoirTrace:
    currents: np.ndarray  # (L_out, N_m), amperes

    def __post_init__(self):
        c = np.asarray(self.currents, dtype=float)
        if c.ndim != 2:
            raise ValueError("trace currents must be a 2-D (L_out, N_m) array")
        if not np.all(np.isfinite(c)):
            raise ValueError("trace contains non-finite currents")
        object.__setattr__(self, "currents", c)

    @property
    def l_out(self) -> int:
        return self.currents.shape[0]

    @property
    def n_branches(self) -> int:
        return self.currents.shape[1]


class DriveError(RuntimeError):
    """One or more inputs failed to integrate.

    ``failures`` maps input index to the underlying :class:`IntegrationError`;
    ``traces`` holds the successful traces (``None`` at failed positions).
    """

    def __init__(self, failures, traces):
        idx = sorted(failures)
        first = failures[idx[0]]
        super().__init__(f"{len(idx)} input(s) failed, first at index {idx[0]}: {first}")
        self.failures = failures
        self.traces = traces


def sample_times(inp: InputSignal, l_out: int) -> np.ndarray:
    if l_out < 1:
        raise ValueError("l_out must be >= 1")
    return main_grid(inp.t_relax, inp.t_main, l_out)


def drive(sys: CircuitSystem, inp: InputSignal, l_out: int, cfg: SolverConfig | None = None) -> ReservoirTrace:
    """Reset the circuit, apply ``inp`` and return sampled branch currents."""
    cur, failures = integrate_many(sys, [inp], sample_times(inp, l_out), cfg)
    if failures:
        exc = failures[0]
        raise IntegrationError(f"drive failed: {exc}", exc.time, 0) from exc
    return ReservoirTrace(cur[0])


def drive_sequence(sys: CircuitSystem, inputs, l_out: int, cfg: SolverConfig | None = None,
                   raise_on_error: bool = True):
    """Drive each input independently from a reset state.

    Inputs sharing a time grid are integrated together.  Output order follows
    ``inputs``.  If any item fails, the remaining items are still integrated
    and a :class:`DriveError` listing the failed indices is raised (or, with
    ``raise_on_error=False``, ``None`` is left in their positions).
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("no inputs to drive")
    groups = defaultdict(list)
    for k, inp in enumerate(inputs):
        groups[(inp.t_relax, inp.t_main, len(inp.samples))].append(k)
    traces = [None] * len(inputs)
    failures = {}
    for idx in groups.values():
        ref = inputs[idx[0]]
        cur, fails = integrate_many(sys, [inputs[k] for k in idx], sample_times(ref, l_out), cfg)
        for j, k in enumerate(idx):
            if j in fails:
                fails[j].index = k
                failures[k] = fails[j]
            else:
                traces[k] = ReservoirTrace(cur[j])
    if failures and raise_on_error:
        raise DriveError(failures, traces)
    return traces


def stack_traces(traces) -> np.ndarray:
    """(n, L_out, N_m) array from a list of equally shaped traces."""
    shapes = {t.currents.shape for t in traces}
    if len(shapes) != 1:
        raise ValueError(f"ragged trace shapes: {sorted(shapes)}")
    return np.stack([t.currents for t in traces])
