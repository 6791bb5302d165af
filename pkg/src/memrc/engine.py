"""Flux-formulated network equations and their time integration.

With nodal fluxes ``phi`` as the differential state the network obeys

    E_m W(E_m^T phi) E_m^T dphi/dt + E_i j_i = 0
    dphi/dt = v_n
    E_i^T v_n = v_i(t)

Memductance depends on flux only, so for a given ``phi`` the nodal voltages
and source currents follow from one linear saddle-point solve.  Integration
then reduces to the ODE ``dphi/dt = v_n(phi, t)``, advanced with an adaptive
Dormand-Prince 5(4) pair.  Many independent drives of the same circuit are
integrated together as a batch; every batch member keeps its own time, step
size and error control, so results do not depend on batch composition.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .memristor import DeviceSet, memductance
from .netlist import NetworkTopology, build_incidence


class IntegrationError(RuntimeError):
    """The integrator failed (step-size underflow or non-finite state)."""

    def __init__(self, message, time=None, index=None):
        super().__init__(message)
        self.time = time
        self.index = index


class CircuitSystem:
    """A topology populated with devices; immutable after construction."""

    def __init__(self, topology: NetworkTopology, devices: DeviceSet):
        if not isinstance(devices, DeviceSet):
            devices = DeviceSet.from_params(devices)
        if len(devices) != topology.n_memristors:
            raise ValueError(
                f"{len(devices)} devices for {topology.n_memristors} memristor branches"
            )
        self.topology = topology
        self.devices = devices
        self.incidence = build_incidence(topology)
        self.ground_node = topology.ground_node
        self.free = np.array([k for k in range(topology.n_nodes) if k != self.ground_node])
        E_m, E_i = self.incidence.E_m, self.incidence.E_i
        self._Em_r = np.ascontiguousarray(E_m[self.free])
        self._EmT_r = np.ascontiguousarray(self._Em_r.T)
        nf, ni = len(self.free), topology.n_sources
        border = np.zeros((nf + ni, nf + ni))
        border[:nf, nf:] = E_i[self.free]
        border[nf:, :nf] = E_i[self.free].T
        self._border = border

    @property
    def n_nodes(self) -> int:
        return self.topology.n_nodes

    @property
    def n_memristors(self) -> int:
        return self.topology.n_memristors

    @property
    def n_sources(self) -> int:
        return self.topology.n_sources

    def branch_flux(self, phi_n):
        return np.asarray(phi_n) @ self.incidence.E_m

    def memductances(self, phi_n):
        return memductance(self.devices, self.branch_flux(phi_n))

    def _solve_free(self, phi_free, v_source):
        """Batched saddle solve. ``phi_free``: (B, nf); ``v_source``: (B, ni).

        Returns ``(v_free, j_i, W)``.
        """
        B, nf = phi_free.shape
        W = memductance(self.devices, phi_free @ self._Em_r)
        K = np.broadcast_to(self._border, (B,) + self._border.shape).copy()
        K[:, :nf, :nf] = (self._Em_r * W[:, None, :]) @ self._EmT_r
        rhs = np.zeros((B, K.shape[1], 1))
        rhs[:, nf:, 0] = v_source
        try:
            sol = np.linalg.solve(K, rhs)[..., 0]
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "singular circuit matrix; check that the topology is connected"
            ) from exc
        return sol[:, :nf], sol[:, nf:], W


def solve_instant(sys: CircuitSystem, phi_n, v_source):
    """Algebraic state for nodal fluxes ``phi_n`` and source voltage(s).

    Accepts a single state (``phi_n`` of shape (n_nodes,)) or a batch
    ((B, n_nodes)).  Returns ``(v_n, j_i, j_m)`` with matching leading shape.
    The ground entries of ``phi_n`` are ignored (taken as zero).
    """
    phi_n = np.asarray(phi_n, dtype=float)
    single = phi_n.ndim == 1
    phi = np.atleast_2d(phi_n)
    B = phi.shape[0]
    ni = sys.n_sources
    vs = np.asarray(v_source, dtype=float)
    if vs.ndim == 0:
        vs = np.full((B, ni), float(vs))
    elif vs.size == B * ni:
        vs = vs.reshape(B, ni)
    else:
        vs = np.broadcast_to(vs.reshape(1, ni), (B, ni))
    v_free, j_i, W = sys._solve_free(phi[:, sys.free], vs)
    v_n = np.zeros((B, sys.n_nodes))
    v_n[:, sys.free] = v_free
    j_m = W * (v_n @ sys.incidence.E_m)
    if single:
        return v_n[0], j_i[0], j_m[0]
    return v_n, j_i, j_m


def kcl_residual(sys: CircuitSystem, j_m, j_i):
    """``E_m j_m + E_i j_i`` (row-wise for batches)."""
    return np.asarray(j_m) @ sys.incidence.E_m.T + np.asarray(j_i) @ sys.incidence.E_i.T


# -- input signals -------------------------------------------------------------

@dataclass(frozen=True)
class InputSignal:
    """Zero volts on [0, t_relax], then ``v_max * samples`` linearly
    interpolated over ``L_in`` uniformly spaced knots on [t_relax, t_relax + t_main]."""

    samples: np.ndarray
    v_max: float
    t_relax: float
    t_main: float

    def __post_init__(self):
        s = np.array(self.samples, dtype=float, ndmin=1)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("an input signal needs at least two samples")
        if not np.all(np.isfinite(s)):
            raise ValueError("input samples must be finite")
        if self.t_relax <= 0 or self.t_main <= 0:
            raise ValueError("t_relax and t_main must be positive")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def t_end(self) -> float:
        return self.t_relax + self.t_main

    def knot_times(self) -> np.ndarray:
        return main_grid(self.t_relax, self.t_main, len(self.samples))

    def knot_voltages(self) -> np.ndarray:
        return self.v_max * self.samples

    def voltage(self, t):
        """Source voltage at time(s) ``t``; zero outside the main period."""
        t = np.asarray(t, dtype=float)
        kt = self.knot_times()
        v = np.interp(t, kt, self.knot_voltages())
        return np.where((t >= self.t_relax) & (t <= kt[-1]), v, 0.0)


def main_grid(t_relax: float, t_main: float, n: int) -> np.ndarray:
    """``n`` uniformly spaced instants on [t_relax, t_relax + t_main], endpoints included."""
    if n == 1:
        return np.array([t_relax])
    return t_relax + np.arange(n) * (t_main / (n - 1))


def build_input(raw, v_max: float, t_relax: float, t_main: float, scale_ref: float | None = None) -> InputSignal:
    """Scale a raw series so that ``|raw| = scale_ref`` maps to ``v_max`` volts.

    ``scale_ref`` defaults to ``max |raw|`` of this series; pass a
    dataset-wide value to preserve relative amplitudes between samples.
    """
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw input contains non-finite values")
    if scale_ref is None:
        scale_ref = float(np.max(np.abs(raw))) or 1.0
    if scale_ref <= 0:
        raise ValueError("scale_ref must be positive")
    return InputSignal(raw / scale_ref, v_max, t_relax, t_main)


# -- integration -----------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-6
    atol: float = 1e-9
    first_step: float | None = None
    max_steps: int = 100_000
    batch_size: int = 2048


# Dormand-Prince 5(4) tableau with its 4th-order continuous extension.
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])
_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


@dataclass
class _BatchResult:
    sample_phi: np.ndarray  # (B, S, nf) fluxes at sample times
    failures: dict = field(default_factory=dict)  # batch index -> IntegrationError
    step_times: list | None = None  # only for B == 1 recordings
    step_phi: list | None = None
    n_steps: np.ndarray | None = None


def _integrate_batch(sys, knot_t, knot_v, sample_t, cfg, record_steps=False):
    """Integrate ``dphi/dt = v_n`` over the main period for a batch of inputs.

    ``knot_t`` (L,) shared knot times; ``knot_v`` (B, L, ni) knot voltages;
    ``sample_t`` (S,) sorted sample instants within [knot_t[0], knot_t[-1]].
    Integration starts at ``knot_t[0]`` from zero flux and never steps across
    a knot, so the piecewise-linear drive is smooth inside every step.
    """
    knot_t = np.asarray(knot_t, dtype=float)
    knot_v = np.asarray(knot_v, dtype=float)
    if knot_v.ndim == 2:
        knot_v = knot_v[..., None]
    B, L, _ = knot_v.shape
    nf = len(sys.free)
    S = len(sample_t)
    seg_len = np.diff(knot_t)

    def rhs(t, y, seg, idx):
        x = ((t - knot_t[seg]) / seg_len[seg])[:, None]
        vs = knot_v[idx, seg] * (1.0 - x) + knot_v[idx, seg + 1] * x
        v_free, _, _ = sys._solve_free(y, vs)
        return v_free

    out = np.zeros((B, S, nf))
    t = np.full(B, knot_t[0])
    y = np.zeros((B, nf))
    seg = np.zeros(B, dtype=int)
    h = np.full(B, cfg.first_step or seg_len[0])
    steps = np.zeros(B, dtype=int)
    nxt = np.full(B, int(np.searchsorted(sample_t, knot_t[0], side="right")))
    alive = np.ones(B, dtype=bool)
    failures = {}
    all_idx = np.arange(B)
    k1 = rhs(t, y, seg, all_idx)
    rec_t = [knot_t[0]] if record_steps else None
    rec_y = [y[0].copy()] if record_steps else None
    K = np.empty((7, B, nf))

    while True:
        act = np.flatnonzero(alive)
        if act.size == 0:
            break
        ta, ya, sa, ha = t[act], y[act], seg[act], h[act]
        seg_end = knot_t[sa + 1]
        remaining = seg_end - ta
        land = ha >= remaining * (1.0 - 1e-10)
        he = np.where(land, remaining, ha)
        Ka = K[:, : act.size]
        Ka[0] = k1[act]
        for s in range(1, 6):
            dy = np.tensordot(_A[s], Ka[:s], axes=1)
            Ka[s] = rhs(ta + _C[s] * he, ya + he[:, None] * dy, sa, act)
        y_new = ya + he[:, None] * np.tensordot(_B, Ka[:6], axes=1)
        t_new = np.where(land, seg_end, ta + he)
        Ka[6] = rhs(t_new, y_new, sa, act)

        err = he[:, None] * np.tensordot(_E, Ka, axes=1)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(ya), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        finite = np.all(np.isfinite(y_new), axis=1) & np.isfinite(err_norm)
        accept = (err_norm <= 1.0) & finite
        with np.errstate(divide="ignore"):
            factor = _SAFETY * np.where(err_norm > 0, err_norm, 1e-300) ** -0.2
        factor = np.where(accept, np.minimum(_MAX_FACTOR, factor), np.clip(factor, _MIN_FACTOR, 1.0))
        factor = np.where(finite, factor, _MIN_FACTOR)
        h_next = np.where(land & accept, np.maximum(he * factor, ha), he * factor)

        steps[act] += 1
        bad = (~accept & (he <= 10 * np.finfo(float).eps * np.maximum(np.abs(ta), 1.0))) | (
            steps[act] > cfg.max_steps
        )
        for i in np.flatnonzero(bad):
            b = act[i]
            reason = "step count exceeded" if steps[b] > cfg.max_steps else (
                "non-finite state" if not finite[i] else "step size underflow")
            failures[int(b)] = IntegrationError(f"{reason} at t={ta[i]:.6g} s", ta[i], int(b))
            alive[b] = False

        ok = np.flatnonzero(accept)
        if ok.size:
            bo = act[ok]
            # dense output for every sample falling in (t_old, t_new]
            while S:
                pend = nxt[bo] < S
                ts = np.where(pend, sample_t[np.minimum(nxt[bo], S - 1)], np.inf)
                hit = ts <= t_new[ok]
                if not hit.any():
                    break
                hi = ok[hit]
                bh = bo[hit]
                tsh = ts[hit]
                exact = tsh == t_new[hi]
                xs = (tsh - ta[hi]) / he[hi]
                pw = np.stack([xs, xs**2, xs**3, xs**4], axis=1)  # (H, 4)
                coef = pw @ _P.T  # (H, 7)
                dense = ya[hi] + he[hi, None] * np.einsum("hk,khn->hn", coef, Ka[:, hi])
                out[bh, nxt[bh]] = np.where(exact[:, None], y_new[hi], dense)
                nxt[bh] += 1
            t[bo] = t_new[ok]
            y[bo] = y_new[ok]
            k1[bo] = Ka[6, ok]
            seg[bo] += land[ok]
            if record_steps:
                rec_t.append(t_new[ok][0])
                rec_y.append(y_new[ok][0].copy())
            finished = seg[bo] >= L - 1
            alive[bo[finished]] = False
        h[act] = np.where(alive[act], h_next, h[act])

    return _BatchResult(out, failures, rec_t, rec_y, steps)


@dataclass
class Trajectory:
    times: np.ndarray
    branch_currents: np.ndarray  # (steps, N_m)
    nodal_voltages: np.ndarray  # (steps, N_n)
    nodal_fluxes: np.ndarray  # (steps, N_n)
    source_currents: np.ndarray  # (steps, N_i)
    source_voltages: np.ndarray  # (steps, N_i)

    def to_csv(self, path) -> None:
        n_n = self.nodal_voltages.shape[1]
        n_m = self.branch_currents.shape[1]
        header = ["t"] + [f"v_{k}" for k in range(n_n)] + [f"j_{m}" for m in range(n_m)]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in np.column_stack([self.times, self.nodal_voltages, self.branch_currents]):
                w.writerow([repr(float(x)) for x in row])


def _full_phi(sys, phi_free):
    phi = np.zeros(phi_free.shape[:-1] + (sys.n_nodes,))
    phi[..., sys.free] = phi_free
    return phi


def _knot_voltages(inp: InputSignal, n_sources: int):
    kv = inp.knot_voltages()
    return np.repeat(kv[:, None], n_sources, axis=1) if n_sources > 1 else kv[:, None]


def trajectory_at(sys, times, phi_full, v_source) -> Trajectory:
    v_n, j_i, j_m = solve_instant(sys, phi_full, v_source)
    return Trajectory(np.asarray(times), j_m, v_n, phi_full, j_i,
                      np.asarray(v_source).reshape(len(times), -1))


def integrate(sys: CircuitSystem, inp: InputSignal, cfg: SolverConfig | None = None,
              sample_times=None) -> Trajectory:
    """Integrate one drive from zero flux over [0, t_relax + t_main].

    By default the trajectory holds t = 0 followed by every accepted solver
    step of the main period (flux is identically zero during relaxation).
    With ``sample_times`` (within the main period) it holds dense-output
    samples at exactly those instants instead.
    """
    cfg = cfg or SolverConfig()
    knot_t = inp.knot_times()
    kv = _knot_voltages(inp, sys.n_sources)[None]
    if sample_times is None:
        res = _integrate_batch(sys, knot_t, kv, np.empty(0), cfg, record_steps=True)
        if res.failures:
            raise res.failures[0]
        times = np.concatenate([[0.0], res.step_times])
        phi = _full_phi(sys, np.vstack([np.zeros(len(sys.free)), *res.step_phi]))
    else:
        times = np.asarray(sample_times, dtype=float)
        if np.any(np.diff(times) < 0) or times[0] < knot_t[0] or times[-1] > knot_t[-1]:
            raise ValueError("sample_times must be sorted and lie in the main period")
        res = _integrate_batch(sys, knot_t, kv, times, cfg)
        if res.failures:
            raise res.failures[0]
        phi = _full_phi(sys, res.sample_phi[0])
    vs = np.column_stack([inp.voltage(times)] * sys.n_sources)
    return trajectory_at(sys, times, phi, vs)


def integrate_many(sys: CircuitSystem, inputs, sample_times, cfg: SolverConfig | None = None):
    """Branch currents at ``sample_times`` for many inputs sharing one time grid.

    Returns ``(currents, failures)`` where ``currents`` has shape
    (len(inputs), S, N_m) (NaN rows for failed items) and ``failures`` maps
    item index to :class:`IntegrationError`.
    """
    cfg = cfg or SolverConfig()
    inputs = list(inputs)
    if not inputs:
        return np.zeros((0, len(sample_times), sys.n_memristors)), {}
    ref = inputs[0]
    key = (ref.t_relax, ref.t_main, len(ref.samples))
    for k, inp in enumerate(inputs):
        if (inp.t_relax, inp.t_main, len(inp.samples)) != key:
            raise ValueError(f"input {k} does not share the time grid of input 0")
    knot_t = ref.knot_times()
    sample_t = np.asarray(sample_times, dtype=float)
    S = len(sample_t)
    n_in = len(inputs)
    currents = np.full((n_in, S, sys.n_memristors), np.nan)
    failures = {}
    idx = np.clip(np.searchsorted(knot_t, sample_t, side="right") - 1, 0, len(knot_t) - 2)
    frac = (sample_t - knot_t[idx]) / (knot_t[idx + 1] - knot_t[idx])
    for start in range(0, n_in, cfg.batch_size):
        chunk = inputs[start:start + cfg.batch_size]
        kv = np.stack([_knot_voltages(inp, sys.n_sources) for inp in chunk])
        res = _integrate_batch(sys, knot_t, kv, sample_t, cfg)
        vs = kv[:, idx] * (1.0 - frac)[None, :, None] + kv[:, idx + 1] * frac[None, :, None]
        phi = _full_phi(sys, res.sample_phi).reshape(-1, sys.n_nodes)
        _, _, j_m = solve_instant(sys, phi, vs.reshape(-1, sys.n_sources))
        currents[start:start + len(chunk)] = j_m.reshape(len(chunk), S, -1)
        for b, exc in res.failures.items():
            currents[start + b] = np.nan
            exc.index = start + b
            failures[start + b] = exc
    return currents, failures
