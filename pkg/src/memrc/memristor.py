"""Linear drift memristor: device sampling, flux-domain memductance, and a
time-domain reference integrator.

The memristance of a device with doped-region width ``w`` is

    M(w) = R_on * w / D + R_off * (1 - w / D)

and ``dw/dt = mu_v * R_on / D * j``.  Eliminating ``w`` in favour of the flux
``Phi = integral of v`` gives ``M(Phi)**2 = M0**2 - 2 a Phi`` with
``a = mu_v * R_on * (R_off - R_on) / D**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

D_DEFAULT = 1e-8  # m
MU_V_DEFAULT = 1e-14  # m^2 s^-1 V^-1
R_ON_DEFAULT = 100.0  # ohm


@dataclass(frozen=True)
class DeviceParams:
    """One device, or a set of devices when the fields are equal-length arrays."""

    R_on: float | np.ndarray
    R_off: float | np.ndarray
    w0: float | np.ndarray
    D: float = D_DEFAULT
    mu_v: float = MU_V_DEFAULT

    @property
    def r(self):
        return np.divide(self.R_off, self.R_on)

    @property
    def a(self):
        """Drift constant in ohm^2 / Wb."""
        return self.mu_v * self.R_on * (self.R_off - self.R_on) / self.D**2

    @property
    def M0(self):
        """Initial memristance M(w0)."""
        x = np.divide(self.w0, self.D)
        return self.R_on * x + self.R_off * (1.0 - x)

    def memristance(self, w):
        x = np.divide(w, self.D)
        return self.R_on * x + self.R_off * (1.0 - x)

    def validate(self) -> None:
        R_on, R_off, w0 = (np.asarray(x, dtype=float) for x in (self.R_on, self.R_off, self.w0))
        if not (np.all(R_on > 0) and np.all(R_off >= R_on)):
            raise ValueError("device needs 0 < R_on <= R_off")
        if not (np.all(w0 >= 0) and np.all(w0 <= self.D)):
            raise ValueError("device needs 0 <= w0 <= D")
        if self.D <= 0 or self.mu_v <= 0:
            raise ValueError("D and mu_v must be positive")


class DeviceSet:
    """Per-branch device parameters stored as arrays.

    Indexing returns scalar :class:`DeviceParams`; the set itself exposes the
    same ``a``/``M0``/``memductance`` surface, vectorised over branches.
    """

    def __init__(self, R_on, R_off, w0, D=D_DEFAULT, mu_v=MU_V_DEFAULT):
        self.R_on = np.array(R_on, dtype=float, ndmin=1)
        self.R_off = np.array(R_off, dtype=float, ndmin=1)
        self.w0 = np.array(w0, dtype=float, ndmin=1)
        if not (self.R_on.shape == self.R_off.shape == self.w0.shape) or self.R_on.ndim != 1:
            raise ValueError("R_on, R_off and w0 must be 1-D arrays of equal length")
        self.D = float(D)
        self.mu_v = float(mu_v)
        DeviceParams(self.R_on, self.R_off, self.w0, self.D, self.mu_v).validate()
        self.a = self.mu_v * self.R_on * (self.R_off - self.R_on) / self.D**2
        x = self.w0 / self.D
        self.M0 = self.R_on * x + self.R_off * (1.0 - x)
        for arr in (self.R_on, self.R_off, self.w0, self.a, self.M0):
            arr.flags.writeable = False

    @classmethod
    def from_params(cls, devices) -> "DeviceSet":
        devices = list(devices)
        D = {d.D for d in devices}
        mu = {d.mu_v for d in devices}
        if len(D) != 1 or len(mu) != 1:
            raise ValueError("all devices in a set must share D and mu_v")
        return cls([d.R_on for d in devices], [d.R_off for d in devices],
                   [d.w0 for d in devices], D.pop(), mu.pop())

    @classmethod
    def uniform(cls, count, R_on=R_ON_DEFAULT, R_off=None, w0=None, D=D_DEFAULT,
                mu_v=MU_V_DEFAULT) -> "DeviceSet":
        R_off = 50 * R_on if R_off is None else R_off
        w0 = D / 10 if w0 is None else w0
        return cls(np.full(count, R_on), np.full(count, R_off), np.full(count, w0), D, mu_v)

    def __len__(self):
        return len(self.R_on)

    def __getitem__(self, m) -> DeviceParams:
        return DeviceParams(float(self.R_on[m]), float(self.R_off[m]), float(self.w0[m]),
                            self.D, self.mu_v)

    def __iter__(self):
        return (self[m] for m in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, DeviceSet):
            return NotImplemented
        return (self.D == other.D and self.mu_v == other.mu_v
                and np.array_equal(self.R_on, other.R_on)
                and np.array_equal(self.R_off, other.R_off)
                and np.array_equal(self.w0, other.w0))

    def memristance(self, w):
        x = np.asarray(w) / self.D
        return self.R_on * x + self.R_off * (1.0 - x)

    def memductance(self, flux):
        """Memductances for branch fluxes ``flux`` (last axis = branch)."""
        return memductance(self, flux)

    def to_dict(self):
        return {"R_on": self.R_on.tolist(), "R_off": self.R_off.tolist(),
                "w0": self.w0.tolist(), "D": self.D, "mu_v": self.mu_v}

    @classmethod
    def from_dict(cls, d):
        return cls(d["R_on"], d["R_off"], d["w0"], d["D"], d["mu_v"])


@dataclass(frozen=True)
class VariabilitySpec:
    """Normal device-to-device variation around mean ON resistance and ON/OFF ratio.

    ``R_on ~ N(R_on_mean, sigma R_on_mean)``, ``R_off ~ N(r_mean R_on_mean,
    2 sigma r_mean R_on_mean)`` and ``w0 ~ N(D/10, sigma D/10)``.
    """

    r_mean: float = 50.0
    sigma: float = 0.2
    R_on_mean: float = R_ON_DEFAULT
    D: float = D_DEFAULT
    mu_v: float = MU_V_DEFAULT

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.r_mean < 1:
            raise ValueError("r_mean must be >= 1")
        if self.R_on_mean <= 0 or self.D <= 0 or self.mu_v <= 0:
            raise ValueError("R_on_mean, D and mu_v must be positive")

    @property
    def R_off_mean(self) -> float:
        return self.r_mean * self.R_on_mean


class SamplingError(RuntimeError):
    """Rejection sampling could not produce valid devices."""


def sample_devices(spec: VariabilitySpec, count: int, seed=None, max_rounds: int = 1000) -> DeviceSet:
    """Draw ``count`` devices; invalid draws (``R_on <= 0``, ``R_off < R_on``,
    ``w0`` outside ``[0, D]``) are redrawn."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    R_on = np.empty(count)
    R_off = np.empty(count)
    w0 = np.empty(count)
    bad = np.ones(count, dtype=bool)
    for _ in range(max_rounds):
        k = int(bad.sum())
        if k == 0:
            break
        R_on[bad] = rng.normal(spec.R_on_mean, spec.sigma * spec.R_on_mean, k)
        R_off[bad] = rng.normal(spec.R_off_mean, 2 * spec.sigma * spec.R_off_mean, k)
        w0[bad] = rng.normal(spec.D / 10, spec.sigma * spec.D / 10, k)
        bad = (R_on <= 0) | (R_off < R_on) | (w0 < 0) | (w0 > spec.D)
    if bad.any():
        raise SamplingError(
            f"{int(bad.sum())} devices still invalid after {max_rounds} rounds; sigma too large"
        )
    return DeviceSet(R_on, R_off, w0, spec.D, spec.mu_v)


def memductance(dev, flux):
    """W(Phi) = (M0^2 - 2 a Phi)^(-1/2), memristance clamped to [R_on, R_off].

    ``dev`` may be a :class:`DeviceParams` or :class:`DeviceSet`; ``flux``
    broadcasts against the device arrays.
    """
    R_on = np.asarray(dev.R_on, dtype=float)
    R_off = np.asarray(dev.R_off, dtype=float)
    m_sq = np.square(dev.M0) - 2.0 * np.asarray(dev.a) * np.asarray(flux, dtype=float)
    m_sq = np.clip(m_sq, R_on * R_on, R_off * R_off)
    return 1.0 / np.sqrt(m_sq)


def flux_at_memristance(dev, M):
    """Flux at which the flux-form memristance equals ``M`` (inverse of the
    unclamped memductance law)."""
    return (np.square(dev.M0) - np.square(M)) / (2.0 * np.asarray(dev.a))


def oracle_single_device(
    dev: DeviceParams,
    voltage: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    dt: float,
    t_end: float | None = None,
):
    """Integrate the state-space drift model directly with classical RK4.

    ``voltage`` is either a callable ``v(t)`` or an array of samples on the
    grid ``k * dt`` (linearly interpolated at RK4 half steps).  The width
    ``w`` is clamped to ``[0, D]`` after each step.

    Returns ``(t, j, w)`` on the uniform grid.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if callable(voltage):
        if t_end is None:
            raise ValueError("t_end is required with a callable voltage")
        n = int(round(t_end / dt)) + 1
        t = np.arange(n) * dt
        v_fun = voltage
    else:
        samples = np.asarray(voltage, dtype=float)
        n = len(samples)
        t = np.arange(n) * dt
        v_fun = lambda tt: np.interp(tt, t, samples)  # noqa: E731

    k_drift = dev.mu_v * dev.R_on / dev.D

    def rate(tt, w):
        return k_drift * v_fun(tt) / dev.memristance(w)

    w = np.empty(n)
    w[0] = dev.w0
    for i in range(n - 1):
        ti, wi = t[i], w[i]
        k1 = rate(ti, wi)
        k2 = rate(ti + dt / 2, wi + dt / 2 * k1)
        k3 = rate(ti + dt / 2, wi + dt / 2 * k2)
        k4 = rate(ti + dt, wi + dt * k3)
        w[i + 1] = min(max(wi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0), dev.D)
    v = np.asarray(v_fun(t), dtype=float)
    j = v / dev.memristance(w)
    return t, j, w
