"""Phase-space trajectories of a driven mode.

For a pulse ``Omega(t)`` and accumulated phase ``theta(t)`` the trajectory is

    q(t) + i p(t) = int_0^t Omega(s) exp(i theta(s)) ds,

with ``theta(t) = delta t`` for an ideal gate.  A static detuning offset adds
``eps * t`` and a linear frequency chirp adds a quadratic term until the ramp
saturates.

Pulses are duck-typed: anything with ``times``, ``values`` (piecewise-linear
amplitude at every node, endpoints included), ``delta`` and ``tau`` works,
e.g. :class:`~mspulse.grid.PulseEnvelope` or :class:`SquarePulse`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import shifted_moments

__all__ = [
    "ErrorConfig",
    "Trajectory",
    "SquarePulse",
    "SweepPoint",
    "square_pulse",
    "endpoint",
    "integrate_trajectory",
    "shoelace_area",
    "detuning_sweep",
    "chirp_response",
]

HZ_PER_US = 1e6  # Hz/us -> Hz/s
DEFAULT_CHIRP_DURATION = 1000e-6
_CHIRP_QUAD_ORDER = 10
_AREA_QUAD_ORDER = 10


@dataclass(frozen=True)
class ErrorConfig:
    """Coherent error sources.

    detuning_offset : rad/s added to the nominal detuning.
    chirp_rate : Hz per microsecond; the detuning grows as
        ``2 pi * rate * min(t, chirp_duration)``.
    chirp_duration : seconds after which the ramp stops.
    """

    detuning_offset: float = 0.0
    chirp_rate: float = 0.0
    chirp_duration: float = DEFAULT_CHIRP_DURATION

    def __post_init__(self):
        if not self.chirp_duration >= 0:
            raise ValueError("chirp_duration must be non-negative")
        if not (math.isfinite(self.detuning_offset) and math.isfinite(self.chirp_rate)):
            raise ValueError("error parameters must be finite")

    @property
    def chirped(self) -> bool:
        return self.chirp_rate != 0.0 and self.chirp_duration > 0.0

    @property
    def chirp_rate_si(self) -> float:
        """Ramp rate of the angular detuning, rad/s^2."""
        return 2.0 * math.pi * self.chirp_rate * HZ_PER_US

    def phase(self, delta: float, t):
        t = np.asarray(t, dtype=float)
        theta = (delta + self.detuning_offset) * t
        if self.chirped:
            r = self.chirp_rate_si
            tc = self.chirp_duration
            ramp = np.where(t <= tc, 0.5 * t * t, 0.5 * tc * tc + tc * (t - tc))
            theta = theta + r * ramp
        return theta


NO_ERROR = ErrorConfig()


@dataclass(frozen=True, eq=False)
class SquarePulse:
    """Constant amplitude over ``[0, tau]``, cut into segments for integration."""

    omega: float
    tau: float
    loops: int
    segments: int = 256

    @property
    def delta(self) -> float:
        return 2.0 * math.pi * self.loops / self.tau

    @property
    def times(self) -> np.ndarray:
        t = np.linspace(0.0, self.tau, self.segments + 1)
        t[-1] = self.tau
        return t

    @property
    def values(self) -> np.ndarray:
        return np.full(self.segments + 1, float(self.omega))

    @property
    def peak(self) -> float:
        return abs(float(self.omega))

    @property
    def orientation(self) -> int:
        # constant positive drive circulates so that int p dq < 0
        return -1 if self.omega > 0 else 1


def square_pulse(loops: int, tau: float, omega: float | None = None, segments: int = 256) -> SquarePulse:
    """Square gate; ``omega`` defaults to the amplitude giving area pi/2."""
    if omega is None:
        omega = (2.0 * math.pi * loops / tau) / math.sqrt(2.0 * loops)
    return SquarePulse(float(omega), float(tau), int(loops), segments)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled path with exact endpoint data.

    ``area`` is ``int p dq`` from high-order quadrature of the continuous path;
    ``area_shoelace`` is the polygon estimate from the samples.
    """

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_end: float
    p_end: float
    area: float
    area_shoelace: float

    @property
    def closure_residual(self) -> float:
        return math.hypot(self.q_end, self.p_end)

    @property
    def alpha(self) -> complex:
        return complex(self.q_end, self.p_end)

    @property
    def symmetric_area(self) -> float:
        """``(1/2) int (p dq - q dp)``; equals ``area`` for a closed loop."""
        return self.area - 0.5 * self.q_end * self.p_end

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.t, self.q, self.p])

    def reversed(self) -> "Trajectory":
        return Trajectory(
            self.t[::-1], self.q[::-1], self.p[::-1],
            self.q_end, self.p_end, -self.area, -self.area_shoelace,
        )


def _breakpoints(pulse, err: ErrorConfig):
    """Node times and amplitudes, with the end of the chirp ramp inserted."""
    times = np.asarray(pulse.times, dtype=float)
    values = np.asarray(pulse.values, dtype=float)
    if err.chirped and 0.0 < err.chirp_duration < times[-1]:
        tc = err.chirp_duration
        if not np.any(times == tc):
            k = np.searchsorted(times, tc)
            vc = np.interp(tc, times, values)
            times = np.insert(times, k, tc)
            values = np.insert(values, k, vc)
    return times, values


def _partial_integrals(times, values, delta, err, a, x, seg):
    """``int_{a}^{x} Omega e^{i theta}`` within segment ``seg`` (arrays)."""
    t0 = times[seg]
    length = times[seg + 1] - t0
    slope = (values[seg + 1] - values[seg]) / length
    va = values[seg] + slope * (a - t0)
    if not err.chirped:
        m = shifted_moments(a, x - a, delta + err.detuning_offset, 1)
        return va * m[0] + slope * m[1]
    xg, wg = np.polynomial.legendre.leggauss(_CHIRP_QUAD_ORDER)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    span = (x - a)[..., None]
    s = a[..., None] + span * xg
    integrand = (va[..., None] + slope[..., None] * (s - a[..., None])) * np.exp(
        1j * err.phase(delta, s)
    )
    return (span * wg * integrand).sum(axis=-1)


def _endpoint_and_area(times, values, delta, err):
    n_seg = times.size - 1
    seg = np.arange(n_seg)
    a = times[:-1]
    b = times[1:]
    pieces = _partial_integrals(times, values, delta, err, a, b, seg)
    starts = np.concatenate(([0.0], np.cumsum(pieces)))
    alpha_end = starts[-1]

    # int p dq = int Omega cos(theta) p(t) dt, smooth within each segment
    xg, wg = np.polynomial.legendre.leggauss(_AREA_QUAD_ORDER)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    length = (b - a)[:, None]
    tq = a[:, None] + length * xg
    seg_q = np.broadcast_to(seg[:, None], tq.shape)
    a_q = np.broadcast_to(a[:, None], tq.shape)
    running = starts[:-1, None] + _partial_integrals(times, values, delta, err, a_q, tq, seg_q)
    omega_q = np.interp(tq, times, values)
    dq = omega_q * np.cos(err.phase(delta, tq))
    area = float(np.sum(length * wg * dq * running.imag))
    return alpha_end, area, starts


def endpoint(pulse, err: ErrorConfig = NO_ERROR) -> tuple[complex, float]:
    """Final displacement ``q + i p`` and ``int p dq`` without sampling."""
    times, values = _breakpoints(pulse, err)
    alpha, area, _ = _endpoint_and_area(times, values, pulse.delta, err)
    return complex(alpha), area


def integrate_trajectory(pulse, err: ErrorConfig = NO_ERROR, samples_per_segment: int = 20) -> Trajectory:
    """Trajectory sampled ``samples_per_segment`` times per pulse segment.

    Without a chirp each sample is exact (closed-form moments of a linear
    segment); with a chirp segments are integrated by Gauss-Legendre
    quadrature of order 10.
    """
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    times, values = _breakpoints(pulse, err)
    delta = pulse.delta
    alpha_end, area, starts = _endpoint_and_area(times, values, delta, err)

    n_seg = times.size - 1
    frac = np.arange(1, samples_per_segment + 1) / samples_per_segment
    a = np.repeat(times[:-1], samples_per_segment)
    b = np.repeat(times[1:], samples_per_segment)
    seg = np.repeat(np.arange(n_seg), samples_per_segment)
    x = a + (b - a) * np.tile(frac, n_seg)
    # last sample of every segment lands exactly on its end node
    x = np.where(np.tile(frac, n_seg) == 1.0, b, x)
    inner = _partial_integrals(times, values, delta, err, a, x, seg)
    z = np.concatenate(([0.0 + 0.0j], np.repeat(starts[:-1], samples_per_segment) + inner))
    t = np.concatenate(([0.0], x))

    traj = Trajectory(
        t=t,
        q=z.real.copy(),
        p=z.imag.copy(),
        q_end=float(alpha_end.real),
        p_end=float(alpha_end.imag),
        area=area,
        area_shoelace=0.0,
    )
    return Trajectory(traj.t, traj.q, traj.p, traj.q_end, traj.p_end, area, shoelace_area(traj))


def shoelace_area(traj) -> float:
    """Signed polygon estimate of ``int p dq`` from the samples.

    Trapezoidal rule ``sum (p_i + p_{i+1}) (q_{i+1} - q_i) / 2``, summed with
    ``math.fsum`` so reversing the path flips the sign exactly.
    """
    q = np.asarray(traj.q, dtype=float)
    p = np.asarray(traj.p, dtype=float)
    if q.size < 3:
        raise ValueError("need at least 3 samples")
    terms = 0.5 * (p[1:] + p[:-1]) * (q[1:] - q[:-1])
    return math.fsum(terms.tolist())


@dataclass(frozen=True)
class SweepPoint:
    offset: float
    closure_residual: float
    area: float


def detuning_sweep(pulse, offsets) -> list[SweepPoint]:
    """Closure residual and ``int p dq`` for each static detuning offset (rad/s)."""
    out = []
    for eps in offsets:
        if not math.isfinite(eps):
            raise ValueError("offsets must be finite")
        alpha, area = endpoint(pulse, ErrorConfig(detuning_offset=float(eps)))
        out.append(SweepPoint(float(eps), abs(alpha), area))
    return out


def chirp_response(pulse, rate: float, duration: float = DEFAULT_CHIRP_DURATION) -> tuple[float, float]:
    """Closure residual and shoelace area under a linear chirp (``rate`` in Hz/us)."""
    traj = integrate_trajectory(pulse, ErrorConfig(chirp_rate=rate, chirp_duration=duration))
    return traj.closure_residual, traj.area_shoelace
