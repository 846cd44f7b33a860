"""Time grids, the piecewise-linear hat basis and exact trig moments.

A pulse is stored by its values at the interior nodes of a grid on
``[0, tau]``.  Between nodes it is linear and it vanishes at both ends, so
every pulse built here starts and stops softly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "PulseEnvelope",
    "make_uniform_grid",
    "evaluate_pulse",
    "hat_functions",
    "segment_trig_moments",
    "shifted_moments",
]

MIN_INTERIOR_NODES = 4
# |delta * L| below this uses the power series in shifted_moments
_SERIES_THRESHOLD = 1.0
_SERIES_TERMS = 32


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Cut points ``0 = t_0 < t_1 < ... < t_n < t_{n+1} = tau``."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < MIN_INTERIOR_NODES + 2:
            raise ValueError(
                f"need at least {MIN_INTERIOR_NODES} interior nodes, got {nodes.size - 2}"
            )
        if nodes[0] != 0.0:
            raise ValueError("first node must be exactly 0")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def tau(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        """Number of interior nodes (= number of basis functions)."""
        return self.nodes.size - 2

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    def normalized(self) -> np.ndarray:
        """Nodes mapped to ``[0, 1]``."""
        return self.nodes / self.tau

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
        )


def make_uniform_grid(tau: float, n: int) -> TimeGrid:
    """Uniform grid with ``n`` interior nodes, ``t_k = k * tau / (n + 1)``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if int(n) != n or n < MIN_INTERIOR_NODES:
        raise ValueError(
            f"n must be an integer >= {MIN_INTERIOR_NODES} (four constraints), got {n}"
        )
    n = int(n)
    nodes = np.arange(n + 2, dtype=float) * (tau / (n + 1))
    nodes[-1] = tau
    return TimeGrid(nodes)


@dataclass(frozen=True, eq=False)
class PulseEnvelope:
    """Piecewise-linear drive amplitude on a grid.

    Parameters
    ----------
    grid : TimeGrid
    omega : array of shape (n,)
        Amplitude in rad/s at the interior nodes.  This is the drive ``Omega``
        entering the phase-space integrals; the gate Rabi rate quoted for
        experiments is ``omega / sqrt(2)`` (see :mod:`mspulse.optimize`).
    delta : float
        Gate detuning in rad/s.
    loops : int
        Number of phase-space loops ``K``; ``delta * tau == 2 pi K``.
    c : float
        Derivative-penalty weight the shape was synthesized with.
    orientation : int
        Sign of the enclosed area, +1 or -1.
    """

    grid: TimeGrid
    omega: np.ndarray
    delta: float
    loops: int
    c: float = 1.0
    orientation: int = 1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        if omega.shape != (self.grid.n,):
            raise ValueError(f"omega must have shape ({self.grid.n},), got {omega.shape}")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        if int(self.loops) != self.loops or self.loops < 1:
            raise ValueError(f"loops must be a positive integer, got {self.loops}")
        expected = 2.0 * math.pi * self.loops
        if abs(self.delta * self.grid.tau - expected) > 1e-12 * expected:
            raise ValueError(
                f"delta * tau = {self.delta * self.grid.tau!r} is not 2 pi * {self.loops}"
            )
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def tau(self) -> float:
        return self.grid.tau

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def values(self) -> np.ndarray:
        """Amplitudes at all nodes, including the zero endpoints."""
        return np.concatenate(([0.0], self.omega, [0.0]))

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.omega)))

    def __call__(self, t):
        return evaluate_pulse(self, t)


def evaluate_pulse(pulse, t):
    """Linear interpolation of the node amplitudes at time(s) ``t``.

    Works for any pulse exposing ``times`` and ``values`` arrays.
    """
    times = pulse.times
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > times[-1]):
        raise ValueError(f"t outside [0, {times[-1]}]")
    out = np.interp(t_arr, times, pulse.values)
    return float(out) if out.ndim == 0 else out


def hat_functions(grid: TimeGrid, t) -> np.ndarray:
    """Values ``chi_k(t)`` of all interior hats, shape ``(len(t), n)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    eye = np.eye(grid.n + 2)[:, 1:-1]
    return np.stack([np.interp(t, grid.nodes, col) for col in eye.T], axis=1)


def shifted_moments(a, length, delta, max_order: int) -> np.ndarray:
    """``I_j = int_0^L s^j exp(i delta (a + s)) ds`` for ``j = 0..max_order``.

    Returns a complex array of shape ``(max_order + 1,) + broadcast shape``.
    Short intervals (``|delta L| < 1``) use a power series, which is exact
    in the limit ``delta -> 0``.
    """
    a, length = np.broadcast_arrays(np.asarray(a, float), np.asarray(length, float))
    shape = a.shape
    a = a.ravel()
    length = length.ravel()
    x = delta * length
    out = np.empty((max_order + 1, a.size), dtype=complex)
    small = np.abs(x) < _SERIES_THRESHOLD
    big = ~small

    if np.any(small):
        xs = x[small]
        ls = length[small]
        k = np.arange(_SERIES_TERMS)
        # (i x)^k / k!
        coeff = np.array([1j**kk / math.factorial(kk) for kk in k])
        powers = coeff[:, None] * xs[None, :] ** k[:, None]
        for j in range(max_order + 1):
            s = (powers / (j + k + 1)[:, None]).sum(axis=0)
            out[j, small] = ls ** (j + 1) * s

    if np.any(big):
        lb = length[big]
        d = delta
        e = np.exp(1j * d * lb)
        # recursion I_j = (L^j e^{i d L} - j I_{j-1}) / (i d)
        prev = (e - 1.0) / (1j * d)
        out[0, big] = prev
        for j in range(1, max_order + 1):
            prev = (lb**j * e - j * prev) / (1j * d)
            out[j, big] = prev

    out *= np.exp(1j * delta * a)[None, :]
    return out.reshape((max_order + 1,) + shape)


def _moments_complex(a, b, delta, order):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    base = shifted_moments(a, b - a, delta, order)
    # t^m = (a + s)^m expanded binomially
    total = np.zeros(np.broadcast(a, b).shape, dtype=complex)
    for j in range(order + 1):
        total = total + math.comb(order, j) * a ** (order - j) * base[j]
    return total


def segment_trig_moments(a, b, delta: float, order: int = 0):
    """Exact ``(int_a^b t^m sin(delta t) dt, int_a^b t^m cos(delta t) dt)``.

    ``order`` is the power ``m`` (0, 1 or 2).  ``a`` and ``b`` may be arrays.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if np.any(np.asarray(b) < np.asarray(a)):
        raise ValueError("need a <= b")
    z = _moments_complex(a, b, delta, order)
    if np.ndim(z) == 0:
        return float(z.imag), float(z.real)
    return z.imag, z.real
