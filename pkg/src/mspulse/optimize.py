"""Area-per-energy optimal pulse shapes and gate parameters.

The optimal shape is the top eigenvector of the pencil ``(A, E)`` restricted
to pulses that close the phase-space loop and keep it closed to first order
in the detuning.

Amplitude convention
--------------------
Pulse amplitudes (``PulseEnvelope.omega``) are the drive that enters the
phase-space integrals ``q + i p = int Omega e^{i delta t} dt`` whose enclosed
area must reach ``pi/2``.  The gate Rabi rate ``Omega_MS`` quoted for
experiments is smaller by ``sqrt(2)`` (:data:`CONTROL_PER_RABI`): in
quadrature units a displacement ``(q, p)`` is a coherent amplitude
``(q + i p) / sqrt(2)``, and the spin-motion coupling is ``Omega_MS * S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .grid import PulseEnvelope, make_uniform_grid
from .kernels import (
    DEFAULT_QUAD_ORDER,
    ConstraintSet,
    build_area_kernel,
    build_constraints,
    build_energy_kernel,
    build_mass_matrix,
    build_stiffness_matrix,
)

__all__ = [
    "CONTROL_PER_RABI",
    "SolverError",
    "OptimizationConfig",
    "OptimizationResult",
    "GateParameters",
    "SquareReference",
    "reduced_pencil",
    "solve_shape",
    "scale_to_area",
    "solve_gate_parameters",
    "square_pulse_reference",
    "square_pulse_at_peak",
    "energy_ratio",
]

CONTROL_PER_RABI = math.sqrt(2.0)
_DEGENERACY_RTOL = 1e-9


class SolverError(RuntimeError):
    """The constrained eigenproblem could not be solved."""


@dataclass(frozen=True)
class OptimizationConfig:
    loops: int
    c: float = 1.0
    n: int = 256
    area_target: float = math.pi / 2
    quad_order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        if int(self.loops) != self.loops or self.loops < 1:
            raise ValueError(f"loops must be a positive integer, got {self.loops}")
        if not self.area_target > 0:
            raise ValueError("area_target must be positive")
        if not self.c >= 0:
            raise ValueError("c must be non-negative")
        if self.n < 8 * self.loops:
            raise ValueError(
                f"n={self.n} too small to resolve {self.loops} loops (need n >= {8 * self.loops})"
            )


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Outcome of a shape solve, optionally scaled to a target area.

    ``area`` is signed (its sign is ``pulse.orientation``); ``energy`` is the
    plain ``int Omega^2 dt`` without the derivative penalty.
    """

    pulse: PulseEnvelope
    lambda_max: float
    area: float
    energy: float
    shape_vector: np.ndarray
    config: OptimizationConfig
    constraints: ConstraintSet
    degenerate: bool = False
    spectrum: np.ndarray | None = None

    @property
    def orientation(self) -> int:
        return self.pulse.orientation


@dataclass(frozen=True)
class GateParameters:
    tau: float
    delta: float
    omega_max: float
    loops: int


@dataclass(frozen=True)
class SquareReference:
    """Constant-amplitude gate closing ``loops`` circles of total area pi/2."""

    loops: int
    tau: float
    omega: float
    energy: float

    @property
    def delta(self) -> float:
        return 2.0 * math.pi * self.loops / self.tau


def reduced_pencil(area: np.ndarray, energy: np.ndarray, constraints: ConstraintSet):
    """Orthonormal complement ``Q`` of the constraints and the reduced forms."""
    b = constraints.vectors / np.linalg.norm(constraints.vectors, axis=0)
    q_full, _ = np.linalg.qr(b, mode="complete")
    q = q_full[:, b.shape[1]:]
    a_r = q.T @ area @ q
    e_r = q.T @ energy @ q
    return q, 0.5 * (a_r + a_r.T), 0.5 * (e_r + e_r.T)


def solve_shape(config: OptimizationConfig, keep_spectrum: bool = False) -> OptimizationResult:
    """Best area-to-energy pulse for ``config.loops`` loops on a unit-length gate.

    The returned pulse has unit peak amplitude; use :func:`scale_to_area` to
    reach a target area.
    """
    grid = make_uniform_grid(1.0, config.n)
    delta = 2.0 * math.pi * config.loops
    area_k = build_area_kernel(grid, delta, config.quad_order)
    energy_k = build_energy_kernel(grid, config.c)
    constraints = build_constraints(grid, delta)
    q, a_r, e_r = reduced_pencil(area_k.matrix, energy_k.matrix, constraints)

    try:
        chol = sla.cholesky(e_r, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError("reduced energy form is not positive definite") from exc
    # L^-1 A L^-T
    tmp = sla.solve_triangular(chol, a_r, lower=True)
    std = sla.solve_triangular(chol, tmp.T, lower=True)
    std = 0.5 * (std + std.T)
    try:
        evals, evecs = sla.eigh(std)
    except np.linalg.LinAlgError as exc:
        raise SolverError("symmetric eigensolver did not converge") from exc
    if not np.all(np.isfinite(evals)):
        raise SolverError("non-finite eigenvalues")

    mags = np.abs(evals)
    top = mags.max()
    candidates = np.flatnonzero(mags >= top * (1.0 - _DEGENERACY_RTOL))
    vecs = q @ sla.solve_triangular(chol, evecs[:, candidates], lower=True, trans="T")
    degenerate = candidates.size > 1
    if degenerate:
        stiff = build_stiffness_matrix(grid)
        norms = [v @ stiff @ v / (v @ v) for v in vecs.T]
        pick = int(np.argmin(norms))
    else:
        pick = 0
    lam = float(evals[candidates[pick]])
    vec = vecs[:, pick]

    # unit peak, positive at the peak
    vec = vec / vec[np.argmax(np.abs(vec))]
    area = float(vec @ area_k.matrix @ vec)
    energy = float(vec @ build_mass_matrix(grid) @ vec)
    orientation = 1 if area >= 0 else -1
    pulse = PulseEnvelope(grid, vec, delta, config.loops, c=config.c, orientation=orientation)
    return OptimizationResult(
        pulse=pulse,
        lambda_max=lam,
        area=area,
        energy=energy,
        shape_vector=vec.copy(),
        config=config,
        constraints=constraints,
        degenerate=degenerate,
        spectrum=evals.copy() if keep_spectrum else None,
    )


def scale_to_area(result: OptimizationResult, area_target: float) -> OptimizationResult:
    """Multiply the amplitudes by ``sqrt(area_target / |area|)``."""
    if not area_target > 0:
        raise ValueError("area_target must be positive")
    if result.area == 0.0 or not np.isfinite(result.area):
        raise ValueError("cannot scale a pulse with zero area")
    s = math.sqrt(area_target / abs(result.area))
    pulse = replace(result.pulse, omega=s * result.pulse.omega)
    return replace(
        result,
        pulse=pulse,
        area=s * s * result.area,
        energy=s * s * result.energy,
    )


def _rescale_time(result: OptimizationResult, tau: float) -> OptimizationResult:
    """Stretch a unit-length solution to duration ``tau`` keeping its area."""
    unit = result.pulse
    grid = make_uniform_grid(tau, unit.grid.n)
    pulse = PulseEnvelope(
        grid,
        unit.omega / tau,
        2.0 * math.pi * unit.loops / tau,
        unit.loops,
        c=unit.c,
        orientation=unit.orientation,
    )
    constraints = build_constraints(grid, pulse.delta)
    return replace(
        result,
        pulse=pulse,
        energy=result.energy / tau,
        constraints=constraints,
    )


def solve_gate_parameters(
    loops: int, omega_max: float, config: OptimizationConfig | None = None
) -> tuple[GateParameters, OptimizationResult]:
    """Gate time and detuning for a given peak gate Rabi rate ``omega_max`` (rad/s).

    Uses the exact scaling law ``tau = C / omega_max`` where ``C`` is the peak
    gate Rabi rate of the unit-length solution at the target area.
    """
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    if config is None:
        config = OptimizationConfig(loops=loops)
    elif config.loops != loops:
        config = replace(config, loops=loops)
    unit = scale_to_area(solve_shape(config), config.area_target)
    peak_rabi = unit.pulse.peak / CONTROL_PER_RABI
    tau = peak_rabi / omega_max
    result = _rescale_time(unit, tau)
    params = GateParameters(tau=tau, delta=result.pulse.delta, omega_max=omega_max, loops=loops)
    return params, result


def square_pulse_reference(loops: int, tau: float) -> SquareReference:
    """Constant drive ``delta / sqrt(2K)`` with energy ``2 pi^2 K / tau``."""
    if int(loops) != loops or loops < 1:
        raise ValueError("loops must be a positive integer")
    if not tau > 0:
        raise ValueError("tau must be positive")
    delta = 2.0 * math.pi * loops / tau
    omega = delta / math.sqrt(2.0 * loops)
    return SquareReference(int(loops), float(tau), omega, omega**2 * tau)


def square_pulse_at_peak(loops: int, omega_max: float) -> SquareReference:
    """Square gate whose constant gate Rabi rate equals ``omega_max``."""
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    control = CONTROL_PER_RABI * omega_max
    # omega = 2 pi K / (tau sqrt(2K))  =>  tau = 2 pi sqrt(K/2) / omega
    tau = 2.0 * math.pi * math.sqrt(loops / 2.0) / control
    return square_pulse_reference(loops, tau)


def energy_ratio(optimized: OptimizationResult, square: SquareReference) -> float:
    """Dissipated energy of the shaped gate over that of the square gate.

    Both gates must have the same number of loops and the same peak drive
    amplitude, which is how the two families are compared at a fixed maximum
    Rabi rate.
    """
    pulse = optimized.pulse
    if pulse.loops != square.loops:
        raise ValueError("loop counts differ")
    if abs(pulse.peak - abs(square.omega)) > 1e-9 * abs(square.omega):
        raise ValueError("peak amplitudes differ; use square_pulse_at_peak")
    return optimized.energy / square.energy
