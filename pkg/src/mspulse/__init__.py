"""Amplitude-modulated pulse synthesis for Molmer-Sorensen gates.

The optimal envelope maximizes the enclosed phase-space area per unit of
(derivative-penalized) energy, subject to loop closure that is insensitive
to first order in the detuning.

>>> from mspulse import solve_gate_parameters
>>> import math
>>> params, result = solve_gate_parameters(3, 2 * math.pi * 1180.0)
>>> round(params.tau * 1e6)
999
"""
from .grid import (
    PulseEnvelope,
    TimeGrid,
    evaluate_pulse,
    hat_functions,
    make_uniform_grid,
    segment_trig_moments,
)
from .kernels import (
    ConstraintSet,
    KernelKind,
    QuadraticKernel,
    build_area_kernel,
    build_constraints,
    build_energy_kernel,
    project_kernel,
)
from .optimize import (
    CONTROL_PER_RABI,
    GateParameters,
    OptimizationConfig,
    OptimizationResult,
    SolverError,
    SquareReference,
    energy_ratio,
    scale_to_area,
    solve_gate_parameters,
    solve_shape,
    square_pulse_at_peak,
    square_pulse_reference,
)
from .phase_space import (
    ErrorConfig,
    SquarePulse,
    Trajectory,
    chirp_response,
    detuning_sweep,
    endpoint,
    integrate_trajectory,
    shoelace_area,
    square_pulse,
)
from .fidelity import (
    FidelityConfig,
    FidelityReport,
    analytic_fidelity,
    compare_square_vs_optimized,
    fock_oracle_fidelity,
)

__version__ = "0.1.0"
