"""
Bell-state fidelity on a thermal mode
=====================================

Turn residual displacement and phase errors into gate fidelities, and check
the closed-form result against brute-force integration in a truncated
number basis.
"""

import math

from mspulse import (
    ErrorConfig,
    FidelityConfig,
    analytic_fidelity,
    compare_square_vs_optimized,
    fock_oracle_fidelity,
    solve_gate_parameters,
)

omega_max = 2 * math.pi * 1180.0

# coherent errors only, mean phonon number 0.4
for label, err in (
    ("no error", ErrorConfig()),
    ("20 Hz offset", ErrorConfig(detuning_offset=2 * math.pi * 20)),
    ("0.3 Hz/us chirp", ErrorConfig(chirp_rate=0.3)),
):
    opt, sq = compare_square_vs_optimized(3, omega_max, FidelityConfig(nbar=0.4, err=err))
    print(f"{label:16s} optimized {opt.fidelity:.6f}   square {sq.fidelity:.6f}")

# the analytic formula against the number-basis integrator
_, result = solve_gate_parameters(3, omega_max)
cfg = FidelityConfig(nbar=0.4, err=ErrorConfig(chirp_rate=0.3))
exact = analytic_fidelity(result.pulse, cfg)
brute = fock_oracle_fidelity(result.pulse, cfg)
print(f"analytic {exact.fidelity:.10f}")
print(f"Fock     {brute.fidelity:.10f}  ({brute.breakdown['substeps']} RK4 steps per segment)")
