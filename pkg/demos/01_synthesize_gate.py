"""
Synthesizing an energy-optimal gate pulse
=========================================

Solve for the three-loop pulse at a peak gate Rabi rate of 1.18 kHz, look
at its shape and phase-space loop, and compare its energy with a square gate
of the same peak.
"""

import math

import numpy as np

from mspulse import (
    CONTROL_PER_RABI,
    integrate_trajectory,
    solve_gate_parameters,
    square_pulse_at_peak,
    energy_ratio,
)

omega_max = 2 * math.pi * 1180.0
params, result = solve_gate_parameters(3, omega_max)
pulse = result.pulse

print(f"gate time        {params.tau * 1e6:8.1f} us")
print(f"detuning / 2pi   {params.delta / (2 * math.pi) / 1e3:8.4f} kHz")
print(f"loop orientation {pulse.orientation:+d}")

# the shape: gate Rabi rate in kHz at a handful of times
t = np.linspace(0, pulse.tau, 11)
rabi_khz = pulse(t) / CONTROL_PER_RABI / (2 * math.pi) / 1e3
for ti, wi in zip(t, rabi_khz):
    print(f"  t = {ti * 1e6:7.1f} us   Omega/2pi = {wi:+.3f} kHz")

# the loop closes and encloses pi/2
traj = integrate_trajectory(pulse)
print(f"closure residual {traj.closure_residual:.2e}")
print(f"enclosed area    {traj.area:+.10f}  (pi/2 = {math.pi / 2:.10f})")

# same peak Rabi rate, constant amplitude
square = square_pulse_at_peak(3, omega_max)
print(f"square gate time {square.tau * 1e6:8.1f} us")
print(f"energy ratio     {energy_ratio(result, square):.3f}")
