"""Bell-state fidelity of a Molmer-Sorensen pulse on a thermal mode.

The interaction ``H(t) = Omega_MS(t) * S * (i e^{-i theta} a^dag + h.c.)`` with
``S = (X_1 + X_2) / 2`` commutes with itself up to c-numbers times ``S^2``,
so every eigenvalue branch ``m`` of ``S`` evolves as

    U_m = D(m beta) exp(i m^2 Phi),

where ``beta = (q - i p) / sqrt(2)`` is the coherent amplitude for the
phase-space endpoint ``(q, p)`` and ``Phi = (1/2) int (p dq - q dp)`` the
enclosed area.  :func:`analytic_fidelity` uses this closed form;
:func:`fock_oracle_fidelity` integrates the Schrodinger equation in a
truncated number basis instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .optimize import CONTROL_PER_RABI, OptimizationConfig, solve_gate_parameters
from .phase_space import NO_ERROR, ErrorConfig, _breakpoints, endpoint, square_pulse

__all__ = [
    "FidelityConfig",
    "FidelityReport",
    "CutoffLeakageError",
    "analytic_fidelity",
    "fock_oracle_fidelity",
    "compare_square_vs_optimized",
    "thermal_weights",
    "fock_cutoff_for",
]

_THERMAL_TAIL = 1e-10
_LEAKAGE_LIMIT = 1e-8
_STEP_TOL = 1e-8
_MIN_CUTOFF = 60
_CUTOFF_HEADROOM = 30


class CutoffLeakageError(RuntimeError):
    """Population reached the top of the truncated number basis."""


@dataclass(frozen=True)
class FidelityConfig:
    nbar: float = 0.0
    err: ErrorConfig = NO_ERROR
    fock_cutoff: int | None = None

    def __post_init__(self):
        if not self.nbar >= 0:
            raise ValueError("nbar must be non-negative")
        if self.fock_cutoff is not None and self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    residual_displacement: float
    geometric_phase: float
    breakdown: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (-1e-12 <= self.fidelity <= 1.0 + 1e-12):
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")
        object.__setattr__(self, "fidelity", min(max(self.fidelity, 0.0), 1.0))

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


# two-qubit spin algebra in the computational basis |q1 q2>
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_I2 = np.eye(2)
_S = 0.5 * (np.kron(_X, _I2) + np.kron(_I2, _X))
_XX = np.kron(_X, _X)
_BRANCHES = (1, 0, -1)
_PROJECTORS = {}
for _m in _BRANCHES:
    _w, _v = np.linalg.eigh(_S)
    _sel = _v[:, np.isclose(_w, _m)]
    _PROJECTORS[_m] = _sel @ _sel.T
_PSI0 = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)


def _target(orientation: int) -> np.ndarray:
    """``exp(i orientation pi/4 X X)|00>``, i.e. (|00> + i orientation |11>)/sqrt(2)."""
    t = np.zeros(4, dtype=complex)
    t[0] = 1.0
    t[3] = 1j * orientation
    return t / math.sqrt(2.0)


def _branch_amplitudes(orientation: int) -> dict:
    target = _target(orientation)
    return {m: complex(np.vdot(target, _PROJECTORS[m] @ _PSI0)) for m in _BRANCHES}


def _fidelity_from_overlaps(orientation: int, overlap) -> float:
    """``sum a_m conj(a_m') Tr[U_m rho U_m'^dag]`` over spin branches."""
    amps = _branch_amplitudes(orientation)
    total = 0.0j
    for m in _BRANCHES:
        for mp in _BRANCHES:
            coeff = amps[m] * np.conj(amps[mp])
            if coeff != 0:
                total += coeff * overlap(m, mp)
    return float(total.real)


def _nominal_orientation(pulse) -> int:
    orient = getattr(pulse, "orientation", None)
    if orient in (1, -1):
        return orient
    _, area = endpoint(pulse)
    return -1 if area < 0 else 1


def analytic_fidelity(pulse, config: FidelityConfig = FidelityConfig()) -> FidelityReport:
    """Closed-form Bell-state fidelity from the endpoint and enclosed area."""
    orientation = _nominal_orientation(pulse)
    alpha, area = endpoint(pulse, config.err)
    phi = area - 0.5 * alpha.real * alpha.imag
    beta_abs = abs(alpha) / CONTROL_PER_RABI
    width = config.nbar + 0.5

    def overlap(m, mp):
        dm = m - mp
        return np.exp(1j * (m * m - mp * mp) * phi) * math.exp(-(dm * beta_abs) ** 2 * width)

    fid = _fidelity_from_overlaps(orientation, overlap)
    ideal = orientation * math.pi / 2
    return FidelityReport(
        fidelity=fid,
        residual_displacement=abs(alpha),
        geometric_phase=phi,
        breakdown={
            "method": "analytic",
            "orientation": orientation,
            "phase_error": phi - ideal,
            "coherent_amplitude": beta_abs,
            "nbar": config.nbar,
        },
    )


def thermal_weights(nbar: float, tail: float = _THERMAL_TAIL) -> np.ndarray:
    """Geometric occupation probabilities, truncated once ``1 - tail`` is covered."""
    if nbar == 0:
        return np.array([1.0])
    ratio = nbar / (nbar + 1.0)
    weights = []
    total = 0.0
    k = 0
    while total < 1.0 - tail:
        w = (1.0 - ratio) * ratio**k
        weights.append(w)
        total += w
        k += 1
    w = np.array(weights)
    return w / w.sum()


def _rk4_branches(times, values, phase, n_cols, cutoff, substeps):
    """Evolve number states 0..n_cols-1 under branches m = +1 and -1 together.

    Returns ``{1: psi_plus, -1: psi_minus}``, each of shape (cutoff, n_cols).
    """
    sqrt_n = np.sqrt(np.arange(1, cutoff))[:, None]
    psi = np.zeros((cutoff, 2 * n_cols), dtype=complex)
    idx = np.arange(n_cols)
    psi[idx, idx] = 1.0
    psi[idx, n_cols + idx] = 1.0
    scale = np.concatenate((np.full(n_cols, 1.0), np.full(n_cols, -1.0))) / CONTROL_PER_RABI

    def rhs(y, g, amp):
        # -i H y with H = m amp (g a^dag + conj(g) a) / sqrt(2), g = i e^{-i theta}
        out = np.empty_like(y)
        out[0] = 0.0
        out[1:] = g * sqrt_n * y[:-1]
        out[:-1] += np.conj(g) * sqrt_n * y[1:]
        out *= -1j * amp * scale
        return out

    for k in range(times.size - 1):
        t0, t1 = times[k], times[k + 1]
        v0, v1 = values[k], values[k + 1]
        dt = (t1 - t0) / substeps
        slope = (v1 - v0) / (t1 - t0)
        tj = t0 + dt * np.arange(2 * substeps + 1) / 2.0
        g = 1j * np.exp(-1j * np.array([phase(t) for t in tj]))
        amp = v0 + slope * (tj - t0)
        for j in range(substeps):
            i0 = 2 * j
            k1 = rhs(psi, g[i0], amp[i0])
            k2 = rhs(psi + 0.5 * dt * k1, g[i0 + 1], amp[i0 + 1])
            k3 = rhs(psi + 0.5 * dt * k2, g[i0 + 1], amp[i0 + 1])
            k4 = rhs(psi + dt * k3, g[i0 + 2], amp[i0 + 2])
            psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return {1: psi[:, :n_cols], -1: psi[:, n_cols:]}


def _fock_run(pulse, config, weights, cutoff, substeps):
    times, values = _breakpoints(pulse, config.err)
    delta = pulse.delta

    def phase(t):
        return float(config.err.phase(delta, t))

    n_cols = weights.size
    evolved = _rk4_branches(times, values, phase, n_cols, cutoff, substeps)
    diag = np.arange(n_cols)

    def column_overlap(m, mp):
        # Tr[U_m rho U_mp^dag] = sum_n w_n <U_mp n | U_m n>
        if m == 0 and mp == 0:
            return 1.0 + 0.0j
        if m == 0:
            return complex(np.sum(weights * np.conj(evolved[mp][diag, diag])))
        if mp == 0:
            return complex(np.sum(weights * evolved[m][diag, diag]))
        return complex(np.sum(weights * np.einsum("ij,ij->j", np.conj(evolved[mp]), evolved[m])))

    # thermal-weighted population of the highest retained level
    leakage = max(float(np.dot(weights, np.abs(evolved[m][-1]) ** 2)) for m in (1, -1))
    return column_overlap, evolved, leakage


def fock_cutoff_for(config: FidelityConfig) -> int:
    """Number-basis size used by the oracle: the configured one, or enough for the thermal tail."""
    if config.fock_cutoff is not None:
        return config.fock_cutoff
    return max(_MIN_CUTOFF, thermal_weights(config.nbar).size + _CUTOFF_HEADROOM)


def fock_oracle_fidelity(
    pulse, config: FidelityConfig = FidelityConfig(), substeps: int | None = None, max_refinements: int = 8
) -> FidelityReport:
    """Bell-state fidelity by direct RK4 integration in a truncated number basis.

    The number of RK4 steps per pulse segment is doubled until the fidelity
    changes by less than ``1e-8``.
    """
    cutoff = fock_cutoff_for(config)
    weights = thermal_weights(config.nbar)
    if cutoff < 20 * (config.nbar + 1.0) or weights.size + _CUTOFF_HEADROOM // 2 > cutoff:
        raise ValueError(f"fock_cutoff={cutoff} too small for nbar={config.nbar}")
    orientation = _nominal_orientation(pulse)

    if substeps is None:
        times, values = _breakpoints(pulse, config.err)
        # keep |H| dt below ~0.05 on the largest occupied level
        h_norm = np.max(np.abs(values)) / CONTROL_PER_RABI * 2.0 * math.sqrt(cutoff)
        seg = np.max(np.diff(times))
        phase_rate = abs(pulse.delta) + abs(config.err.detuning_offset) + abs(
            config.err.chirp_rate_si * min(config.err.chirp_duration, pulse.tau)
        )
        substeps = max(2, int(math.ceil(seg * max(h_norm, phase_rate) / 0.05)))

    previous = None
    for _ in range(max_refinements):
        overlap, evolved, leakage = _fock_run(pulse, config, weights, cutoff, substeps)
        fid = _fidelity_from_overlaps(orientation, overlap)
        if previous is not None and abs(fid - previous) < _STEP_TOL:
            break
        previous = fid
        substeps *= 2
    else:
        raise RuntimeError("RK4 step refinement did not converge")
    if leakage > _LEAKAGE_LIMIT:
        raise CutoffLeakageError(
            f"population {leakage:.2e} at the number-basis cutoff {cutoff}"
        )

    # vacuum column of branch +1: <a> = beta, <0|U|0> = exp(-|beta|^2/2) e^{i Phi}
    vac = evolved[1][:, 0]
    a_mean = np.vdot(vac[:-1], np.sqrt(np.arange(1, cutoff)) * vac[1:])
    return FidelityReport(
        fidelity=fid,
        residual_displacement=float(abs(a_mean) * CONTROL_PER_RABI),
        geometric_phase=float(np.angle(vac[0])),
        breakdown={
            "method": "fock",
            "orientation": orientation,
            "substeps": substeps,
            "cutoff_population": leakage,
            "thermal_levels": int(weights.size),
            "cutoff": cutoff,
            "nbar": config.nbar,
        },
    )


def compare_square_vs_optimized(
    loops: int,
    omega_max: float,
    config: FidelityConfig = FidelityConfig(),
    opt_config: OptimizationConfig | None = None,
):
    """Fidelities of the optimized gate and a square gate with the same ``tau`` and ``delta``.

    Returns ``(optimized_report, square_report)``.
    """
    _, result = solve_gate_parameters(loops, omega_max, opt_config)
    shaped = result.pulse
    square = square_pulse(loops, shaped.tau)
    return analytic_fidelity(shaped, config), analytic_fidelity(square, config)
