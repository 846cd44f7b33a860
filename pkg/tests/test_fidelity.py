import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mspulse.fidelity import (
    CutoffLeakageError,
    FidelityConfig,
    FidelityReport,
    analytic_fidelity,
    compare_square_vs_optimized,
    fock_cutoff_for,
    fock_oracle_fidelity,
    thermal_weights,
)
from mspulse.grid import PulseEnvelope
from mspulse.phase_space import ErrorConfig, square_pulse

from conftest import OMEGA_MS

TWO_PI = 2 * math.pi
NBARS = (0.0, 0.4, 1.0)


def quarter_area_square(loops=2, tau=1e-3):
    """Closed constant-drive loop enclosing pi/4 in total."""
    delta = TWO_PI * loops / tau
    return square_pulse(loops, tau, delta / (2 * math.sqrt(loops)))


class TestThermalWeights:
    def test_ground_state(self):
        assert np.array_equal(thermal_weights(0.0), [1.0])

    @pytest.mark.parametrize("nbar", [0.1, 0.4, 1.0, 3.0])
    def test_geometric_distribution(self, nbar):
        w = thermal_weights(nbar)
        assert w.sum() == pytest.approx(1.0, abs=1e-15)
        ratio = nbar / (nbar + 1)
        np.testing.assert_allclose(w[1:] / w[:-1], ratio, rtol=1e-12)
        assert np.dot(np.arange(w.size), w) == pytest.approx(nbar, rel=1e-8)
        # truncated at 1 - 1e-10 of the untruncated mass
        assert ratio ** w.size <= 1e-10 < ratio ** (w.size - 1)

    def test_default_cutoff_grows_with_nbar(self):
        assert fock_cutoff_for(FidelityConfig(nbar=0.0)) == 60
        assert fock_cutoff_for(FidelityConfig(nbar=3.0)) > thermal_weights(3.0).size
        assert fock_cutoff_for(FidelityConfig(fock_cutoff=80)) == 80


class TestAnalytic:
    @pytest.mark.parametrize("nbar", NBARS)
    def test_ideal_optimized_pulse(self, pulse3, nbar):
        rep = analytic_fidelity(pulse3, FidelityConfig(nbar=nbar))
        assert rep.fidelity == pytest.approx(1.0, abs=1e-9)
        assert rep.geometric_phase == pytest.approx(pulse3.orientation * math.pi / 2, abs=1e-9)
        assert rep.residual_displacement <= 1e-8 * pulse3.peak * pulse3.tau
        assert rep.breakdown["method"] == "analytic"

    @pytest.mark.parametrize("nbar", NBARS)
    def test_ideal_square_pulse(self, square3, nbar):
        assert analytic_fidelity(square3, FidelityConfig(nbar=nbar)).fidelity == pytest.approx(1.0, abs=1e-9)

    def test_half_phase_closed_form(self):
        # exp(i Phi S^2)|00> = e^{i Phi/2}(cos(Phi/2)|00> + i sin(Phi/2)|11>) with |Phi| = pi/4
        rep = analytic_fidelity(quarter_area_square())
        assert rep.fidelity == pytest.approx((1 + math.sin(math.pi / 4)) / 2, abs=1e-12)

    def test_zero_pulse(self, pulse3):
        zero = PulseEnvelope(pulse3.grid, np.zeros(pulse3.grid.n), pulse3.delta, pulse3.loops, orientation=-1)
        assert analytic_fidelity(zero).fidelity == pytest.approx(0.5, abs=1e-15)

    def test_target_follows_declared_orientation(self, pulse3):
        # time reversal keeps the loop orientation, so the sign is intrinsic to the shape;
        # declaring the other orientation selects the orthogonal conjugate Bell state
        reversed_pulse = PulseEnvelope(pulse3.grid, pulse3.omega[::-1], pulse3.delta, pulse3.loops, orientation=pulse3.orientation)
        assert analytic_fidelity(reversed_pulse).fidelity == pytest.approx(1.0, abs=1e-9)
        wrong = PulseEnvelope(pulse3.grid, pulse3.omega, pulse3.delta, pulse3.loops, orientation=-pulse3.orientation)
        assert analytic_fidelity(wrong).fidelity == pytest.approx(0.0, abs=1e-9)

    def test_monotone_in_offset(self, pulse3, square3):
        offsets = np.arange(0.0, 50.5, 1.0)
        for pulse in (pulse3, square3):
            for sign in (1, -1):
                fids = [
                    analytic_fidelity(pulse, FidelityConfig(nbar=0.4, err=ErrorConfig(detuning_offset=sign * TWO_PI * f))).fidelity
                    for f in offsets
                ]
                assert np.all(np.diff(fids) <= 1e-9)

    def test_thermal_sensitivity(self, pulse3):
        err = ErrorConfig(detuning_offset=TWO_PI * 20)
        infid = [analytic_fidelity(pulse3, FidelityConfig(nbar=n, err=err)).infidelity for n in NBARS]
        assert infid[0] < infid[1] < infid[2]
        ideal = [analytic_fidelity(pulse3, FidelityConfig(nbar=n)).fidelity for n in NBARS]
        assert max(ideal) - min(ideal) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(
        scale=st.floats(0.0, 3.0),
        offset_hz=st.floats(-500.0, 500.0),
        chirp=st.floats(-2.0, 2.0),
        nbar=st.floats(0.0, 5.0),
    )
    def test_bounded(self, pulse3, scale, offset_hz, chirp, nbar):
        pulse = PulseEnvelope(pulse3.grid, scale * pulse3.omega, pulse3.delta, pulse3.loops, orientation=-1)
        err = ErrorConfig(detuning_offset=TWO_PI * offset_hz, chirp_rate=chirp)
        rep = analytic_fidelity(pulse, FidelityConfig(nbar=nbar, err=err))
        assert 0.0 <= rep.fidelity <= 1.0


class TestFockOracle:
    def test_quarter_area_square_matches_analytic(self):
        pulse = quarter_area_square()
        cfg = FidelityConfig(nbar=0.0)
        fock = fock_oracle_fidelity(pulse, cfg)
        assert fock.fidelity == pytest.approx(analytic_fidelity(pulse, cfg).fidelity, abs=1e-6)
        assert fock.breakdown["cutoff_population"] < 1e-8

    def test_chirped_optimized_matches_analytic(self, pulse3):
        cfg = FidelityConfig(nbar=0.4, err=ErrorConfig(chirp_rate=0.3))
        fock = fock_oracle_fidelity(pulse3, cfg)
        ana = analytic_fidelity(pulse3, cfg)
        assert fock.fidelity == pytest.approx(ana.fidelity, abs=1e-4)
        assert fock.residual_displacement == pytest.approx(ana.residual_displacement, rel=1e-6)

    def test_zero_pulse(self, pulse3):
        zero = PulseEnvelope(pulse3.grid, np.zeros(pulse3.grid.n), pulse3.delta, pulse3.loops, orientation=-1)
        assert fock_oracle_fidelity(zero).fidelity == pytest.approx(0.5, abs=1e-12)

    def test_ideal_pulse(self, pulse3):
        rep = fock_oracle_fidelity(pulse3)
        assert rep.fidelity == pytest.approx(1.0, abs=1e-7)
        assert rep.geometric_phase == pytest.approx(pulse3.orientation * math.pi / 2, abs=1e-7)
        assert rep.breakdown["method"] == "fock"

    def test_leakage_detected(self):
        tau = 1e-3
        big = square_pulse(1, tau, 6 * TWO_PI / tau)
        with pytest.raises(CutoffLeakageError):
            fock_oracle_fidelity(big, FidelityConfig(fock_cutoff=20))

    def test_cutoff_too_small_for_nbar(self, pulse3):
        with pytest.raises(ValueError):
            fock_oracle_fidelity(pulse3, FidelityConfig(nbar=1.0, fock_cutoff=30))


class TestCompare:
    def test_zero_error(self):
        opt, sq = compare_square_vs_optimized(3, OMEGA_MS)
        assert opt.fidelity == pytest.approx(1.0, abs=1e-9)
        assert sq.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_chirp_ordering(self):
        cfg = FidelityConfig(nbar=0.4, err=ErrorConfig(chirp_rate=0.3))
        opt, sq = compare_square_vs_optimized(3, OMEGA_MS, cfg)
        assert opt.fidelity > sq.fidelity

    def test_detuning_ratio(self):
        cfg = FidelityConfig(nbar=0.4, err=ErrorConfig(detuning_offset=TWO_PI * 20))
        opt, sq = compare_square_vs_optimized(3, OMEGA_MS, cfg)
        assert opt.infidelity < 0.25 * sq.infidelity


class TestValidation:
    def test_negative_nbar(self):
        with pytest.raises(ValueError):
            FidelityConfig(nbar=-0.1)

    def test_report_bounds(self):
        with pytest.raises(ValueError):
            FidelityReport(1.5, 0.0, 0.0)
        assert FidelityReport(-1e-13, 0.0, 0.0).fidelity == 0.0
        assert FidelityReport(1.0 + 1e-13, 0.0, 0.0).infidelity == 0.0
