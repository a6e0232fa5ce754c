import math

import numpy as np
import pytest

from cavnoise.errors import (
    InvalidParameter,
    NegativeRate,
    NonPositiveInputCoupling,
    OutsideTabulatedRange,
    UncertaintyViolation,
)
from cavnoise.model import (
    CavityParams,
    ConstantSpectrum,
    DetectorParams,
    DriveField,
    MechanicalResponse,
    OscillatorTransfer,
    RationalMagnitudeSpectrum,
    SteadyState,
    TabulatedSpectrum,
    steady_state,
    validate_cavity,
)


class TestValidateCavity:
    def test_symmetric_lossless(self):
        cav = validate_cavity(0.5, 0.5, 0.0)
        assert cav.kappa == 1.0
        assert cav.is_impedance_matched

    def test_lossy_benchmark_cavity(self):
        cav = validate_cavity(4.9, 4.9, 1.0)
        assert cav.kappa == pytest.approx(10.8, abs=1e-15)
        assert not cav.is_impedance_matched

    def test_undrivable_cavity_rejected(self):
        with pytest.raises(NonPositiveInputCoupling):
            validate_cavity(0.0, 0.5, 0.0)
        with pytest.raises(NonPositiveInputCoupling):
            validate_cavity(-1.0, 0.5, 0.0)

    def test_negative_rates_rejected(self):
        with pytest.raises(NegativeRate):
            validate_cavity(0.5, -0.1, 0.0)
        with pytest.raises(NegativeRate):
            validate_cavity(0.5, 0.0, -0.1)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidParameter):
            validate_cavity(math.nan, 0.5, 0.0)
        with pytest.raises(InvalidParameter):
            validate_cavity(0.5, math.inf, 0.0)

    def test_construction_idempotent(self):
        cav = validate_cavity(1.2, 3.4, 0.7)
        again = CavityParams(cav.kappa_in, cav.kappa_out, cav.kappa_loss)
        assert again == cav
        assert again.kappa == cav.kappa

    def test_matched_requires_zero_loss(self):
        assert not validate_cavity(0.5, 0.5, 1e-9).is_impedance_matched
        assert not validate_cavity(0.5, 0.4, 0.0).is_impedance_matched


class TestSteadyState:
    def test_unit_case(self):
        cav = validate_cavity(0.5, 0.5, 0.0)
        assert steady_state(cav, DriveField.coherent(1.0)).alpha == pytest.approx(1.0)

    def test_asymmetric_case_against_balance_residual(self):
        cav = validate_cavity(1.0, 0.5, 0.5)
        drive = DriveField.coherent(2.0)
        ss = steady_state(cav, drive)
        assert ss.alpha == pytest.approx(math.sqrt(2.0), rel=1e-12)
        # independent check: the drift must balance at the steady amplitude
        residual = -cav.kappa * ss.alpha + math.sqrt(2 * cav.kappa_in) * drive.amplitude
        assert abs(residual) < 1e-12

    def test_zero_drive(self):
        cav = validate_cavity(2.0, 1.0, 0.3)
        assert steady_state(cav, DriveField.coherent(0.0)).alpha == 0.0

    def test_alpha_scales_as_inverse_sqrt_of_rate_scaling(self):
        cav = validate_cavity(0.7, 0.4, 0.2)
        drive = DriveField.coherent(3.0)
        a1 = steady_state(cav, drive).alpha
        s = 16.0
        scaled = validate_cavity(0.7 * s, 0.4 * s, 0.2 * s)
        a2 = steady_state(scaled, drive).alpha
        assert a2 == pytest.approx(a1 / math.sqrt(s), rel=1e-12)

    def test_negative_alpha_rejected(self):
        with pytest.raises(InvalidParameter):
            SteadyState(-0.5)


class TestDriveField:
    def test_coherent_is_vacuum_limited(self):
        d = DriveField.coherent(1.0)
        om = np.array([0.0, 1.0, 10.0])
        assert np.all(d.amp_noise_at(om) == 1.0)
        assert np.all(d.phase_noise_at(om) == 1.0)

    def test_floats_coerced_to_constant_spectra(self):
        d = DriveField(1.0, 2.5, 0.5)
        assert isinstance(d.amp_noise, ConstantSpectrum)
        assert d.amp_noise.value == 2.5

    def test_uncertainty_product_enforced(self):
        with pytest.raises(UncertaintyViolation):
            DriveField(1.0, 0.5, 1.0)
        # minimum-uncertainty squeezed drive is allowed
        DriveField(1.0, 0.5, 2.0)

    def test_uncertainty_checked_on_tabulated_grid(self):
        noisy = TabulatedSpectrum(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.25, 1.0]))
        with pytest.raises(UncertaintyViolation):
            DriveField(1.0, noisy, 1.0)
        DriveField(1.0, noisy, 4.0)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(InvalidParameter):
            DriveField(-1.0)


class TestSpectra:
    def test_tabulated_interpolates_linearly(self):
        sp = TabulatedSpectrum(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
        assert sp.at(np.array([1.0]))[0] == pytest.approx(2.0)

    def test_tabulated_rejects_extrapolation(self):
        sp = TabulatedSpectrum(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        with pytest.raises(OutsideTabulatedRange):
            sp.at(np.array([0.5]))
        with pytest.raises(OutsideTabulatedRange):
            sp.at(np.array([2.5]))

    def test_tabulated_requires_increasing_grid(self):
        with pytest.raises(InvalidParameter):
            TabulatedSpectrum(np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 1.0]))

    def test_tabulated_rejects_negative_values(self):
        with pytest.raises(InvalidParameter):
            TabulatedSpectrum(np.array([0.0, 1.0]), np.array([1.0, -0.5]))

    def test_constant_rejects_negative(self):
        with pytest.raises(InvalidParameter):
            ConstantSpectrum(-1.0)

    def test_rational_magnitude_is_nonnegative(self):
        sp = RationalMagnitudeSpectrum(2.0, zeros=(-1.0,), poles=(-3.0, -4.0))
        om = np.linspace(0, 50, 101)
        vals = sp.at(om)
        assert np.all(vals >= 0)
        # |2 * (i*0 + 1)/((i*0 + 3)(i*0 + 4))|^2 at DC
        assert vals[0] == pytest.approx((2.0 * 1.0 / 12.0) ** 2)


class TestMechanicalResponse:
    def test_constant_transfer(self):
        mech = MechanicalResponse.constant(0.7, thermal=0.2)
        om = np.array([0.0, 5.0])
        assert np.all(mech.transfer_at(om) == 0.7)
        assert np.all(mech.thermal_at(om) == 0.2)

    def test_oscillator_resonance_height(self):
        coupling, wm, q = 1.0, 0.1, 10.0
        mech = MechanicalResponse.harmonic_oscillator(coupling, wm, q)
        assert mech.transfer_at(np.array([wm]))[0] == pytest.approx(
            coupling * q**2 / wm**4, rel=1e-12
        )
        # far above resonance the transfer rolls off
        assert mech.transfer_at(np.array([10 * wm]))[0] < mech.transfer_at(np.array([wm]))[0]

    def test_oscillator_validation(self):
        with pytest.raises(InvalidParameter):
            OscillatorTransfer(1.0, -0.1, 10.0)
        with pytest.raises(InvalidParameter):
            OscillatorTransfer(1.0, 0.1, 0.0)
        with pytest.raises(InvalidParameter):
            OscillatorTransfer(-1.0, 0.1, 1.0)

    def test_tabulated_variant_with_tabulated_thermal(self):
        mech = MechanicalResponse.tabulated(
            [0.0, 1.0, 2.0], [1.0, 0.5, 0.2],
            thermal=([0.0, 2.0], [0.3, 0.1]),
        )
        assert mech.transfer_at(np.array([0.5]))[0] == pytest.approx(0.75)
        assert mech.thermal_at(np.array([1.0]))[0] == pytest.approx(0.2)


class TestDetectorParams:
    def test_bounds(self):
        DetectorParams(1.0)
        DetectorParams(0.91)
        with pytest.raises(InvalidParameter):
            DetectorParams(0.0)
        with pytest.raises(InvalidParameter):
            DetectorParams(1.2)
