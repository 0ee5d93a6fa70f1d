import math

import numpy as np
import pytest

from floqryd.calibration import (
    AomTransferModel,
    FrequencyOutOfBandError,
    InsufficientSamplesError,
    NoImprovementError,
    TargetUnreachableError,
    compensate_ram,
    drive_for_power,
    ram_spectrum,
    simulated_power,
)
from floqryd.schedules import FfmParams
from floqryd.system import from_mhz

FLAT = AomTransferModel(
    a_coeffs=(1.0,), v0_coeffs=(0.5,), sigma_coeffs=(0.6,), c_coeffs=(1.1,), band=(60.0, 160.0)
)


def sloped_model():
    # mild quadratic frequency dependence centred on the band
    fc = 110.0
    def centered(c0, c1, c2):
        return (c0 - c1 * fc + c2 * fc * fc, c1 - 2 * c2 * fc, c2)
    return AomTransferModel(
        a_coeffs=centered(1.0, 1e-3, -2e-6),
        v0_coeffs=centered(0.5, 5e-4, 1e-6),
        sigma_coeffs=centered(0.6, -2e-4, 1.5e-6),
        c_coeffs=centered(1.1, 8e-4, -1e-6),
        band=(60.0, 160.0),
    )


class TestTransferCurve:
    def test_midpoint_power(self):
        assert simulated_power(FLAT, 110.0, 0.5) == pytest.approx(1.1)

    def test_saturation(self):
        assert simulated_power(FLAT, 110.0, 50.0) == pytest.approx(2.1, abs=1e-6)

    def test_flat_model_frequency_independent(self):
        vals = {simulated_power(FLAT, f, 0.8) for f in (70.0, 110.0, 150.0)}
        assert max(vals) - min(vals) < 1e-12

    def test_out_of_band(self):
        with pytest.raises(FrequencyOutOfBandError):
            simulated_power(FLAT, 10.0, 0.5)

    def test_inverse_at_center(self):
        assert drive_for_power(FLAT, 110.0, 1.1) == pytest.approx(0.5)

    def test_round_trip_random_points(self):
        rng = np.random.default_rng(4)
        model = sloped_model()
        for _ in range(100):
            f = rng.uniform(*model.band)
            a, v0, s, c = model.params_at(f)
            target = rng.uniform(c - 0.999 * a, c + 0.999 * a)
            v = drive_for_power(model, f, target)
            assert simulated_power(model, f, v) == pytest.approx(target, abs=1e-9)

    def test_near_saturation_finite(self):
        a, v0, s, c = FLAT.params_at(110.0)
        v = drive_for_power(FLAT, 110.0, c + 0.999 * a)
        assert np.isfinite(v)

    def test_unreachable_target(self):
        with pytest.raises(TargetUnreachableError):
            drive_for_power(FLAT, 110.0, 5.0)

    def test_sigma_positivity_guard(self):
        with pytest.raises(ValueError):
            AomTransferModel((1.0,), (0.5,), (-0.1,), (1.1,), band=(60.0, 160.0))


class TestRamSpectrum:
    def trace(self, fn, omega0=from_mhz(6.0), periods=4, per=64):
        period = 2 * math.pi / omega0
        t = np.linspace(0.0, periods * period, periods * per, endpoint=False)
        return t, fn(omega0 * t)

    def test_constant_trace(self):
        t, y = self.trace(lambda ph: np.ones_like(ph))
        spec = ram_spectrum(t, y, from_mhz(6.0))
        assert all(abs(a) < 1e-12 and abs(b) < 1e-12 for _, a, b in spec.harmonics)
        assert spec.peak_to_peak_fraction == pytest.approx(0.0, abs=1e-12)

    def test_single_cosine_harmonic(self):
        t, y = self.trace(lambda ph: 1.0 + 0.1 * np.cos(ph))
        spec = ram_spectrum(t, y, from_mhz(6.0))
        n, a1, b1 = spec.harmonics[0]
        assert b1 == pytest.approx(0.1, abs=1e-6)
        assert abs(a1) < 1e-9
        assert spec.peak_to_peak_fraction == pytest.approx(0.1, abs=1e-3)

    def test_projection_identity_multi_harmonic(self):
        coeffs = [(0.03, -0.05), (0.0, 0.02), (-0.01, 0.0), (0.005, 0.004)]
        def fn(ph):
            out = np.ones_like(ph)
            for n, (a, b) in enumerate(coeffs, start=1):
                out += a * np.sin(n * ph) + b * np.cos(n * ph)
            return out
        t, y = self.trace(fn)
        spec = ram_spectrum(t, y, from_mhz(6.0))
        for (n, a, b), (a_true, b_true) in zip(spec.harmonics, coeffs):
            assert a == pytest.approx(a_true, abs=1e-6)
            assert b == pytest.approx(b_true, abs=1e-6)

    def test_too_few_periods(self):
        omega0 = from_mhz(6.0)
        period = 2 * math.pi / omega0
        t = np.linspace(0, 2 * period, 128, endpoint=False)
        with pytest.raises(InsufficientSamplesError):
            ram_spectrum(t, np.ones_like(t), omega0)

    def test_too_few_samples_per_period(self):
        omega0 = from_mhz(6.0)
        period = 2 * math.pi / omega0
        t = np.linspace(0, 8 * period, 8 * 16, endpoint=False)
        with pytest.raises(InsufficientSamplesError):
            ram_spectrum(t, np.ones_like(t), omega0)


class TestCompensation:
    def test_flat_model_is_already_compensated(self):
        ffm = FfmParams.from_alpha(5.5, from_mhz(6.0))
        with pytest.raises(NoImprovementError):
            compensate_ram(FLAT, ffm)

    def test_cancels_first_harmonic_cosine_ripple(self):
        # a 10% synchronous cosine power ripple must compress below 1%
        ffm = FfmParams.from_alpha(5.5, from_mhz(6.0))
        coeffs, spec = compensate_ram(FLAT, ffm, disturbance=((0.0, 0.10),))
        assert spec.peak_to_peak_fraction < 0.01
        # the correction is dominated by the matching cosine quadrature
        assert abs(coeffs[1]) > abs(coeffs[0])

    def test_objective_monotone(self):
        ffm = FfmParams.from_alpha(4.0, from_mhz(6.0))
        seen = []
        compensate_ram(sloped_model(), ffm, disturbance=((0.02, 0.05),), on_accept=seen.append)
        assert len(seen) >= 2
        assert all(b <= a + 1e-15 for a, b in zip(seen, seen[1:]))

    def test_sweep_must_stay_in_band(self):
        ffm = FfmParams.from_alpha(12.0, from_mhz(6.0))  # 72 MHz sweep
        with pytest.raises(FrequencyOutOfBandError):
            compensate_ram(FLAT, ffm)
