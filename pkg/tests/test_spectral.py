import math
import warnings

import numpy as np
import pytest

from msidesign import (
    GaussianBand,
    SensorModel,
    SpectralCurve,
    band_transmittance,
    mixing_coefficient,
    mixing_coefficients,
    normalize_sensor,
)
from msidesign.errors import AllZeroSensorError, BandOutsideRangeWarning

from conftest import constant_sensor
from oracles import simpson_mixing

GAUSS_UNIT_AREA = 10.644670194312262  # sigma*sqrt(2pi) for FWHM 10, frozen
# Simpson (0.01 nm) overlap of the 0.5 nm digitized triangle channel with a
# Gaussian band on its peak; frozen from the oracle run.
TRIANGLE_PEAK_OVERLAP = 10.193827994034224


class TestSpectralCurve:
    def test_basic_construction(self):
        c = SpectralCurve([400.0, 500.0, 600.0], [0.0, 1.0, 0.5], "g")
        assert c.label == "g"
        assert c.range_nm == (400.0, 600.0)

    def test_rejects_decreasing_grid(self):
        with pytest.raises(ValueError, match="increasing"):
            SpectralCurve([500.0, 400.0], [1.0, 1.0])

    def test_rejects_duplicate_grid_points(self):
        with pytest.raises(ValueError, match="increasing"):
            SpectralCurve([400.0, 400.0, 500.0], [1.0, 1.0, 1.0])

    def test_rejects_short_grid(self):
        with pytest.raises(ValueError, match="at least 2"):
            SpectralCurve([400.0], [1.0])

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError, match=">= 0"):
            SpectralCurve([400.0, 500.0], [1.0, -0.1])

    def test_rejects_nonfinite_values(self):
        with pytest.raises(ValueError, match="finite"):
            SpectralCurve([400.0, 500.0], [1.0, np.nan])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            SpectralCurve([400.0, 500.0], [1.0, 1.0, 1.0])

    def test_arrays_are_readonly(self):
        c = SpectralCurve([400.0, 500.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            c.values[0] = 2.0


class TestSensorModel:
    def test_rejects_mismatched_grids(self):
        a = SpectralCurve([400.0, 500.0], [1.0, 1.0])
        b = SpectralCurve([400.0, 501.0], [1.0, 1.0])
        with pytest.raises(ValueError, match="identical wavelength grid"):
            SensorModel((a, b))

    def test_normalized_flag_checked(self):
        a = SpectralCurve([400.0, 500.0], [0.5, 0.5])
        with pytest.raises(ValueError, match="peak 1"):
            SensorModel((a,), normalized=True)

    def test_channel_names_default_to_labels(self):
        a = SpectralCurve([400.0, 500.0], [1.0, 0.5], "red")
        b = SpectralCurve([400.0, 500.0], [0.2, 0.9], "green")
        assert SensorModel((a, b)).channel_names == ("red", "green")

    def test_value_matrix_shape(self, sensor):
        assert sensor.value_matrix().shape == (3, sensor.wavelengths_nm.size)


class TestNormalizeSensor:
    def test_scales_by_largest_channel_peak(self):
        grid = np.array([400.0, 500.0, 600.0])
        chans = tuple(
            SpectralCurve(grid, peak * np.array([0.2, 1.0, 0.3]), f"c{i}")
            for i, peak in enumerate((0.5, 0.8, 0.4))
        )
        out = normalize_sensor(SensorModel(chans))
        peaks = [float(ch.values.max()) for ch in out.channels]
        assert peaks == pytest.approx([0.625, 1.0, 0.5], abs=1e-15)
        assert out.normalized

    def test_already_normalized_is_identity(self, sensor):
        out = normalize_sensor(sensor)
        for a, b in zip(out.channels, sensor.channels):
            assert np.array_equal(a.values, b.values)

    def test_constant_single_channel(self):
        grid = np.arange(400.0, 410.0)
        out = normalize_sensor(
            SensorModel((SpectralCurve(grid, np.full(10, 2.0), "c"),))
        )
        assert np.array_equal(out.channels[0].values, np.ones(10))

    def test_all_zero_sensor_rejected(self):
        grid = np.array([400.0, 500.0])
        with pytest.raises(AllZeroSensorError):
            normalize_sensor(SensorModel((SpectralCurve(grid, [0.0, 0.0]),)))


class TestBandTransmittance:
    def test_peak_at_center(self):
        assert band_transmittance(GaussianBand(550.0, 10.0, 1.0), 550.0) == 1.0

    def test_half_maximum_at_half_fwhm(self):
        t = band_transmittance(GaussianBand(550.0, 10.0, 1.0), 555.0)
        assert t == pytest.approx(0.5, rel=1e-12)

    def test_peak_scales_half_maximum(self):
        t = band_transmittance(GaussianBand(550.0, 10.0, 0.8), 545.0)
        assert t == pytest.approx(0.4, rel=1e-12)

    def test_vectorized_over_wavelengths(self):
        band = GaussianBand(550.0, 10.0, 1.0)
        t = band_transmittance(band, np.array([545.0, 550.0, 555.0]))
        assert t.shape == (3,)
        assert t[0] == t[2] < t[1]

    def test_band_validation(self):
        with pytest.raises(ValueError):
            GaussianBand(550.0, 0.0)
        with pytest.raises(ValueError):
            GaussianBand(550.0, 10.0, 1.5)
        with pytest.raises(ValueError):
            GaussianBand(550.0, 10.0, 0.0)


class TestMixingCoefficient:
    def test_constant_channel_gives_gaussian_area(self):
        sensor = constant_sensor()
        got = mixing_coefficient(sensor, 0, GaussianBand(550.0, 10.0, 1.0))
        sigma = 10.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        assert got == pytest.approx(sigma * math.sqrt(2.0 * math.pi), rel=1e-9)
        assert got == pytest.approx(GAUSS_UNIT_AREA, rel=1e-12)

    def test_zero_channel_gives_zero(self):
        grid = np.arange(400.0, 700.0)
        sensor = SensorModel(
            (
                SpectralCurve(grid, np.ones_like(grid), "on"),
                SpectralCurve(grid, np.zeros_like(grid), "off"),
            ),
            normalized=True,
        )
        assert mixing_coefficient(sensor, 1, GaussianBand(550.0, 10.0)) == 0.0

    def test_triangle_channel_matches_fine_quadrature(self, toy_sensor):
        band = GaussianBand(500.0, 10.0, 1.0)
        got = mixing_coefficient(toy_sensor, 0, band)
        assert got == pytest.approx(TRIANGLE_PEAK_OVERLAP, rel=1e-4)
        live = simpson_mixing(
            toy_sensor.wavelengths_nm, toy_sensor.channels[0].values, band
        )
        assert live == pytest.approx(TRIANGLE_PEAK_OVERLAP, rel=1e-12)

    def test_linear_in_peak_transmittance(self, toy_sensor):
        lo = mixing_coefficient(toy_sensor, 0, GaussianBand(480.0, 10.0, 0.25))
        hi = mixing_coefficient(toy_sensor, 0, GaussianBand(480.0, 10.0, 0.5))
        assert hi == pytest.approx(2.0 * lo, rel=1e-15)

    def test_translating_band_off_support_drives_coefficient_to_zero(self, toy_sensor):
        # tri_a support ends at 580 nm; sliding the band away collapses the overlap
        vals = [
            mixing_coefficient(toy_sensor, 0, GaussianBand(c, 10.0))
            for c in (500.0, 560.0, 600.0, 650.0, 690.0)
        ]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-100

    def test_requires_normalized_sensor(self):
        sensor = constant_sensor(value=0.5)
        with pytest.raises(ValueError, match="normalized"):
            mixing_coefficient(sensor, 0, GaussianBand(550.0, 10.0))

    def test_channel_index_checked(self, toy_sensor):
        with pytest.raises(IndexError):
            mixing_coefficient(toy_sensor, 5, GaussianBand(500.0, 10.0))

    def test_warns_when_band_mass_truncated(self):
        sensor = constant_sensor(lo=400.0, hi=500.0)
        with pytest.warns(BandOutsideRangeWarning):
            mixing_coefficient(sensor, 0, GaussianBand(498.0, 10.0))

    def test_no_warning_when_band_inside(self):
        sensor = constant_sensor(lo=400.0, hi=500.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", BandOutsideRangeWarning)
            mixing_coefficient(sensor, 0, GaussianBand(450.0, 10.0))

    def test_trapezoid_converges_at_second_order(self):
        # Truncated band (warned) so the h^2 error term survives; the
        # Richardson ratio across step halvings must approach 4.
        vals = {}
        for h in (0.4, 0.2, 0.1):
            grid = np.arange(495.0, 515.0 + h / 2, h)
            sensor = SensorModel(
                (SpectralCurve(grid, np.ones_like(grid), "c"),), normalized=True
            )
            with pytest.warns(BandOutsideRangeWarning):
                vals[h] = mixing_coefficient(sensor, 0, GaussianBand(505.0, 10.0))
        ratio = (vals[0.4] - vals[0.2]) / (vals[0.2] - vals[0.1])
        assert ratio == pytest.approx(4.0, abs=0.5)

    def test_mixing_coefficients_vector_matches_scalar(self, toy_sensor):
        band = GaussianBand(520.0, 10.0)
        vec = mixing_coefficients(toy_sensor, band)
        assert vec.shape == (2,)
        assert vec[0] == mixing_coefficient(toy_sensor, 0, band)
        assert vec[1] == mixing_coefficient(toy_sensor, 1, band)
