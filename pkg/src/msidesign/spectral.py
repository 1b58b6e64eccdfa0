"""Sensor spectral sensitivities, Gaussian passbands, and mixing coefficients.

A camera channel is modeled as a sampled sensitivity curve over a shared
wavelength grid. A narrowband filter passband is an analytic Gaussian with a
given center and FWHM. The mixing coefficient of a (channel, band) pair is the
overlap integral of the band transmittance against the channel sensitivity,
evaluated by the trapezoid rule on the sensor's native grid. These
coefficients are the entries of the design matrix downstream.

All types are immutable after construction and all operations are pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AllZeroSensorError, BandOutsideRangeWarning

# FWHM = 2*sqrt(2*ln 2) * sigma for a Gaussian profile.
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

# Fraction of analytic Gaussian mass allowed outside the sensor grid before
# a truncation warning is emitted.
BAND_MASS_LOSS_TOLERANCE = 0.01


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SpectralCurve:
    """A sampled function of wavelength (nm), e.g. one channel's sensitivity."""

    wavelengths_nm: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        wl = _readonly(self.wavelengths_nm)
        vals = _readonly(self.values)
        if wl.ndim != 1 or wl.size < 2:
            raise ValueError("wavelength grid must be 1-D with at least 2 samples")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        if vals.shape != wl.shape:
            raise ValueError(
                f"values length {vals.shape} does not match grid {wl.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if np.any(vals < 0):
            raise ValueError("values must be >= 0")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", vals)

    @property
    def range_nm(self) -> tuple[float, float]:
        return float(self.wavelengths_nm[0]), float(self.wavelengths_nm[-1])


@dataclass(frozen=True, eq=False)
class SensorModel:
    """A multi-channel sensor: C sensitivity curves on one shared grid.

    ``normalized`` means the global maximum over all channels equals 1, the
    convention used before computing mixing coefficients.
    """

    channels: tuple[SpectralCurve, ...]
    channel_names: tuple[str, ...] = ()
    normalized: bool = False

    def __post_init__(self):
        channels = tuple(self.channels)
        if len(channels) < 1:
            raise ValueError("sensor needs at least one channel")
        grid = channels[0].wavelengths_nm
        for ch in channels[1:]:
            if ch.wavelengths_nm.shape != grid.shape or np.any(
                ch.wavelengths_nm != grid
            ):
                raise ValueError(
                    "all channels must share an identical wavelength grid; "
                    "mismatched grids are rejected, not interpolated"
                )
        names = tuple(self.channel_names) or tuple(ch.label for ch in channels)
        if len(names) != len(channels):
            raise ValueError("channel_names length must match channel count")
        if self.normalized:
            peak = max(float(ch.values.max()) for ch in channels)
            if abs(peak - 1.0) > 1e-12:
                raise ValueError(
                    f"normalized sensor must have global peak 1, got {peak!r}"
                )
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def wavelengths_nm(self) -> np.ndarray:
        return self.channels[0].wavelengths_nm

    @property
    def range_nm(self) -> tuple[float, float]:
        return self.channels[0].range_nm

    def value_matrix(self) -> np.ndarray:
        """Channel sensitivities stacked as a (C, grid) array."""
        return np.stack([ch.values for ch in self.channels])

    @property
    def label(self) -> str:
        return "+".join(self.channel_names)


@dataclass(frozen=True)
class GaussianBand:
    """One Gaussian passband: center wavelength, FWHM, and peak transmittance."""

    center_nm: float
    fwhm_nm: float
    peak_transmittance: float = 1.0

    def __post_init__(self):
        if not self.fwhm_nm > 0:
            raise ValueError("fwhm_nm must be positive")
        if not 0 < self.peak_transmittance <= 1:
            raise ValueError("peak_transmittance must be in (0, 1]")

    @property
    def sigma_nm(self) -> float:
        return self.fwhm_nm * FWHM_TO_SIGMA


@dataclass(frozen=True)
class FilterSpec:
    """A k-band narrow bandpass filter as a set of Gaussian passbands."""

    bands: tuple[GaussianBand, ...]

    def __post_init__(self):
        bands = tuple(self.bands)
        if len(bands) < 1:
            raise ValueError("filter needs at least one band")
        centers = [b.center_nm for b in bands]
        if len(set(centers)) != len(centers):
            raise ValueError("band centers must be pairwise distinct")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def from_centers(
        cls, centers_nm, fwhm_nm: float, peak_transmittance: float = 1.0
    ) -> "FilterSpec":
        return cls(
            tuple(
                GaussianBand(float(c), float(fwhm_nm), float(peak_transmittance))
                for c in centers_nm
            )
        )

    @property
    def k(self) -> int:
        return len(self.bands)


def normalize_sensor(sensor: SensorModel) -> SensorModel:
    """Scale all channels by the single largest peak across channels.

    After normalization the global maximum over all channels is exactly 1.
    """
    peak = max(float(ch.values.max()) for ch in sensor.channels)
    if peak <= 0.0:
        raise AllZeroSensorError("sensor has no positive sensitivity value")
    if peak == 1.0:
        channels = sensor.channels
    else:
        channels = tuple(
            SpectralCurve(ch.wavelengths_nm, ch.values / peak, ch.label)
            for ch in sensor.channels
        )
    return SensorModel(channels, sensor.channel_names, normalized=True)


def band_transmittance(band: GaussianBand, wavelength_nm):
    """Gaussian transmittance of ``band`` at one or many wavelengths (nm)."""
    lam = np.asarray(wavelength_nm, dtype=float)
    sigma = band.sigma_nm
    t = band.peak_transmittance * np.exp(
        -((lam - band.center_nm) ** 2) / (2.0 * sigma**2)
    )
    if np.isscalar(wavelength_nm):
        return float(t)
    return t


def _band_mass_fraction_inside(band: GaussianBand, lo: float, hi: float) -> float:
    """Fraction of the band's analytic Gaussian mass within [lo, hi]."""
    sigma = band.sigma_nm
    z_lo = (lo - band.center_nm) / (sigma * math.sqrt(2.0))
    z_hi = (hi - band.center_nm) / (sigma * math.sqrt(2.0))
    return 0.5 * (math.erf(z_hi) - math.erf(z_lo))


def _check_band_truncation(sensor: SensorModel, band: GaussianBand) -> None:
    lo, hi = sensor.range_nm
    lost = 1.0 - _band_mass_fraction_inside(band, lo, hi)
    if lost > BAND_MASS_LOSS_TOLERANCE:
        warnings.warn(
            f"band at {band.center_nm} nm loses {lost:.1%} of its Gaussian mass "
            f"outside the sensor grid [{lo}, {hi}] nm",
            BandOutsideRangeWarning,
            stacklevel=3,
        )


def mixing_coefficients(sensor: SensorModel, band: GaussianBand) -> np.ndarray:
    """Overlap integrals of ``band`` against every channel, as a (C,) array.

    Trapezoid rule on the sensor's native grid; the Gaussian is evaluated
    analytically at the grid points and truncated to the grid extent. Units
    are nm (dimensionless sensitivity times nm). Emits
    :class:`BandOutsideRangeWarning` when more than 1% of the band's analytic
    mass lies outside the grid.
    """
    if not sensor.normalized:
        raise ValueError("sensor must be normalized before computing coefficients")
    _check_band_truncation(sensor, band)
    grid = sensor.wavelengths_nm
    t = band_transmittance(band, grid)
    return np.trapezoid(sensor.value_matrix() * t, grid, axis=1)


def mixing_coefficient(
    sensor: SensorModel, channel_index: int, band: GaussianBand
) -> float:
    """Overlap integral of ``band`` against channel ``channel_index``."""
    if not 0 <= channel_index < sensor.n_channels:
        raise IndexError(f"channel index {channel_index} out of range")
    return float(mixing_coefficients(sensor, band)[channel_index])
