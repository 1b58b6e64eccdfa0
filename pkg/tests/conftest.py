import numpy as np
import pytest

from msidesign import (
    SensorModel,
    SpectralCurve,
    WavelengthSet,
    build_design_matrix,
    normalize_sensor,
    synthetic_rgb_sensor,
)

TARGETS_12 = (410.0, 430.0, 450.0, 500.0, 520.0, 550.0, 578.0, 620.0, 680.0, 700.0, 720.0, 780.0)


@pytest.fixture(scope="session")
def sensor():
    """The shipped synthetic 3-channel sensor, normalized."""
    return normalize_sensor(synthetic_rgb_sensor())


@pytest.fixture(scope="session")
def targets12():
    return WavelengthSet(TARGETS_12)


@pytest.fixture(scope="session")
def design12(sensor, targets12):
    return build_design_matrix(sensor, targets12, fwhm_nm=10.0)


@pytest.fixture(scope="session")
def toy_sensor():
    """Two digitized triangle channels on a 0.5 nm grid (already normalized)."""
    grid = np.arange(400.0, 700.0 + 0.5, 0.5)
    tri_a = np.maximum(0.0, 1.0 - np.abs(grid - 500.0) / 80.0)
    tri_b = 0.8 * np.maximum(0.0, 1.0 - np.abs(grid - 600.0) / 90.0)
    return SensorModel(
        (SpectralCurve(grid, tri_a, "tri_a"), SpectralCurve(grid, tri_b, "tri_b")),
        ("tri_a", "tri_b"),
        normalized=True,
    )


def constant_sensor(lo=300.0, hi=800.0, step=1.0, value=1.0, channels=1):
    """Sensor with constant channels; value 1 makes it valid as normalized."""
    grid = np.arange(lo, hi + step / 2, step)
    curves = tuple(
        SpectralCurve(grid, np.full_like(grid, value), f"c{i}")
        for i in range(channels)
    )
    return SensorModel(curves, normalized=(value == 1.0))
