"""Sensor CSV ingestion and the shipped synthetic RGB fixture.

The CSV wire format is one header row ``wavelength_nm,<ch1>,<ch2>,...``
followed by one row per grid point: wavelengths strictly increasing, plain
decimal numbers, UTF-8. Channel grids are shared by construction; files with
non-numeric cells or non-increasing wavelengths are rejected with the
offending line number.

The synthetic fixture is NOT real sensor data (in particular it is not the
Sony IMX411): it is a smooth three-channel stand-in on a 1 nm grid over
387-950 nm, built from overlapping Gaussian bumps, so that the full pipeline
has a deterministic, redistributable default input.
"""

from __future__ import annotations

from importlib.resources import files

import numpy as np

from .errors import SensorFormatError
from .spectral import SensorModel, SpectralCurve

FIXTURE_FILENAME = "synthetic_rgb_sensor.csv"
FIXTURE_RANGE_NM = (387.0, 950.0)


def load_sensor_csv(path) -> SensorModel:
    """Parse a sensor CSV into an (unnormalized) :class:`SensorModel`."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise SensorFormatError(f"cannot read sensor file {path}: {exc}") from exc
    with fh:
        header = fh.readline()
        if not header:
            raise SensorFormatError(f"{path}:1: empty file")
        columns = [c.strip() for c in header.rstrip("\n").split(",")]
        if len(columns) < 2 or columns[0] != "wavelength_nm":
            raise SensorFormatError(
                f"{path}:1: header must be 'wavelength_nm,<ch1>,...', got {header!r}"
            )
        names = columns[1:]
        wavelengths: list[float] = []
        values: list[list[float]] = [[] for _ in names]
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise SensorFormatError(
                    f"{path}:{lineno}: expected {len(columns)} cells, got {len(cells)}"
                )
            try:
                row = [float(c) for c in cells]
            except ValueError as exc:
                raise SensorFormatError(
                    f"{path}:{lineno}: non-numeric cell: {exc}"
                ) from exc
            if wavelengths and row[0] <= wavelengths[-1]:
                raise SensorFormatError(
                    f"{path}:{lineno}: wavelengths must be strictly increasing"
                )
            wavelengths.append(row[0])
            for ch, v in enumerate(row[1:]):
                values[ch].append(v)
    if len(wavelengths) < 2:
        raise SensorFormatError(f"{path}: need at least 2 grid points")
    grid = np.array(wavelengths)
    try:
        channels = tuple(
            SpectralCurve(grid, np.array(v), label=name)
            for name, v in zip(names, values)
        )
        return SensorModel(channels, tuple(names), normalized=False)
    except ValueError as exc:
        raise SensorFormatError(f"{path}: {exc}") from exc


def save_sensor_csv(sensor: SensorModel, path) -> None:
    """Write a sensor in the CSV wire format (floats via shortest repr)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("wavelength_nm," + ",".join(sensor.channel_names) + "\n")
        grid = sensor.wavelengths_nm
        mat = sensor.value_matrix()
        for j in range(grid.size):
            cells = [repr(float(grid[j]))]
            cells += [repr(float(mat[c, j])) for c in range(mat.shape[0])]
            fh.write(",".join(cells) + "\n")


def _bump(grid: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-((grid - center) ** 2) / (2.0 * width**2))


def synthetic_rgb_sensor() -> SensorModel:
    """The deterministic synthetic three-channel test sensor (not IMX411).

    Smooth overlapping bumps on a 1 nm grid over 387-950 nm, with the mild
    secondary lobes (e.g. a red NIR shoulder) typical of RGB sensitivities.
    """
    lo, hi = FIXTURE_RANGE_NM
    grid = np.arange(lo, hi + 1.0)
    red = 0.90 * _bump(grid, 600, 45) + 0.28 * _bump(grid, 860, 80) + 0.05 * _bump(grid, 460, 60)
    green = 0.85 * _bump(grid, 540, 40) + 0.15 * _bump(grid, 410, 30) + 0.10 * _bump(grid, 800, 90)
    blue = 0.95 * _bump(grid, 455, 35) + 0.20 * _bump(grid, 560, 80) + 0.08 * _bump(grid, 740, 90)
    names = ("synth_r", "synth_g", "synth_b")
    channels = tuple(
        SpectralCurve(grid, v, label=n) for n, v in zip(names, (red, green, blue))
    )
    return SensorModel(channels, names, normalized=False)


def fixture_path() -> str:
    """Filesystem path of the packaged synthetic sensor CSV."""
    return str(files("msidesign.data").joinpath(FIXTURE_FILENAME))
