"""Run configuration: YAML parsing, validation, and CLI overrides.

A run is described by one YAML file (scalars plus the nested target list);
selected scalar fields can be overridden from the command line. Every emitted
report embeds the fully resolved configuration so a run can be reproduced
from its output alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError

OUTPUT_DIR_ENV = "MSIDESIGN_OUTPUT_DIR"

_REQUIRED = ("sensor_file", "targets_nm", "fwhm_nm", "n_cam", "k")


@dataclass(frozen=True)
class RunConfig:
    """All parameters of one design/simulation run."""

    sensor_file: str
    targets_nm: tuple[float, ...]
    fwhm_nm: float
    n_cam: int
    k: int
    peak_transmittance: float = 1.0
    top_m: int = 10
    noise_sigma: float = 0.0
    seed: int = 0
    output_dir: str = "."
    allocation: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        targets = tuple(float(w) for w in self.targets_nm)
        if len(set(targets)) != len(targets):
            raise ConfigError("targets_nm must be distinct")
        if any(b <= a for a, b in zip(targets, targets[1:])):
            targets = tuple(sorted(targets))
        object.__setattr__(self, "targets_nm", targets)
        if self.fwhm_nm <= 0:
            raise ConfigError("fwhm_nm must be positive")
        if not 0 < self.peak_transmittance <= 1:
            raise ConfigError("peak_transmittance must be in (0, 1]")
        if self.n_cam < 1 or self.k < 1:
            raise ConfigError("n_cam and k must be >= 1")
        if self.n_cam * self.k < len(targets):
            raise ConfigError(
                "feasibility condition (iii) violated: "
                f"n_cam*k = {self.n_cam * self.k} < p = {len(targets)}, "
                "the cameras cannot cover every target wavelength"
            )
        if self.top_m < 1:
            raise ConfigError("top_m must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.allocation is not None:
            alloc = tuple(tuple(float(w) for w in g) for g in self.allocation)
            object.__setattr__(self, "allocation", alloc)

    @property
    def p(self) -> int:
        return len(self.targets_nm)

    def as_dict(self) -> dict:
        out = {
            "sensor_file": str(self.sensor_file),
            "targets_nm": list(self.targets_nm),
            "fwhm_nm": self.fwhm_nm,
            "peak_transmittance": self.peak_transmittance,
            "n_cam": self.n_cam,
            "k": self.k,
            "top_m": self.top_m,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
        }
        if self.allocation is not None:
            out["allocation"] = [list(g) for g in self.allocation]
        return out


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    """Load a YAML run config, apply CLI overrides, and validate."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping of keys to values")

    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    missing = [key for key in _REQUIRED if key not in raw]
    if missing:
        raise ConfigError(f"missing required config key(s): {missing}")
    if "output_dir" not in raw:
        raw["output_dir"] = os.environ.get(OUTPUT_DIR_ENV, ".")
    if not isinstance(raw["targets_nm"], (list, tuple)):
        raise ConfigError("targets_nm must be a list of wavelengths (nm)")
    raw["targets_nm"] = tuple(raw["targets_nm"])
    if raw.get("allocation") is not None:
        if not isinstance(raw["allocation"], (list, tuple)) or not all(
            isinstance(g, (list, tuple)) for g in raw["allocation"]
        ):
            raise ConfigError("allocation must be a list of wavelength lists")
        raw["allocation"] = tuple(tuple(g) for g in raw["allocation"])

    try:
        config = RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    # Paths in the file are relative to the file; CLI overrides stay cwd-relative.
    sensor_path = Path(config.sensor_file)
    if not sensor_path.is_absolute():
        config = replace(config, sensor_file=str(Path(path).parent / sensor_path))

    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if clean:
            config = replace(config, **clean)
    return config
