"""Command-line front end tying the toolkit into reproducible runs.

Commands: ``count`` (exact search-space size), ``optimize`` (exhaustive
kappa minimization, JSON ranking report), ``simulate`` (noisy acquisition and
least-squares reconstruction report), ``table`` (write/validate the
allocation index table), ``matrix`` (dump the design matrix as CSV).

Exit codes: 0 success, 2 config error, 3 data error, 4 infeasible design.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import Allocation, WavelengthSet, build_design_matrix, stack_system
from .conditioning import conditioning, optimize
from .config import OUTPUT_DIR_ENV, RunConfig, load_run_config
from .enumeration import (
    SearchSpaceSpec,
    count_feasible,
    count_minimum,
    load_index_table,
    write_index_table,
)
from .errors import (
    AllZeroSensorError,
    ConfigError,
    CorruptTableError,
    GridMismatchError,
    IndexTableIOError,
    InfeasibleAllocationError,
    MsiDesignError,
    NoFeasibleAllocationError,
    NotMinimumCaseError,
    RankDeficientError,
    SensorFormatError,
    SingularBlockError,
    TargetOutOfRangeError,
    ZeroColumnError,
)
from .reports import ranking_report, simulation_report, write_json
from .sensor_io import load_sensor_csv
from .simulate import NoiseModel, monte_carlo_snr
from .spectral import normalize_sensor

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4

_DATA_ERRORS = (
    SensorFormatError,
    TargetOutOfRangeError,
    GridMismatchError,
    CorruptTableError,
    IndexTableIOError,
    AllZeroSensorError,
    ZeroColumnError,
)
_INFEASIBLE_ERRORS = (
    InfeasibleAllocationError,
    NoFeasibleAllocationError,
    NotMinimumCaseError,
    RankDeficientError,
    SingularBlockError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msidesign",
        description="Design toolkit for filtered multi-camera multispectral imaging",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser):
        p.add_argument("config", help="YAML run configuration file")
        p.add_argument("--sensor-file", help="override sensor CSV path")
        p.add_argument("--fwhm-nm", type=float, help="override filter FWHM (nm)")
        p.add_argument(
            "--peak-transmittance", type=float, help="override band peak transmittance"
        )
        p.add_argument("--n-cam", type=int, help="override camera count")
        p.add_argument("--k", type=int, help="override bands per filter")
        p.add_argument("--top-m", type=int, help="override ranking length")
        p.add_argument("--noise-sigma", type=float, help="override noise sigma")
        p.add_argument("--seed", type=int, help="override RNG seed")
        p.add_argument("--output-dir", help="override output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=0,
            help="worker threads (default: available parallelism)",
        )

    p_count = sub.add_parser("count", help="print the exact number of allocations")
    add_common(p_count)

    p_opt = sub.add_parser("optimize", help="exhaustive condition-number search")
    add_common(p_opt)
    p_opt.add_argument("--out", help="ranking JSON path (default: <output_dir>/ranking.json)")
    p_opt.add_argument(
        "--kappa-csv",
        help="also write one 'index,kappa' CSV row per evaluated allocation",
    )
    p_opt.add_argument(
        "--stride",
        type=int,
        default=1,
        help="evaluate every N-th allocation (deterministic subsample)",
    )

    p_sim = sub.add_parser("simulate", help="simulate acquisition + reconstruction")
    add_common(p_sim)
    p_sim.add_argument(
        "--allocation",
        default=None,
        help="'best' (run the optimizer) or groups like '410,620,720;430,520,700;...'",
    )
    p_sim.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    p_sim.add_argument("--out", help="report JSON path (default: <output_dir>/simulation.json)")

    p_tab = sub.add_parser("table", help="write or validate the index-table CSV")
    add_common(p_tab)
    p_tab.add_argument("path", help="index-table CSV path")
    p_tab.add_argument(
        "--validate",
        action="store_true",
        help="validate an existing table instead of writing",
    )

    p_mat = sub.add_parser("matrix", help="dump the design matrix D as CSV")
    add_common(p_mat)
    p_mat.add_argument("--out", help="CSV path (default: <output_dir>/design_matrix.csv)")
    return parser


def _overrides(args) -> dict:
    return {
        "sensor_file": args.sensor_file,
        "fwhm_nm": args.fwhm_nm,
        "peak_transmittance": args.peak_transmittance,
        "n_cam": args.n_cam,
        "k": args.k,
        "top_m": args.top_m,
        "noise_sigma": args.noise_sigma,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }


def _spec(config: RunConfig) -> SearchSpaceSpec:
    return SearchSpaceSpec(p=config.p, k=config.k, n_cam=config.n_cam)


def _load_design(config: RunConfig):
    sensor = normalize_sensor(load_sensor_csv(config.sensor_file))
    targets = WavelengthSet(config.targets_nm)
    design = build_design_matrix(
        sensor, targets, config.fwhm_nm, config.peak_transmittance
    )
    return sensor, targets, design


def _output_path(config: RunConfig, override, default_name: str) -> Path:
    if override:
        return Path(override)
    out_dir = Path(config.output_dir or os.environ.get(OUTPUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / default_name


def _threads(args) -> int:
    return args.threads if args.threads and args.threads > 0 else os.cpu_count() or 1


def _cmd_count(args) -> int:
    config = load_run_config(args.config, _overrides(args))
    spec = _spec(config)
    n = count_minimum(spec) if spec.is_minimum else count_feasible(spec)
    print(n)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    config = load_run_config(args.config, _overrides(args))
    spec = _spec(config)
    _, targets, design = _load_design(config)
    sink = None
    csv_fh = None
    if args.kappa_csv:
        csv_fh = open(args.kappa_csv, "w", encoding="utf-8", newline="")
        csv_fh.write("index,kappa\n")

        def sink(indices, kappas):
            for i, kap in zip(indices, kappas):
                csv_fh.write(f"{int(i)},{kap!r}\n")

    try:
        result = optimize(
            design,
            spec,
            targets,
            top_m=config.top_m,
            threads=_threads(args),
            sample_stride=args.stride,
            kappa_sink=sink,
        )
    finally:
        if csv_fh is not None:
            csv_fh.close()
    out = _output_path(config, args.out, "ranking.json")
    write_json(ranking_report(result, config, targets), out)
    best_alloc, best_report = result.best
    print(f"evaluated {result.evaluated_count} allocations "
          f"({result.infeasible_rank_count} rank-deficient)")
    print(f"kappa_min = {best_report.kappa:.6g}")
    print(f"best allocation: {best_alloc.wavelengths(targets)}")
    print(f"report written to {out}")
    return EXIT_OK


def _parse_allocation_arg(text: str, targets: WavelengthSet) -> Allocation:
    groups = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            groups.append([float(v) for v in chunk.split(",")])
        except ValueError as exc:
            raise ConfigError(f"bad allocation group {chunk!r}: {exc}") from exc
    try:
        return Allocation.from_wavelengths(groups, targets)
    except KeyError as exc:
        raise ConfigError(f"allocation wavelength not in targets_nm: {exc}") from exc


def _cmd_simulate(args) -> int:
    config = load_run_config(args.config, _overrides(args))
    spec = _spec(config)
    _, targets, design = _load_design(config)

    choice = args.allocation
    if choice is None:
        choice = "best" if config.allocation is None else "config"
    if choice == "best":
        result = optimize(design, spec, targets, top_m=1, threads=_threads(args))
        alloc = result.best[0]
    elif choice == "config":
        alloc = Allocation.from_wavelengths(config.allocation, targets)
    else:
        alloc = _parse_allocation_arg(choice, targets)

    system = stack_system([design] * alloc.n_cameras, alloc)
    report = conditioning(system)
    if not report.rank_ok:
        raise RankDeficientError(
            "feasibility condition (ii) violated: system matrix is numerically "
            "rank-deficient for this allocation"
        )
    if config.noise_sigma > 0:
        noise = NoiseModel.white_gaussian(config.noise_sigma, config.seed)
    else:
        noise = NoiseModel.none()
    scene = _flat_scene_samples(targets)
    summary = monte_carlo_snr(system, scene, noise, trials=args.trials)
    out = _output_path(config, args.out, "simulation.json")
    write_json(simulation_report(summary, config, targets, alloc, report.kappa), out)
    print(f"kappa = {report.kappa:.6g}, output SNR mean = {summary.output_snr_mean:.6g}")
    print(f"report written to {out}")
    return EXIT_OK


def _flat_scene_samples(targets: WavelengthSet):
    # Unit-irradiance scene: reconstruction exercises the mixing alone.
    return np.ones(targets.p)


def _cmd_table(args) -> int:
    config = load_run_config(args.config, _overrides(args))
    spec = _spec(config)
    if args.validate:
        table = load_index_table(args.path, spec)
        print(f"{args.path}: valid, {len(table)} rows")
    else:
        n = write_index_table(spec, args.path)
        print(f"{args.path}: wrote {n} rows")
    return EXIT_OK


def _cmd_matrix(args) -> int:
    config = load_run_config(args.config, _overrides(args))
    sensor, targets, design = _load_design(config)
    out = _output_path(config, args.out, "design_matrix.csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        header = ["channel"] + [repr(w) for w in targets.wavelengths_nm]
        fh.write(",".join(header) + "\n")
        for name, row in zip(sensor.channel_names, design.entries):
            fh.write(name + "," + ",".join(repr(float(v)) for v in row) + "\n")
    print(f"design matrix written to {out}")
    return EXIT_OK


_COMMANDS = {
    "count": _cmd_count,
    "optimize": _cmd_optimize,
    "simulate": _cmd_simulate,
    "table": _cmd_table,
    "matrix": _cmd_matrix,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _INFEASIBLE_ERRORS as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MsiDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
