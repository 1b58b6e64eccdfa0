"""JSON/CSV report emission for optimizer and simulation runs.

Reports embed the resolved run configuration and seed so a run is
reproducible from its output alone. Floats are serialized via Python's
shortest round-trip repr, which preserves every bit on reload.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np

from .assembly import WavelengthSet
from .conditioning import ConditioningReport, RankingResult
from .config import RunConfig
from .simulate import SnrSummary


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _report_entry(alloc, report: ConditioningReport, targets: WavelengthSet) -> dict:
    return {
        "wavelengths_nm_per_filter": [list(g) for g in alloc.wavelengths(targets)],
        "indices_per_filter": [list(s) for s in alloc.subsets],
        "kappa": report.kappa,
        "sigma_max": report.sigma_max,
        "sigma_min": report.sigma_min,
        "frame_lower": report.frame_lower,
        "frame_upper": report.frame_upper,
        "snr_worst_factor": report.snr_worst_factor,
    }


def ranking_report(
    result: RankingResult, config: RunConfig, targets: WavelengthSet
) -> dict:
    return {
        "report": "allocation-ranking",
        "generated_at": _timestamp(),
        "config": config.as_dict(),
        "search_space": {
            "p": result.spec.p,
            "k": result.spec.k,
            "n_cam": result.spec.n_cam,
        },
        "evaluated_count": result.evaluated_count,
        "infeasible_rank_count": result.infeasible_rank_count,
        "sample_stride": result.sample_stride,
        "best": _report_entry(*result.best, targets),
        "top": [_report_entry(a, r, targets) for a, r in result.top],
    }


def simulation_report(
    summary: SnrSummary,
    config: RunConfig,
    targets: WavelengthSet,
    alloc,
    kappa: float,
) -> dict:
    per_band = {
        repr(float(w)): float(e)
        for w, e in zip(targets.wavelengths_nm, summary.per_band_rmse)
    }
    return {
        "report": "acquisition-simulation",
        "generated_at": _timestamp(),
        "config": config.as_dict(),
        "allocation_nm": [list(g) for g in alloc.wavelengths(targets)],
        "kappa": kappa,
        "seed": summary.seed,
        "noise_sigma": summary.sigma,
        "trials": summary.trials,
        "snr": {
            "output_mean": summary.output_snr_mean,
            "output_min": summary.output_snr_min,
            "input_mean": summary.input_snr_mean,
            "worst_case_floor": summary.snr_floor,
        },
        "per_band_rmse_by_nm": per_band,
    }


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, cls=_Encoder, allow_nan=True)
        fh.write("\n")


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, cls=_Encoder, allow_nan=True)
