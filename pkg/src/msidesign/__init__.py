"""Design toolkit for filtered multi-camera multispectral imaging systems.

Builds the camera/filter mixing model from spectral sensitivity curves,
exhaustively searches all feasible wavelength-to-filter allocations, selects
the allocation minimizing the spectral condition number of the stacked
system matrix, and validates the design by simulated acquisition and
least-squares spectral reconstruction.
"""

__version__ = "0.1.0"

from .assembly import (
    Allocation,
    BlockFactorization,
    DesignMatrix,
    FeasibilityReport,
    SystemMatrix,
    WavelengthSet,
    block_diag_factor,
    build_design_matrix,
    check_feasibility,
    mask_columns,
    stack_system,
)
from .conditioning import (
    ConditioningReport,
    RankingResult,
    WorstCaseSnr,
    conditioning,
    optimize,
    worst_case_snr_demo,
)
from .config import RunConfig, load_run_config
from .enumeration import (
    IndexTable,
    SearchSpaceSpec,
    build_index_table,
    count_feasible,
    count_minimum,
    enumerate_allocations,
    iter_encoding_blocks,
    load_index_table,
    save_index_table,
    unrank_allocation,
    write_index_table,
)
from .sensor_io import (
    fixture_path,
    load_sensor_csv,
    save_sensor_csv,
    synthetic_rgb_sensor,
)
from .simulate import (
    NoiseModel,
    ReconstructionResult,
    SceneSpectrum,
    SnrSummary,
    monte_carlo_snr,
    simulate_exact,
    simulate_mixed,
    solve_ls,
    solve_per_block,
)
from .spectral import (
    FilterSpec,
    GaussianBand,
    SensorModel,
    SpectralCurve,
    band_transmittance,
    mixing_coefficient,
    mixing_coefficients,
    normalize_sensor,
)

__all__ = [
    "__version__",
    "Allocation",
    "BlockFactorization",
    "ConditioningReport",
    "DesignMatrix",
    "FeasibilityReport",
    "FilterSpec",
    "GaussianBand",
    "IndexTable",
    "NoiseModel",
    "RankingResult",
    "ReconstructionResult",
    "RunConfig",
    "SceneSpectrum",
    "SearchSpaceSpec",
    "SensorModel",
    "SnrSummary",
    "SpectralCurve",
    "SystemMatrix",
    "WavelengthSet",
    "WorstCaseSnr",
    "band_transmittance",
    "block_diag_factor",
    "build_design_matrix",
    "build_index_table",
    "check_feasibility",
    "conditioning",
    "count_feasible",
    "count_minimum",
    "enumerate_allocations",
    "fixture_path",
    "iter_encoding_blocks",
    "load_index_table",
    "load_run_config",
    "load_sensor_csv",
    "mask_columns",
    "mixing_coefficient",
    "mixing_coefficients",
    "monte_carlo_snr",
    "normalize_sensor",
    "optimize",
    "save_index_table",
    "save_sensor_csv",
    "simulate_exact",
    "simulate_mixed",
    "solve_ls",
    "solve_per_block",
    "stack_system",
    "synthetic_rgb_sensor",
    "unrank_allocation",
    "worst_case_snr_demo",
    "write_index_table",
]
