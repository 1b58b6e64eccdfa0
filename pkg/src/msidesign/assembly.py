"""Design matrix construction, column masking, and system stacking.

The design matrix D holds the mixing coefficient of every (channel, target
wavelength) pair for one camera. A filter that passes only the wavelengths in
a subset K acts as a column mask on D. Stacking the masked per-camera blocks
gives the global system matrix of the multi-camera acquisition. In the square
minimum case (k = C, n_cam*C = p) the stacked matrix factors into a
block-diagonal matrix times a column permutation, which makes the forward and
inverse problems separable per camera.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleAllocationError,
    NotMinimumCaseError,
    TargetOutOfRangeError,
    ZeroColumnError,
)
from .spectral import GaussianBand, SensorModel, mixing_coefficients

# Numerical full-rank test: sigma_min > RANK_RTOL * sigma_max.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class WavelengthSet:
    """The ordered set of p target central wavelengths (nm)."""

    wavelengths_nm: tuple[float, ...]

    def __post_init__(self):
        wl = tuple(float(w) for w in self.wavelengths_nm)
        if len(wl) < 1:
            raise ValueError("need at least one target wavelength")
        if any(b <= a for a, b in zip(wl, wl[1:])):
            raise ValueError("target wavelengths must be strictly increasing")
        object.__setattr__(self, "wavelengths_nm", wl)

    @property
    def p(self) -> int:
        return len(self.wavelengths_nm)

    def index_of(self, wavelength_nm: float) -> int:
        """1-based index of a target wavelength."""
        try:
            return self.wavelengths_nm.index(float(wavelength_nm)) + 1
        except ValueError:
            raise KeyError(f"{wavelength_nm} nm is not a target wavelength") from None


@dataclass(frozen=True)
class Allocation:
    """One configuration: an ordered collection of k-element index subsets.

    Indices are 1-based positions into the target wavelength set. The
    canonical form sorts indices ascending within each subset and orders the
    subsets lexicographically (i.e. by smallest element, ties broken by the
    following elements). Feasibility (pairwise-distinct subsets, coverage of
    all targets) is checked where a system is assembled, so that infeasible
    candidates can still be represented and reported.
    """

    subsets: tuple[tuple[int, ...], ...]
    canonical: bool = False

    def __post_init__(self):
        subsets = tuple(tuple(int(i) for i in s) for s in self.subsets)
        if len(subsets) < 1:
            raise ValueError("allocation needs at least one subset")
        k = len(subsets[0])
        for s in subsets:
            if len(s) != k:
                raise ValueError("all subsets must have the same size k")
            if len(set(s)) != len(s):
                raise ValueError(f"subset {s} has repeated indices")
            if any(i < 1 for i in s):
                raise ValueError("wavelength indices are 1-based")
        if self.canonical:
            if any(tuple(sorted(s)) != s for s in subsets):
                raise ValueError("canonical subsets must be sorted ascending")
            if list(subsets) != sorted(subsets):
                raise ValueError("canonical subsets must be in lexicographic order")
        object.__setattr__(self, "subsets", subsets)

    @property
    def n_cameras(self) -> int:
        return len(self.subsets)

    @property
    def k(self) -> int:
        return len(self.subsets[0])

    def canonicalize(self) -> "Allocation":
        if self.canonical:
            return self
        return Allocation(tuple(sorted(tuple(sorted(s)) for s in self.subsets)), True)

    def encoding(self) -> tuple[int, ...]:
        """Flat canonical encoding: k indices per camera, cameras in order."""
        return tuple(i for s in self.canonicalize().subsets for i in s)

    def covered_indices(self) -> set[int]:
        return {i for s in self.subsets for i in s}

    def is_feasible(self, p: int) -> bool:
        distinct = len({tuple(sorted(s)) for s in self.subsets}) == self.n_cameras
        return distinct and self.covered_indices() == set(range(1, p + 1))

    def wavelengths(self, targets: WavelengthSet) -> tuple[tuple[float, ...], ...]:
        """Subsets expressed as target wavelengths (nm) instead of indices."""
        return tuple(
            tuple(targets.wavelengths_nm[i - 1] for i in s) for s in self.subsets
        )

    @classmethod
    def from_wavelengths(
        cls, groups, targets: WavelengthSet, canonical: bool = False
    ) -> "Allocation":
        """Build from nested wavelength values (nm) instead of indices."""
        subsets = tuple(tuple(targets.index_of(w) for w in g) for g in groups)
        alloc = cls(subsets)
        return alloc.canonicalize() if canonical else alloc


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """C x p matrix of mixing coefficients for all candidate wavelengths."""

    entries: np.ndarray
    targets: WavelengthSet
    sensor_label: str = ""
    filter_fwhm_nm: float = 0.0

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2:
            raise ValueError("design matrix must be 2-D (channels x wavelengths)")
        if m.shape[1] != self.targets.p:
            raise ValueError("column count must match the target wavelength count")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("design entries must be finite and >= 0")
        zero_cols = np.flatnonzero(~m.any(axis=0))
        if zero_cols.size:
            nm = [self.targets.wavelengths_nm[j] for j in zero_cols]
            raise ZeroColumnError(
                f"no channel responds at target wavelength(s) {nm} nm"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n_channels(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Stacked, column-masked per-camera design blocks: the forward operator.

    Row block i covers rows ``row_blocks[i][0]:row_blocks[i][1]`` and equals
    camera i's design matrix with all columns outside its subset zeroed.
    """

    entries: np.ndarray
    allocation: Allocation
    targets: WavelengthSet
    row_blocks: tuple[tuple[int, int], ...]
    sensor_labels: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[1] != self.targets.p:
            raise ValueError("system matrix shape must be (total channels, p)")
        if self.row_blocks[-1][1] != m.shape[0]:
            raise ValueError("row blocks must tile all rows")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def n_cameras(self) -> int:
        return len(self.row_blocks)

    def camera_block(self, i: int) -> np.ndarray:
        start, stop = self.row_blocks[i]
        return self.entries[start:stop]


@dataclass(frozen=True, eq=False)
class BlockFactorization:
    """Minimum-case factorization A = B @ P.

    ``block_diagonal`` is B (p x p) with one square C x C block per camera;
    ``permutation`` is the p x p permutation matrix P. ``column_targets[j]``
    is the 0-based target column of A that column j of B corresponds to.
    """

    block_diagonal: np.ndarray
    permutation: np.ndarray
    blocks: tuple[np.ndarray, ...]
    column_targets: tuple[int, ...]


@dataclass(frozen=True)
class FeasibilityReport:
    """Pass/fail per feasibility condition, plus the measured extremes."""

    distinct_ok: bool  # (i) no two cameras use identical wavelength sets
    rank_ok: bool  # (ii) numerically full column rank
    determined_ok: bool  # (iii) rows >= columns
    coverage_ok: bool  # every target measured by at least one camera
    sigma_max: float
    sigma_min: float

    @property
    def feasible(self) -> bool:
        return (
            self.distinct_ok and self.rank_ok and self.determined_ok and self.coverage_ok
        )


def build_design_matrix(
    sensor: SensorModel,
    targets: WavelengthSet,
    fwhm_nm: float,
    peak_transmittance: float = 1.0,
) -> DesignMatrix:
    """Compute the C x p design matrix for Gaussian bands at every target."""
    if not sensor.normalized:
        raise ValueError("sensor must be normalized before building D")
    lo, hi = sensor.range_nm
    outside = [w for w in targets.wavelengths_nm if not lo <= w <= hi]
    if outside:
        raise TargetOutOfRangeError(
            f"target wavelength(s) {outside} nm outside sensor range [{lo}, {hi}] nm"
        )
    cols = [
        mixing_coefficients(
            sensor, GaussianBand(w, fwhm_nm, peak_transmittance)
        )
        for w in targets.wavelengths_nm
    ]
    return DesignMatrix(
        np.column_stack(cols), targets, sensor.label, float(fwhm_nm)
    )


def mask_columns(design: DesignMatrix, subset) -> np.ndarray:
    """Copy of D with every column outside the 1-based ``subset`` zeroed."""
    idx = [int(i) for i in subset]
    if not idx:
        raise ValueError("subset must be nonempty")
    if any(not 1 <= i <= design.p for i in idx):
        raise ValueError(f"subset {idx} has indices outside 1..{design.p}")
    masked = np.zeros_like(design.entries)
    cols = [i - 1 for i in idx]
    masked[:, cols] = design.entries[:, cols]
    return masked


def _check_allocation(alloc: Allocation, p: int) -> None:
    canon = {tuple(sorted(s)) for s in alloc.subsets}
    if len(canon) != alloc.n_cameras:
        raise InfeasibleAllocationError(
            "feasibility condition (i) violated: two cameras use identical "
            "wavelength sets"
        )
    covered = alloc.covered_indices()
    if max(covered) > p or covered != set(range(1, p + 1)):
        missing = sorted(set(range(1, p + 1)) - covered)
        extra = sorted(i for i in covered if i > p)
        raise InfeasibleAllocationError(
            f"coverage violated: missing target indices {missing}, "
            f"out-of-range indices {extra}"
        )


def stack_system(d_per_camera, alloc: Allocation) -> SystemMatrix:
    """Stack masked per-camera design blocks into the global system matrix.

    ``d_per_camera`` holds one :class:`DesignMatrix` per camera (the same
    object repeated for matched cameras). Raises
    :class:`InfeasibleAllocationError` when subsets are not pairwise distinct
    or do not cover every target.
    """
    designs = list(d_per_camera)
    if len(designs) != alloc.n_cameras:
        raise ValueError(
            f"{len(designs)} design matrices for {alloc.n_cameras} camera subsets"
        )
    p = designs[0].p
    targets = designs[0].targets
    for d in designs:
        if d.targets != targets:
            raise ValueError("all cameras must share the same target wavelengths")
    _check_allocation(alloc, p)
    blocks = []
    row_blocks = []
    start = 0
    for d, subset in zip(designs, alloc.subsets):
        block = mask_columns(d, subset)
        blocks.append(block)
        row_blocks.append((start, start + block.shape[0]))
        start += block.shape[0]
    return SystemMatrix(
        np.vstack(blocks),
        alloc,
        targets,
        tuple(row_blocks),
        tuple(d.sensor_label for d in designs),
    )


def block_diag_factor(system: SystemMatrix) -> BlockFactorization:
    """Factor a minimum-case system as A = B @ P (block diagonal x permutation).

    Requires the square minimum case: every camera block is C x C with k = C,
    the total row count equals p, and the allocation partitions the target
    set (no repeated wavelength). Raises :class:`NotMinimumCaseError`
    otherwise.
    """
    alloc = system.allocation
    p = system.targets.p
    rows, cols = system.shape
    k = alloc.k
    if rows != p or cols != p:
        raise NotMinimumCaseError(f"system is {rows}x{cols}, need square p x p")
    subset_sizes = sum(len(s) for s in alloc.subsets)
    if subset_sizes != p or alloc.covered_indices() != set(range(1, p + 1)):
        raise NotMinimumCaseError(
            "allocation must partition the target set (no repeated wavelength)"
        )
    blocks = []
    column_targets: list[int] = []
    for i, subset in enumerate(alloc.subsets):
        ordered = sorted(subset)
        block_rows = system.camera_block(i)
        if block_rows.shape[0] != k:
            raise NotMinimumCaseError(
                f"camera {i} has {block_rows.shape[0]} channels, need k = {k}"
            )
        blocks.append(block_rows[:, [j - 1 for j in ordered]])
        column_targets.extend(j - 1 for j in ordered)
    b = np.zeros((p, p))
    for i, blk in enumerate(blocks):
        b[i * k : (i + 1) * k, i * k : (i + 1) * k] = blk
    perm = np.zeros((p, p))
    perm[np.arange(p), column_targets] = 1.0
    return BlockFactorization(
        b, perm, tuple(blocks), tuple(column_targets)
    )


def check_feasibility(alloc: Allocation, system: SystemMatrix) -> FeasibilityReport:
    """Report conditions (i)-(iii) plus coverage for one allocation/system."""
    distinct = len({tuple(sorted(s)) for s in alloc.subsets}) == alloc.n_cameras
    p = system.targets.p
    coverage = alloc.covered_indices() == set(range(1, p + 1))
    rows = system.shape[0]
    determined = rows >= p
    sv = np.linalg.svd(system.entries, compute_uv=False)
    sigma_max = float(sv[0])
    sigma_min = float(sv[-1]) if rows >= p else 0.0
    rank = determined and sigma_min > RANK_RTOL * sigma_max
    return FeasibilityReport(
        distinct_ok=distinct,
        rank_ok=bool(rank),
        determined_ok=determined,
        coverage_ok=coverage,
        sigma_max=sigma_max,
        sigma_min=sigma_min,
    )
