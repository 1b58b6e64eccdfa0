"""Spectral conditioning of system matrices and the exhaustive argmin search.

The design criterion is the spectral condition number kappa = sigma_max /
sigma_min of the stacked system matrix: minimizing kappa over all feasible
allocations maximizes the worst-case output SNR, which can degrade by at most
a factor 1/kappa^2 under adversarial signal/noise alignment. The frame bounds
C1 = sigma_min^2 and C2 = sigma_max^2 are the tightest constants with
C1*||x||^2 <= ||Ax||^2 <= C2*||x||^2.

The optimizer evaluates condition numbers in vectorized blocks of the
enumeration stream. Blocks may be processed by a thread pool; results are
merged by value (kappa, then canonical encoding), so the outcome is
identical for any chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .assembly import (
    RANK_RTOL,
    Allocation,
    DesignMatrix,
    SystemMatrix,
    WavelengthSet,
    stack_system,
)
from .enumeration import SearchSpaceSpec, iter_encoding_blocks
from .errors import NoFeasibleAllocationError

# Relative kappa gap below which two allocations count as tied and the
# lexicographically smaller canonical encoding wins.
KAPPA_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ConditioningReport:
    """Singular-value summary of one system matrix.

    ``frame_lower``/``frame_upper`` are the tight frame bounds (extremal
    eigenvalues of A^T A); ``snr_worst_factor`` is the worst-case output-SNR
    degradation 1/kappa^2. A rank-deficient matrix gets ``rank_ok=False`` and
    infinite kappa.
    """

    sigma_max: float
    sigma_min: float
    kappa: float
    frame_lower: float
    frame_upper: float
    snr_worst_factor: float
    rank_ok: bool
    singular_values: tuple[float, ...]


@dataclass(frozen=True)
class RankingResult:
    """Outcome of the exhaustive search over feasible allocations."""

    best: tuple[Allocation, ConditioningReport]
    top: tuple[tuple[Allocation, ConditioningReport], ...]
    evaluated_count: int
    infeasible_rank_count: int
    spec: SearchSpaceSpec
    sample_stride: int = 1


class WorstCaseSnr(NamedTuple):
    predicted: float
    empirical: float


def conditioning(system) -> ConditioningReport:
    """Full-SVD conditioning report for a system matrix (or plain 2-D array)."""
    a = system.entries if isinstance(system, SystemMatrix) else np.asarray(system)
    rows, cols = a.shape
    if rows < cols:
        raise ValueError(
            f"system is underdetermined ({rows}x{cols}); conditioning is defined "
            "for determined or overdetermined systems"
        )
    sv = np.linalg.svd(a, compute_uv=False)
    smax = float(sv[0])
    smin = float(sv[-1])
    rank_ok = smin > RANK_RTOL * smax
    kappa = smax / smin if rank_ok else math.inf
    return ConditioningReport(
        sigma_max=smax,
        sigma_min=smin,
        kappa=kappa,
        frame_lower=smin**2,
        frame_upper=smax**2,
        snr_worst_factor=1.0 / kappa**2 if rank_ok else 0.0,
        rank_ok=rank_ok,
        singular_values=tuple(float(s) for s in sv),
    )


def _resolve_designs(d_per_camera, n_cam: int) -> list[DesignMatrix]:
    if isinstance(d_per_camera, DesignMatrix):
        designs = [d_per_camera] * n_cam
    else:
        designs = list(d_per_camera)
        if len(designs) == 1:
            designs = designs * n_cam
    if len(designs) != n_cam:
        raise ValueError(f"{len(designs)} design matrices for {n_cam} cameras")
    return designs


def _assemble_stack(designs: list[DesignMatrix], enc: np.ndarray, k: int) -> np.ndarray:
    """Build (B, total_rows, p) stacked system matrices for an encoding block."""
    b = enc.shape[0]
    p = designs[0].p
    total_rows = sum(d.n_channels for d in designs)
    out = np.zeros((b, total_rows, p))
    bidx = np.arange(b)[:, None, None]
    row = 0
    for cam, d in enumerate(designs):
        c = d.n_channels
        cols = enc[:, cam * k : (cam + 1) * k] - 1  # (B, k), 0-based
        sub = np.moveaxis(d.entries[:, cols], 1, 0)  # (B, C, k)
        rows = (row + np.arange(c))[None, :, None]
        out[bidx, rows, cols[:, None, :]] = sub
        row += c
    return out


def _eval_block(designs, k: int, indices: np.ndarray, enc: np.ndarray, keep: int):
    """Condition numbers for one block; returns candidates and counts.

    Candidates are the block's ``keep`` smallest kappas plus everything tied
    with the block minimum, each as (kappa, encoding tuple, global index).
    """
    stacked = _assemble_stack(designs, enc, k)
    sv = np.linalg.svd(stacked, compute_uv=False)
    smax = sv[:, 0]
    smin = sv[:, -1]
    ok = smin > RANK_RTOL * smax
    n_bad = int(np.count_nonzero(~ok))
    kappas = np.full(enc.shape[0], np.inf)
    np.divide(smax, smin, out=kappas, where=ok)
    candidates = []
    if ok.any():
        kmin = float(kappas[ok].min())
        tie_cut = kmin * (1.0 + KAPPA_TIE_RTOL)
        pick = {int(j) for j in np.argsort(kappas, kind="stable")[:keep] if ok[j]}
        pick.update(int(j) for j in np.flatnonzero(kappas <= tie_cut))
        candidates = [
            (float(kappas[j]), tuple(int(v) for v in enc[j]), int(indices[j]))
            for j in sorted(pick)
        ]
    return candidates, enc.shape[0], n_bad, indices, kappas


def optimize(
    d_per_camera,
    spec: SearchSpaceSpec,
    targets: WavelengthSet | None = None,
    top_m: int = 10,
    *,
    threads: int = 1,
    block_size: int = 8192,
    sample_stride: int = 1,
    sample_offset: int = 0,
    kappa_sink=None,
) -> RankingResult:
    """Exhaustively evaluate kappa for every feasible allocation; return argmin.

    ``d_per_camera`` is one :class:`DesignMatrix` per camera (a single matrix
    is replicated for matched cameras). Rank-deficient allocations are counted
    and excluded from the ranking. ``sample_stride`` evaluates a deterministic
    subsample (every stride-th allocation) for very large redundant searches.
    ``kappa_sink``, when given, receives ``(indices, kappas)`` arrays for every
    evaluated block, in enumeration order (e.g. to log a per-allocation CSV).

    The result is deterministic for any ``threads``/``block_size``: blocks are
    merged by (kappa, canonical encoding), and near-ties within 1e-12 relative
    kappa resolve to the lexicographically smallest encoding.
    """
    designs = _resolve_designs(d_per_camera, spec.n_cam)
    if designs[0].p != spec.p:
        raise ValueError(f"design matrix has p={designs[0].p}, spec has p={spec.p}")
    if targets is None:
        targets = designs[0].targets
    keep = max(top_m, 1)
    blocks = iter_encoding_blocks(
        spec, block_size=block_size, stride=sample_stride, offset=sample_offset
    )

    candidates: list[tuple[float, tuple[int, ...], int]] = []
    evaluated = 0
    rank_deficient = 0
    sink_buffer: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    sink_next = [0]

    def absorb(result, block_no: int):
        nonlocal evaluated, rank_deficient
        cand, n_eval, n_bad, indices, kappas = result
        candidates.extend(cand)
        evaluated += n_eval
        rank_deficient += n_bad
        if kappa_sink is not None:
            sink_buffer[block_no] = (indices, kappas)
            while sink_next[0] in sink_buffer:
                kappa_sink(*sink_buffer.pop(sink_next[0]))
                sink_next[0] += 1

    if threads <= 1:
        for block_no, (indices, enc) in enumerate(blocks):
            absorb(_eval_block(designs, spec.k, indices, enc, keep), block_no)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = {}
            for block_no, (indices, enc) in enumerate(blocks):
                fut = pool.submit(_eval_block, designs, spec.k, indices, enc, keep)
                pending[fut] = block_no
                if len(pending) >= threads * 2:
                    done, _ = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        absorb(fut.result(), pending.pop(fut))
            for fut, block_no in pending.items():
                absorb(fut.result(), block_no)

    if not any(math.isfinite(c[0]) for c in candidates):
        raise NoFeasibleAllocationError(
            "every feasible allocation is numerically rank-deficient"
        )

    candidates.sort(key=lambda c: (c[0], c[1]))
    kmin = candidates[0][0]
    tie_cut = kmin * (1.0 + KAPPA_TIE_RTOL)
    best_enc = min(c[1] for c in candidates if c[0] <= tie_cut)

    def to_entry(enc: tuple[int, ...]):
        alloc = _decode(enc, spec)
        return alloc, conditioning(stack_system(designs, alloc))

    top_entries = []
    seen = set()
    for kappa, enc, _ in candidates:
        if not math.isfinite(kappa) or enc in seen:
            continue
        seen.add(enc)
        top_entries.append(to_entry(enc))
        if len(top_entries) >= top_m:
            break
    best_entry = to_entry(best_enc)
    return RankingResult(
        best=best_entry,
        top=tuple(top_entries),
        evaluated_count=evaluated,
        infeasible_rank_count=rank_deficient,
        spec=spec,
        sample_stride=sample_stride,
    )


def _decode(encoding: tuple[int, ...], spec: SearchSpaceSpec) -> Allocation:
    k = spec.k
    return Allocation(
        tuple(
            tuple(encoding[c * k : (c + 1) * k]) for c in range(spec.n_cam)
        ),
        canonical=True,
    )


def worst_case_snr_demo(system, sigma_noise: float = 1.0) -> WorstCaseSnr:
    """Reproduce the worst-case output-SNR degradation 1/kappa^2.

    Builds the adversarial pair: the signal along the right-singular vector
    of sigma_min (weakest forward gain) and measurement noise along the
    left-singular vector of sigma_max (whose preimage carries the strongest
    forward gain). Input SNR compares signal and noise energies in the
    spectral domain, output SNR in the measurement domain; their ratio is
    predicted to be exactly 1/kappa^2.
    """
    a = system.entries if isinstance(system, SystemMatrix) else np.asarray(system)
    u, sv, vt = np.linalg.svd(a, full_matrices=False)
    if not sv[-1] > RANK_RTOL * sv[0]:
        raise ValueError("worst-case construction requires a full-rank system")
    kappa = float(sv[0] / sv[-1])
    x = vt[-1]  # unit signal, weakest direction
    noise = sigma_noise * u[:, 0]  # measurement noise, strongest direction
    noise_in_x = np.linalg.lstsq(a, noise, rcond=None)[0]
    input_snr = float(
        (x @ x) / (noise_in_x @ noise_in_x)
    )
    y = a @ x
    output_snr = float((y @ y) / (noise @ noise))
    return WorstCaseSnr(predicted=1.0 / kappa**2, empirical=output_snr / input_snr)
