"""Counting, enumeration, and unranking of feasible wavelength allocations.

A feasible allocation assigns each of ``n_cam`` cameras a distinct k-element
subset of the p target wavelengths such that every wavelength is covered.
Because the cameras are interchangeable, allocations are unordered
collections of subsets; the canonical encoding sorts each subset ascending
and orders the subsets lexicographically, and enumeration streams canonical
encodings in lexicographic order.

Counting uses inclusion-exclusion over the omitted wavelengths:

    card = sum_i (-1)^i * C(p, i) * C(C(p - i, k), n_cam)

with exact integer arithmetic (the inner binomials overflow 64-bit). Terms
where fewer than n_cam subsets remain vanish. In the minimum case
(n_cam * k = p) the count collapses to p! / (n_cam! * k!^n_cam).

The enumeration index range [0, card) can be split into chunks and each chunk
decoded independently: :func:`unrank_allocation` recovers the allocation at
any index, and :func:`enumerate_allocations` can resume from it, so parallel
consumers share no mutable state.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from math import comb, factorial
from pathlib import Path

import numpy as np

from .assembly import Allocation
from .errors import CorruptTableError, IndexTableIOError, NotMinimumCaseError


@dataclass(frozen=True)
class SearchSpaceSpec:
    """Search-space dimensions: p targets, k bands per filter, n_cam cameras."""

    p: int
    k: int
    n_cam: int

    def __post_init__(self):
        if not 1 <= self.k <= self.p:
            raise ValueError(f"need 1 <= k <= p, got k={self.k}, p={self.p}")
        if self.n_cam < 1:
            raise ValueError("n_cam must be >= 1")
        if self.n_cam * self.k < self.p:
            raise ValueError(
                "feasibility condition (iii) violated: "
                f"n_cam*k = {self.n_cam * self.k} < p = {self.p}, "
                "the cameras cannot cover every target wavelength"
            )

    @property
    def is_minimum(self) -> bool:
        return self.n_cam * self.k == self.p

    @property
    def row_width(self) -> int:
        return self.n_cam * self.k


def count_feasible(spec: SearchSpaceSpec) -> int:
    """Exact number of feasible allocations (inclusion-exclusion)."""
    p, k, n = spec.p, spec.k, spec.n_cam
    return sum(
        (-1) ** i * comb(p, i) * comb(comb(p - i, k), n) for i in range(p + 1)
    )


def count_minimum(spec: SearchSpaceSpec) -> int:
    """Exact allocation count in the minimum case, p! / (n! * k!^n)."""
    if not spec.is_minimum:
        raise NotMinimumCaseError(
            f"n_cam*k = {spec.n_cam * spec.k} != p = {spec.p}"
        )
    return factorial(spec.p) // (
        factorial(spec.n_cam) * factorial(spec.k) ** spec.n_cam
    )


class _Universe:
    """Lex-ordered k-subsets of {1..p} with bitmask and coverage tables."""

    def __init__(self, p: int, k: int):
        self.p = p
        self.k = k
        self.subsets = tuple(itertools.combinations(range(1, p + 1), k))
        self.masks = tuple(
            sum(1 << (e - 1) for e in s) for s in self.subsets
        )
        self.full = (1 << p) - 1
        # suffix_or[s] = union of all subsets with rank >= s
        suffix = [0] * (len(self.subsets) + 1)
        for s in range(len(self.subsets) - 1, -1, -1):
            suffix[s] = suffix[s + 1] | self.masks[s]
        self.suffix_or = tuple(suffix)
        self.rank_of = {s: r for r, s in enumerate(self.subsets)}
        # lazy caches: k-subset ranks per restricted alphabet / per covered need
        self._alphabet_ranks: dict[int, list[int]] = {}
        self._covering: dict[int, list[int]] = {}

    def alphabet_ranks(self, alphabet_mask: int) -> list[int]:
        """Sorted global ranks of the k-subsets within ``alphabet_mask``."""
        try:
            return self._alphabet_ranks[alphabet_mask]
        except KeyError:
            elements = [
                e for e in range(1, self.p + 1) if alphabet_mask >> (e - 1) & 1
            ]
            ranks = sorted(
                self.rank_of[s] for s in itertools.combinations(elements, self.k)
            )
            self._alphabet_ranks[alphabet_mask] = ranks
            return ranks

    def count_above(self, alphabet_mask: int, last_rank: int) -> int:
        """Number of k-subsets within the alphabet with rank > last_rank."""
        ranks = self.alphabet_ranks(alphabet_mask)
        return len(ranks) - bisect_right(ranks, last_rank)

    def covering_ranks(self, need_mask: int) -> list[int]:
        """Sorted ranks of the subsets whose mask includes every bit of need."""
        try:
            return self._covering[need_mask]
        except KeyError:
            ranks = [
                r for r, m in enumerate(self.masks) if m & need_mask == need_mask
            ]
            self._covering[need_mask] = ranks
            return ranks


_universe_cache: dict[tuple[int, int], _Universe] = {}


def _universe(p: int, k: int) -> _Universe:
    key = (p, k)
    if key not in _universe_cache:
        _universe_cache[key] = _Universe(p, k)
    return _universe_cache[key]


def _count_completions(
    uni: _Universe, last_rank: int, uncovered: int, remaining: int
) -> int:
    """Count increasing rank sequences finishing an allocation prefix.

    Counts the ways to pick ``remaining`` distinct subsets, all of rank
    greater than ``last_rank``, whose union includes every element of
    ``uncovered``. Inclusion-exclusion over the subset of ``uncovered``
    elements that end up missed; subsets avoiding the missed elements live in
    a restricted alphabet.
    """
    if remaining == 0:
        return 1 if uncovered == 0 else 0
    total = 0
    t = uncovered
    while True:
        m = uni.count_above(uni.full & ~t, last_rank)
        term = comb(m, remaining)
        total += -term if (t.bit_count() & 1) else term
        if t == 0:
            break
        t = (t - 1) & uncovered
    return total


def _rank_tuples(spec: SearchSpaceSpec, start_ranks=None):
    """Yield allocations as tuples of subset ranks, in lexicographic order.

    ``start_ranks`` resumes the stream at a given allocation (inclusive).
    """
    uni = _universe(spec.p, spec.k)
    n, k, full = spec.n_cam, spec.k, uni.full
    masks, suffix_or = uni.masks, uni.suffix_or
    n_subsets = len(uni.subsets)
    current = [0] * n

    def walk(level: int, last: int, covered: int, lower: tuple[int, ...] | None):
        slots_after = n - level - 1
        lo = lower[level] if lower is not None else last + 1
        for s in range(lo, n_subsets - slots_after):
            new_cov = covered | masks[s]
            need = full & ~new_cov
            if need:
                if need.bit_count() > slots_after * k:
                    continue
                if need & ~suffix_or[s + 1]:
                    continue
            current[level] = s
            if slots_after == 0:
                yield tuple(current)
            else:
                # only the first descent along the resume path keeps lower bounds
                sub_lower = lower if (lower is not None and s == lo) else None
                yield from walk(level + 1, s, new_cov, sub_lower)

    yield from walk(0, -1, 0, tuple(start_ranks) if start_ranks else None)


def unrank_allocation(spec: SearchSpaceSpec, index: int) -> Allocation:
    """Return the allocation at a given position of the enumeration order."""
    total = count_feasible(spec)
    if not 0 <= index < total:
        raise IndexError(f"index {index} outside [0, {total})")
    uni = _universe(spec.p, spec.k)
    n, k, full = spec.n_cam, spec.k, uni.full
    n_subsets = len(uni.subsets)
    residual = index
    ranks = []
    last, covered = -1, 0
    for level in range(n):
        slots_after = n - level - 1
        for s in range(last + 1, n_subsets - slots_after):
            new_cov = covered | uni.masks[s]
            need = full & ~new_cov
            if need:
                if need.bit_count() > slots_after * k:
                    continue
                if need & ~uni.suffix_or[s + 1]:
                    continue
            here = _count_completions(uni, s, need, slots_after)
            if residual < here:
                ranks.append(s)
                last, covered = s, new_cov
                break
            residual -= here
        else:  # pragma: no cover - guarded by the index range check
            raise IndexError("ran out of candidates while unranking")
    return Allocation(tuple(uni.subsets[r] for r in ranks), canonical=True)


def enumerate_allocations(spec: SearchSpaceSpec, start: int = 0, stop=None):
    """Stream every feasible allocation in canonical lexicographic order.

    ``start``/``stop`` select a half-open index slice of the stream;
    ``start`` is located by unranking, so a slice does not pay for the
    allocations before it.
    """
    start_ranks = None
    if start:
        uni = _universe(spec.p, spec.k)
        first = unrank_allocation(spec, start)
        start_ranks = tuple(uni.rank_of[s] for s in first.subsets)
    uni = _universe(spec.p, spec.k)
    count = stop - start if stop is not None else None
    for i, ranks in enumerate(_rank_tuples(spec, start_ranks)):
        if count is not None and i >= count:
            return
        yield Allocation(tuple(uni.subsets[r] for r in ranks), canonical=True)


class _WalkDone(Exception):
    """Internal: no further samples can occur, abandon the walk."""


def iter_encoding_blocks(
    spec: SearchSpaceSpec,
    block_size: int = 8192,
    start: int = 0,
    stop=None,
    stride: int = 1,
    offset: int = 0,
):
    """Yield (indices, encodings) blocks of the enumeration stream.

    ``indices`` is a (B,) int64 array of global enumeration positions and
    ``encodings`` a (B, n_cam*k) int64 array of canonical 1-based wavelength
    indices. ``stride``/``offset`` subsample the stream deterministically
    (every stride-th allocation counted from ``start``). This is the bulk
    interface the optimizer consumes; it avoids materializing one object per
    allocation, and when striding it skips non-sampled tail nodes without
    touching their allocations.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    uni = _universe(spec.p, spec.k)
    n, k, full = spec.n_cam, spec.k, uni.full
    masks, suffix_or = uni.masks, uni.suffix_or
    covering = uni.covering_ranks
    n_subsets = len(uni.subsets)
    lower = None
    if start:
        first = unrank_allocation(spec, start)
        lower = tuple(uni.rank_of[s] for s in first.subsets)
    subset_rows = np.array(uni.subsets, dtype=np.int64)  # (M, k)

    current = [0] * n
    buf: list[tuple[int, ...]] = []
    buf_idx: list[int] = []
    state = {"pos": start, "next": start + offset % stride}
    if stop is not None and state["next"] >= stop:
        return

    def deepest(last: int, covered: int, on_path: bool):
        # Last camera: every remaining candidate must cover all missing targets.
        pos, nxt = state["pos"], state["next"]
        ranks = covering(full & ~covered)
        if on_path:
            i = bisect_left(ranks, lower[n - 1])
        else:
            i = bisect_right(ranks, last)
        cnt = len(ranks) - i
        if cnt <= 0:
            return
        if pos + cnt <= nxt:  # no sample in this node, jump over it
            state["pos"] = pos + cnt
            return
        for j in range(i, len(ranks)):
            if pos == nxt:
                current[n - 1] = ranks[j]
                buf.append(tuple(current))
                buf_idx.append(pos)
                nxt += stride
                if stop is not None and nxt >= stop:
                    state["pos"], state["next"] = pos + 1, nxt
                    raise _WalkDone
            pos += 1
        state["pos"], state["next"] = pos, nxt

    def collect(level: int, last: int, covered: int, on_path: bool):
        # Second-to-last camera (level n-2): plain scan, then close out.
        lo = lower[level] if on_path else last + 1
        for s in range(lo, n_subsets - 1):
            m = masks[s]
            new_cov = covered | m
            need = full & ~new_cov
            if need:
                if need.bit_count() > k:
                    continue
                if need & ~suffix_or[s + 1]:
                    continue
            current[level] = s
            deepest(s, new_cov, on_path and s == lo)

    def prefixes(level: int, last: int, covered: int, on_path: bool):
        # Generator over cameras 0..n-3; yields once per completed subtree
        # so the caller can flush blocks. Recursion depth stays tiny.
        slots_after = n - level - 1
        lo = lower[level] if on_path else last + 1
        for s in range(lo, n_subsets - slots_after):
            m = masks[s]
            new_cov = covered | m
            need = full & ~new_cov
            if need:
                if need.bit_count() > slots_after * k:
                    continue
                if need & ~suffix_or[s + 1]:
                    continue
            current[level] = s
            sub_path = on_path and s == lo
            if slots_after == 2:
                collect(level + 1, s, new_cov, sub_path)
                yield None
            else:
                yield from prefixes(level + 1, s, new_cov, sub_path)

    def flush(limit: int):
        take = min(limit, len(buf))
        ranks_arr = np.array(buf[:take], dtype=np.int64)  # (take, n)
        enc = subset_rows[ranks_arr].reshape(take, spec.row_width)
        idx = np.array(buf_idx[:take], dtype=np.int64)
        del buf[:take]
        del buf_idx[:take]
        return idx, enc

    try:
        if n == 1:
            deepest(-1, 0, lower is not None)
        elif n == 2:
            collect(0, -1, 0, lower is not None)
        else:
            for _ in prefixes(0, -1, 0, lower is not None):
                while len(buf) >= block_size:
                    yield flush(block_size)
    except _WalkDone:
        pass
    while buf:
        yield flush(block_size)


@dataclass(frozen=True, eq=False)
class IndexTable:
    """Precomputed allocation table: one row of n_cam*k indices per row.

    Row j holds the canonical encoding of the j-th enumerated allocation,
    the first k entries being the wavelength indices of the first filter,
    the next k the second, and so on.
    """

    rows: np.ndarray
    spec: SearchSpaceSpec

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != self.spec.row_width:
            raise ValueError(
                f"rows must be (n, {self.spec.row_width}), got {rows.shape}"
            )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexTable):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.rows, other.rows)

    def allocation(self, row: int) -> Allocation:
        k = self.spec.k
        enc = self.rows[row]
        return Allocation(
            tuple(
                tuple(int(i) for i in enc[c * k : (c + 1) * k])
                for c in range(self.spec.n_cam)
            ),
            canonical=True,
        )


# build_index_table materializes every row; refuse sizes that would not fit.
MAX_TABLE_ROWS = 5_000_000


def build_index_table(spec: SearchSpaceSpec) -> IndexTable:
    """Materialize the full allocation table in enumeration order."""
    total = count_feasible(spec)
    if total > MAX_TABLE_ROWS:
        raise ValueError(
            f"{total} allocations exceed the in-memory table limit "
            f"({MAX_TABLE_ROWS}); stream with write_index_table instead"
        )
    blocks = [enc for _, enc in iter_encoding_blocks(spec)]
    if not blocks:
        rows = np.empty((0, spec.row_width), dtype=np.int64)
    else:
        rows = np.vstack(blocks)
    return IndexTable(rows, spec)


def save_index_table(table: IndexTable, path) -> None:
    """Write a table as CSV: no header, one comma-separated row per allocation."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for row in table.rows:
                fh.write(",".join(str(int(v)) for v in row))
                fh.write("\n")
    except OSError as exc:
        raise IndexTableIOError(f"cannot write index table {path}: {exc}") from exc


def write_index_table(spec: SearchSpaceSpec, path) -> int:
    """Stream the full enumeration straight to a CSV file; returns row count."""
    n = 0
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for _, enc in iter_encoding_blocks(spec):
                for row in enc:
                    fh.write(",".join(str(int(v)) for v in row))
                    fh.write("\n")
                n += enc.shape[0]
    except OSError as exc:
        raise IndexTableIOError(f"cannot write index table {path}: {exc}") from exc
    return n


def load_index_table(path, spec: SearchSpaceSpec) -> IndexTable:
    """Read and validate an index-table CSV written by this toolkit.

    Every row must decode to a feasible canonical allocation, rows must be
    strictly increasing in lexicographic order (which also rules out
    duplicates), and the row count must match the exact feasible count.
    Violations raise :class:`CorruptTableError` with the offending line.
    """
    width = spec.row_width
    k, p = spec.k, spec.p
    full = set(range(1, p + 1))
    rows = []
    prev = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IndexTableIOError(f"cannot read index table {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                enc = tuple(int(v) for v in line.split(","))
            except ValueError as exc:
                raise CorruptTableError(f"{path}:{lineno}: not integers") from exc
            if len(enc) != width:
                raise CorruptTableError(
                    f"{path}:{lineno}: expected {width} indices, got {len(enc)}"
                )
            subsets = [enc[c * k : (c + 1) * k] for c in range(spec.n_cam)]
            for s in subsets:
                if tuple(sorted(s)) != s or len(set(s)) != k:
                    raise CorruptTableError(
                        f"{path}:{lineno}: subset {s} not sorted-distinct"
                    )
                if any(not 1 <= i <= p for i in s):
                    raise CorruptTableError(
                        f"{path}:{lineno}: index outside 1..{p}"
                    )
            if len(set(subsets)) != spec.n_cam:
                raise CorruptTableError(f"{path}:{lineno}: repeated subsets")
            if list(subsets) != sorted(subsets):
                raise CorruptTableError(
                    f"{path}:{lineno}: subsets not in canonical order"
                )
            if set().union(*subsets) != full:
                raise CorruptTableError(
                    f"{path}:{lineno}: row does not cover every target"
                )
            if prev is not None and enc <= prev:
                raise CorruptTableError(
                    f"{path}:{lineno}: rows not in enumeration order"
                )
            prev = enc
            rows.append(enc)
    expected = count_feasible(spec)
    if len(rows) != expected:
        raise CorruptTableError(
            f"{path}: {len(rows)} rows, expected {expected} (truncated or padded)"
        )
    return IndexTable(np.array(rows, dtype=np.int64), spec)
