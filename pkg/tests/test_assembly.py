import numpy as np
import pytest

from msidesign import (
    Allocation,
    DesignMatrix,
    SensorModel,
    SpectralCurve,
    SystemMatrix,
    WavelengthSet,
    block_diag_factor,
    build_design_matrix,
    check_feasibility,
    mask_columns,
    stack_system,
)
from msidesign.errors import (
    InfeasibleAllocationError,
    NotMinimumCaseError,
    TargetOutOfRangeError,
    ZeroColumnError,
)

from conftest import constant_sensor
from oracles import simpson_mixing
from msidesign.spectral import GaussianBand

GAUSS_UNIT_AREA = 10.644670194312262

BEST_ALLOC_12 = Allocation(((1, 3, 9), (2, 4, 12), (5, 6, 11), (7, 8, 10)), canonical=True)


def random_design(rng, channels, p, targets=None):
    if targets is None:
        targets = WavelengthSet(tuple(400.0 + 10.0 * i for i in range(p)))
    entries = rng.uniform(0.05, 1.0, size=(channels, p))
    return DesignMatrix(entries, targets, "random", 10.0)


class TestWavelengthSet:
    def test_orders_and_counts(self):
        ws = WavelengthSet((410.0, 430.0, 450.0))
        assert ws.p == 3
        assert ws.index_of(430.0) == 2

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError, match="increasing"):
            WavelengthSet((430.0, 410.0))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="increasing"):
            WavelengthSet((410.0, 410.0))

    def test_unknown_wavelength(self):
        with pytest.raises(KeyError):
            WavelengthSet((410.0, 430.0)).index_of(999.0)


class TestAllocation:
    def test_canonicalize_sorts_subsets_and_order(self):
        a = Allocation(((9, 1, 3), (4, 2, 12), (11, 5, 6), (10, 7, 8)))
        assert a.canonicalize().subsets == BEST_ALLOC_12.subsets

    def test_canonical_flag_validated(self):
        with pytest.raises(ValueError, match="sorted"):
            Allocation(((3, 1, 9),), canonical=True)
        with pytest.raises(ValueError, match="lexicographic"):
            Allocation(((4, 5, 6), (1, 2, 3)), canonical=True)

    def test_subsets_must_share_size(self):
        with pytest.raises(ValueError, match="same size"):
            Allocation(((1, 2), (3, 4, 5)))

    def test_indices_distinct_within_subset(self):
        with pytest.raises(ValueError, match="repeated"):
            Allocation(((1, 1, 2),))

    def test_one_based_indices(self):
        with pytest.raises(ValueError, match="1-based"):
            Allocation(((0, 1, 2),))

    def test_encoding_flattens_canonical_form(self):
        a = Allocation(((4, 2, 12), (9, 1, 3), (11, 5, 6), (10, 7, 8)))
        assert a.encoding() == (1, 3, 9, 2, 4, 12, 5, 6, 11, 7, 8, 10)

    def test_feasibility_predicate(self):
        assert BEST_ALLOC_12.is_feasible(12)
        assert not BEST_ALLOC_12.is_feasible(13)
        assert not Allocation(((1, 2), (1, 2))).is_feasible(2)

    def test_from_wavelengths_round_trip(self, targets12):
        groups = BEST_ALLOC_12.wavelengths(targets12)
        back = Allocation.from_wavelengths(groups, targets12)
        assert back.subsets == BEST_ALLOC_12.subsets


class TestBuildDesignMatrix:
    def test_shape_is_channels_by_targets(self, sensor, targets12, design12):
        assert design12.entries.shape == (3, 12)
        assert design12.sensor_label == "synth_r+synth_g+synth_b"
        assert design12.filter_fwhm_nm == 10.0

    def test_constant_channel_columns(self):
        sensor = constant_sensor()
        targets = WavelengthSet((500.0, 600.0))
        d = build_design_matrix(sensor, targets, fwhm_nm=10.0)
        assert d.entries == pytest.approx(
            np.full((1, 2), GAUSS_UNIT_AREA), rel=1e-9
        )

    def test_matches_fine_quadrature_per_entry(self, toy_sensor):
        targets = WavelengthSet((450.0, 480.0, 520.0, 560.0))
        d = build_design_matrix(toy_sensor, targets, fwhm_nm=10.0)
        for c, curve in enumerate(toy_sensor.channels):
            for i, w in enumerate(targets.wavelengths_nm):
                oracle = simpson_mixing(
                    toy_sensor.wavelengths_nm, curve.values, GaussianBand(w, 10.0)
                )
                if oracle > 1e-6:
                    assert d.entries[c, i] == pytest.approx(oracle, rel=1e-4)
                else:
                    assert d.entries[c, i] <= 1e-6

    def test_target_out_of_range(self, sensor):
        with pytest.raises(TargetOutOfRangeError):
            build_design_matrix(sensor, WavelengthSet((300.0, 500.0)), 10.0)

    def test_zero_column_rejected(self):
        # channel supported only below 580 nm; a target at 780 nm underflows
        grid = np.arange(400.0, 800.0)
        values = np.maximum(0.0, 1.0 - np.abs(grid - 490.0) / 90.0)
        sensor = SensorModel((SpectralCurve(grid, values, "c"),), normalized=True)
        with pytest.raises(ZeroColumnError):
            build_design_matrix(sensor, WavelengthSet((490.0, 780.0)), 10.0)

    def test_requires_normalized_sensor(self, targets12):
        from msidesign import synthetic_rgb_sensor

        with pytest.raises(ValueError, match="normalized"):
            build_design_matrix(synthetic_rgb_sensor(), targets12, 10.0)


class TestMaskColumns:
    def test_full_subset_is_identity(self, design12):
        assert np.array_equal(
            mask_columns(design12, range(1, 13)), design12.entries
        )

    def test_single_column(self):
        rng = np.random.default_rng(1)
        d = random_design(rng, 3, 3)
        masked = mask_columns(d, [1])
        assert np.array_equal(masked[:, 0], d.entries[:, 0])
        assert not masked[:, 1:].any()

    def test_empty_subset_rejected(self, design12):
        with pytest.raises(ValueError, match="nonempty"):
            mask_columns(design12, [])

    def test_out_of_range_subset_rejected(self, design12):
        with pytest.raises(ValueError, match="1..12"):
            mask_columns(design12, [0, 1])

    def test_masked_product_equals_reduced_system(self, design12):
        # D_K x == A_{s,K} x_K where A_{s,K} keeps only the columns in K
        rng = np.random.default_rng(7)
        for _ in range(20):
            subset = sorted(rng.choice(12, size=3, replace=False) + 1)
            x = rng.normal(size=12)
            reduced = design12.entries[:, [i - 1 for i in subset]]
            lhs = mask_columns(design12, subset) @ x
            rhs = reduced @ x[[i - 1 for i in subset]]
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestStackSystem:
    def test_paper_setting_shape_and_sparsity(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        assert system.shape == (12, 12)
        assert (np.count_nonzero(system.entries, axis=1) == 3).all()

    def test_single_camera_full_filter_is_design(self):
        rng = np.random.default_rng(3)
        d = random_design(rng, 3, 3)
        system = stack_system([d], Allocation(((1, 2, 3),)))
        assert np.array_equal(system.entries, d.entries)

    def test_five_camera_redundant_shape(self, design12):
        alloc = Allocation(
            ((1, 2, 3), (4, 5, 6), (7, 8, 9), (10, 11, 12), (1, 5, 9))
        )
        system = stack_system([design12] * 5, alloc)
        assert system.shape == (15, 12)

    def test_identical_subsets_rejected(self, design12):
        alloc = Allocation(((1, 2, 3), (1, 2, 3), (4, 5, 6), (7, 8, 9)))
        with pytest.raises(InfeasibleAllocationError, match=r"\(i\)"):
            stack_system([design12] * 4, alloc)

    def test_coverage_gap_rejected(self, design12):
        alloc = Allocation(((1, 2, 3), (4, 5, 6), (7, 8, 9), (1, 5, 9)))
        with pytest.raises(InfeasibleAllocationError, match="coverage"):
            stack_system([design12] * 4, alloc)

    def test_design_count_must_match(self, design12):
        with pytest.raises(ValueError, match="camera subsets"):
            stack_system([design12] * 3, BEST_ALLOC_12)

    def test_row_blocks_recover_masked_designs(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        for i, subset in enumerate(BEST_ALLOC_12.subsets):
            assert np.array_equal(
                system.camera_block(i), mask_columns(design12, subset)
            )

    def test_stacking_consistency_on_random_vectors(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = rng.normal(size=12)
            y = system.entries @ x
            for i, subset in enumerate(BEST_ALLOC_12.subsets):
                start, stop = system.row_blocks[i]
                assert y[start:stop] == pytest.approx(
                    mask_columns(design12, subset) @ x, rel=1e-12, abs=1e-12
                )


class TestBlockDiagFactor:
    def test_factorization_is_exact(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        fact = block_diag_factor(system)
        assert np.array_equal(
            fact.block_diagonal @ fact.permutation, system.entries
        )
        assert len(fact.blocks) == 4
        assert all(b.shape == (3, 3) for b in fact.blocks)

    def test_permutation_is_a_permutation(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        p = block_diag_factor(system).permutation
        assert (p.sum(axis=0) == 1).all() and (p.sum(axis=1) == 1).all()
        assert set(np.unique(p)) == {0.0, 1.0}

    def test_single_block_identity_permutation(self):
        rng = np.random.default_rng(5)
        d = random_design(rng, 3, 3)
        system = stack_system([d], Allocation(((1, 2, 3),)))
        fact = block_diag_factor(system)
        assert np.array_equal(fact.block_diagonal, system.entries)
        assert np.array_equal(fact.permutation, np.eye(3))

    def test_random_minimum_cases_exact(self):
        rng = np.random.default_rng(17)
        targets = WavelengthSet(tuple(500.0 + 10.0 * i for i in range(6)))
        d = random_design(rng, 3, 6, targets)
        perm = [int(v) + 1 for v in rng.permutation(6)]
        alloc = Allocation((tuple(perm[:3]), tuple(perm[3:]))).canonicalize()
        system = stack_system([d, d], alloc)
        fact = block_diag_factor(system)
        assert np.array_equal(fact.block_diagonal @ fact.permutation, system.entries)

    def test_rectangular_system_rejected(self, design12):
        alloc = Allocation(
            ((1, 2, 3), (4, 5, 6), (7, 8, 9), (10, 11, 12), (1, 5, 9))
        )
        system = stack_system([design12] * 5, alloc)
        with pytest.raises(NotMinimumCaseError, match="square"):
            block_diag_factor(system)

    def test_two_channel_minimum_case_supported(self):
        rng = np.random.default_rng(9)
        d = random_design(rng, 2, 4)
        system = stack_system([d, d], Allocation(((1, 2), (3, 4))))
        fact = block_diag_factor(system)  # k == C == 2
        assert np.array_equal(fact.block_diagonal @ fact.permutation, system.entries)

    def test_mismatched_channel_count_rejected(self):
        # dual-band filters on three-channel cameras: 6x4 system, not square
        rng = np.random.default_rng(10)
        d = random_design(rng, 3, 4)
        system = stack_system([d, d], Allocation(((1, 2), (3, 4))))
        with pytest.raises(NotMinimumCaseError, match="square"):
            block_diag_factor(system)


class TestCheckFeasibility:
    def test_identical_subsets_fail_condition_i(self, design12):
        alloc = Allocation(((1, 2, 3), (1, 2, 3), (4, 5, 6), (7, 8, 9)))
        entries = np.vstack(
            [mask_columns(design12, s) for s in alloc.subsets]
        )
        system = SystemMatrix(
            entries,
            alloc,
            design12.targets,
            tuple((3 * i, 3 * i + 3) for i in range(4)),
        )
        report = check_feasibility(alloc, system)
        assert not report.distinct_ok
        assert not report.coverage_ok
        assert not report.feasible

    def test_undersized_system_fails_condition_iii(self, design12):
        alloc = Allocation(((1, 2, 3, 4), (5, 6, 7, 8), (9, 10, 11, 12)))
        entries = np.vstack([mask_columns(design12, s) for s in alloc.subsets])
        system = SystemMatrix(
            entries,
            alloc,
            design12.targets,
            tuple((3 * i, 3 * i + 3) for i in range(3)),
        )
        report = check_feasibility(alloc, system)
        assert report.coverage_ok
        assert not report.determined_ok
        assert not report.rank_ok
        assert not report.feasible

    def test_solved_configuration_passes_all(self, design12):
        system = stack_system([design12] * 4, BEST_ALLOC_12)
        report = check_feasibility(BEST_ALLOC_12, system)
        assert report.feasible
        assert report.sigma_min > 0
