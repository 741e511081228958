"""Fully-digital precoders and the min-max ball-constrained solver."""

import math

import numpy as np
import pytest

from robusthp.digital import (
    AngleGrid,
    _regularized_ball_solution,
    conventional_dp,
    es_precoder,
    fm_precoder,
    minmax_ball_solver,
    null_space_basis,
)
from robusthp.errors import InfeasibleGeometryError, RankDeficiencyError
from robusthp.errorstats import ExpectedResponseParams, expected_array_response
from robusthp.geometry import ArrayGeometry, steering_vector

BETA_2DEG = 2.0


class TestNullSpaceBasis:
    def test_single_broadside_row(self):
        row = steering_vector(90.0, ArrayGeometry(4)).conj()[None, :]
        result = null_space_basis(row)
        assert result.basis.shape == (4, 3)
        assert result.source_rank == 1
        np.testing.assert_allclose(
            result.basis.conj().T @ result.basis, np.eye(3), atol=1e-12
        )
        np.testing.assert_allclose(row @ result.basis, 0.0, atol=1e-12)

    def test_residual_against_interference(self):
        bs = ArrayGeometry(8)
        row = steering_vector(110.0, bs).conj()[None, :]
        result = null_space_basis(row)
        assert np.linalg.norm(row @ result.basis) <= 1e-10

    def test_empty_interference_gives_identity(self):
        result = null_space_basis(np.zeros((0, 6)), element_count=6)
        np.testing.assert_allclose(result.basis, np.eye(6), atol=1e-15)
        assert result.source_rank == 0

    def test_duplicated_rows_raise(self):
        row = steering_vector(60.0, ArrayGeometry(8)).conj()
        with pytest.raises(RankDeficiencyError):
            null_space_basis(np.vstack([row, row]))

    def test_rank_check_can_be_disabled(self):
        bs = ArrayGeometry(16)
        # Closely spaced grid angles make the rows nearly dependent while the
        # trailing singular vectors stay exactly orthogonal to them.
        rows = np.vstack(
            [steering_vector(a, bs).conj() for a in (60.0, 60.05, 60.1, 60.15)]
        )
        result = null_space_basis(rows, rank_rtol=None)
        assert result.basis.shape == (16, 12)
        assert np.linalg.norm(rows @ result.basis) < 1e-10

    def test_too_many_rows_rejected(self):
        with pytest.raises(ValueError):
            null_space_basis(np.eye(4))


class TestConventionalDp:
    def test_single_receiver_is_pure_steering(self):
        bs = ArrayGeometry(8)
        pre = conventional_dp([70.0], bs)
        gain = abs(np.vdot(steering_vector(70.0, bs), pre.matrix[:, 0]))
        assert gain == pytest.approx(1.0, abs=1e-10)

    def test_two_receivers_null_each_other(self):
        bs = ArrayGeometry(16)
        pre = conventional_dp([50.0, 120.0], bs)
        a1 = steering_vector(50.0, bs)
        a2 = steering_vector(120.0, bs)
        assert abs(np.vdot(a2, pre.matrix[:, 0])) <= 1e-10
        assert abs(np.vdot(a1, pre.matrix[:, 1])) <= 1e-10
        assert abs(np.vdot(a1, pre.matrix[:, 0])) > 0.1

    def test_total_power_is_k(self):
        pre = conventional_dp([40.0, 90.0, 140.0], ArrayGeometry(32))
        assert np.linalg.norm(pre.matrix) ** 2 == pytest.approx(3.0, abs=1e-10)

    def test_duplicate_directions_raise(self):
        with pytest.raises(RankDeficiencyError):
            conventional_dp([60.0, 60.0, 100.0], ArrayGeometry(16))

    def test_more_receivers_than_antennas_rejected(self):
        with pytest.raises(ValueError):
            conventional_dp([10.0, 50.0, 90.0], ArrayGeometry(2))


class TestEsPrecoder:
    def test_zero_width_reduces_to_conventional(self):
        bs = ArrayGeometry(16)
        angles = [50.0, 120.0]
        responses = [
            expected_array_response(ExpectedResponseParams(a, 0.0, 16))
            for a in angles
        ]
        es = es_precoder(responses)
        cdp = conventional_dp(angles, bs)
        np.testing.assert_allclose(es.matrix, cdp.matrix, atol=1e-10)

    def test_cross_responses_are_nulled(self):
        beta = math.radians(BETA_2DEG)
        angles = [30.0, 70.0, 110.0, 150.0]
        responses = [
            expected_array_response(
                ExpectedResponseParams(a, beta, 64), backend="quadrature"
            )
            for a in angles
        ]
        pre = es_precoder(responses)
        for j in range(4):
            for k in range(4):
                if j != k:
                    assert abs(np.vdot(responses[j], pre.matrix[:, k])) <= 1e-9

    def test_total_power_is_k(self):
        beta = math.radians(BETA_2DEG)
        responses = [
            expected_array_response(ExpectedResponseParams(a, beta, 32))
            for a in (60.0, 110.0)
        ]
        pre = es_precoder(responses)
        assert np.linalg.norm(pre.matrix) ** 2 == pytest.approx(2.0, abs=1e-10)


def _fixture_systems():
    """K=2, M_t=8, N=2 grid instance with unit targets for the solver tests."""
    bs = ArrayGeometry(8)
    grids = [AngleGrid(60.0, 2.0, 2), AngleGrid(110.0, 2.0, 2)]
    rows = [
        np.vstack([steering_vector(a, bs).conj() for a in g.samples]) for g in grids
    ]
    designs = []
    for i in range(2):
        others = np.vstack([rows[j] for j in range(2) if j != i])
        basis = null_space_basis(others, element_count=8).basis
        designs.append(rows[i] @ basis)
    targets = [np.ones(2, dtype=complex), np.ones(2, dtype=complex)]
    return list(zip(designs, targets))


class TestMinMaxBallSolver:
    def test_single_system_inactive_ball_equals_least_squares(self):
        rng = np.random.default_rng(0)
        b = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        t = 0.01 * (rng.standard_normal(6) + 1j * rng.standard_normal(6))
        sol = minmax_ball_solver([(b, t)], radius_sq=100.0)
        expected, *_ = np.linalg.lstsq(b, t, rcond=None)
        np.testing.assert_allclose(sol.weights[0], expected, atol=1e-10)

    def test_all_zero_targets_give_zero_weights(self):
        rng = np.random.default_rng(1)
        systems = [
            (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)),
             np.zeros(4, dtype=complex))
            for _ in range(2)
        ]
        sol = minmax_ball_solver(systems, radius_sq=1.0)
        assert sol.objective == pytest.approx(0.0, abs=1e-12)

    def test_matches_frozen_conic_reference(self):
        # Reference optimum minted offline with a second-order-cone solver on
        # this exact instance.
        reference = 0.132311255284234
        sol = minmax_ball_solver(_fixture_systems(), radius_sq=2.0,
                                 tol=0.0, max_iter=20000)
        assert sol.objective >= reference - 1e-9
        assert abs(sol.objective - reference) / reference <= 1e-3

    def test_empty_system_list_rejected(self):
        with pytest.raises(ValueError):
            minmax_ball_solver([], radius_sq=1.0)

    def test_regularized_solution_lands_on_ball(self):
        rng = np.random.default_rng(2)
        b = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        t = 10.0 * (rng.standard_normal(5) + 1j * rng.standard_normal(5))
        g = _regularized_ball_solution(b, t, 1.0)
        assert np.sum(np.abs(g) ** 2) == pytest.approx(1.0, rel=1e-6)


class TestFmPrecoder:
    def test_single_receiver_single_sample_is_steering(self):
        bs = ArrayGeometry(16)
        pre = fm_precoder([AngleGrid(70.0, 0.0, 1)], bs)
        gain = abs(np.vdot(steering_vector(70.0, bs), pre.matrix[:, 0]))
        assert gain == pytest.approx(1.0, abs=1e-8)

    def test_flat_mainlobe_beats_conventional_on_worst_grid_gain(self):
        bs = ArrayGeometry(32)
        angles = [60.0, 110.0]
        grids = [AngleGrid(a, BETA_2DEG, 4) for a in angles]
        fm = fm_precoder(grids, bs)
        cdp = conventional_dp(angles, bs)
        for k, grid in enumerate(grids):
            rows = np.vstack([steering_vector(a, bs).conj() for a in grid.samples])
            fm_min = np.min(np.abs(rows @ fm.matrix[:, k]))
            cdp_min = np.min(np.abs(rows @ cdp.matrix[:, k]))
            assert fm_min > cdp_min

    def test_grid_interference_nulled_by_construction(self):
        bs = ArrayGeometry(32)
        grids = [AngleGrid(a, BETA_2DEG, 4) for a in (50.0, 95.0, 140.0)]
        pre = fm_precoder(grids, bs)
        for j, grid in enumerate(grids):
            rows = np.vstack([steering_vector(a, bs).conj() for a in grid.samples])
            for k in range(3):
                if k != j:
                    assert np.max(np.abs(rows @ pre.matrix[:, k])) <= 1e-10

    def test_objective_trace_non_increasing(self):
        bs = ArrayGeometry(32)
        pre = fm_precoder([AngleGrid(a, BETA_2DEG, 4) for a in (60.0, 115.0)], bs)
        trace = np.array(pre.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_overlapping_grids_rejected(self):
        bs = ArrayGeometry(32)
        with pytest.raises(InfeasibleGeometryError):
            fm_precoder([AngleGrid(60.0, 2.0, 4), AngleGrid(62.0, 2.0, 4)], bs)

    def test_exhausted_null_space_rejected(self):
        bs = ArrayGeometry(8)
        with pytest.raises(InfeasibleGeometryError):
            fm_precoder([AngleGrid(40.0, 2.0, 8), AngleGrid(120.0, 2.0, 8)], bs)


class TestAngleGrid:
    def test_samples_span_the_window(self):
        grid = AngleGrid(60.0, 2.0, 8)
        assert grid.samples[0] == pytest.approx(58.0)
        assert grid.samples[-1] == pytest.approx(62.0)
        assert len(grid.samples) == 8

    def test_single_sample_grid_is_the_center(self):
        np.testing.assert_allclose(AngleGrid(75.0, 2.0, 1).samples, [75.0])

    def test_overlap_detection(self):
        assert AngleGrid(60.0, 2.0, 4).overlaps(AngleGrid(63.0, 2.0, 4))
        assert not AngleGrid(60.0, 2.0, 4).overlaps(AngleGrid(65.0, 2.0, 4))
