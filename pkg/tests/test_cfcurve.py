import numpy as np
import pytest

from sparca.cfcurve import CfCurve, cf_curve, default_grid, select_clusters
from sparca.horn import HornParams

from conftest import block_factor_data


class TestSelectClusters:
    def test_flat_plateau_then_unit_tail(self):
        # derivative is 0 on the plateau and 1 on the tail; the tie over the
        # plateau resolves to the smallest cluster count
        curve = CfCurve.from_points(
            [2, 4, 6, 8, 10, 12], [8, 8, 8, 8, 10, 12]
        )
        assert select_clusters(curve) == 2
        assert curve.selected == 2

    def test_monotone_decreasing_slope(self):
        # concave growth with no plateau: the minimum slope sits at the end,
        # and the anchored smoothing window ties the last two points, so the
        # smallest of them (the last interior point) wins
        curve = CfCurve.from_points([1, 2, 3, 4, 5], [0, 10, 17, 21, 23])
        assert select_clusters(curve) == 4

    def test_too_few_points(self):
        curve = CfCurve.from_points([1, 5], [3, 5])
        with pytest.raises(ValueError, match="3 grid points"):
            select_clusters(curve)

    def test_smoothing_window_one_uses_raw_derivative(self):
        curve = CfCurve.from_points([1, 2, 3, 4], [0, 5, 6, 10])
        assert select_clusters(curve, smoothing_window=1) == 3

    def test_derivative_stencil(self):
        curve = CfCurve.from_points([1, 2, 4, 8], [1, 3, 4, 12])
        # one-sided at the ends, central (non-uniform) inside
        assert np.allclose(
            curve.derivative,
            [2.0, (4 - 1) / (4 - 1), (12 - 3) / (8 - 2), (12 - 4) / (8 - 4)],
        )


@pytest.fixture(scope="module")
def block_data():
    X, _ = block_factor_data(400, seed=1)
    return X


class TestCfCurve:
    def test_singleton_tail_point(self, block_data):
        m = block_data.shape[1]
        curve = cf_curve(
            block_data, grid=[4, m // 2, m], horn_params=HornParams(seed=0)
        )
        assert curve.points[-1] == (m, m)

    def test_block_structure(self, block_data):
        m = block_data.shape[1]
        grid = [2, 4, 8, 12, 20, 40, m]
        curve = cf_curve(block_data, grid=grid, horn_params=HornParams(seed=0))
        by_k = dict(curve.points)
        # plateau at the true factor count for cuts at or below 8 blocks
        assert by_k[2] == 8
        assert by_k[4] == 8
        assert by_k[8] == 8
        # tail: each extra cluster splits a block and adds one feature
        assert by_k[12] == 12
        assert by_k[40] == 40
        assert by_k[m] == m
        assert by_k[curve.selected] == 8

    def test_single_point_grid(self, block_data):
        curve = cf_curve(block_data, grid=[1], horn_params=HornParams(seed=0))
        assert curve.points == [(1, 8)]
        assert curve.selected == 1

    def test_deterministic_per_seed(self, block_data):
        a = cf_curve(block_data, grid=[2, 8, 30], horn_params=HornParams(seed=3))
        b = cf_curve(block_data, grid=[2, 8, 30], horn_params=HornParams(seed=3))
        assert np.array_equal(a.n_features, b.n_features)
        assert a.selected == b.selected

    def test_subsample_stability(self):
        selected = []
        for n in (200, 500, 1000):
            X, _ = block_factor_data(n, seed=7)
            curve = cf_curve(X, horn_params=HornParams(seed=0))
            selected.append(curve.selected)
            assert dict(curve.points)[curve.selected] == 8
        assert len(set(selected)) == 1

    def test_affine_feature_rescaling_invariance(self, block_data):
        scaled = block_data.copy()
        scaled[:, 11] = scaled[:, 11] * 3.5 + 7.0
        grid = [2, 8, 20, 80]
        a = cf_curve(block_data, grid=grid, horn_params=HornParams(seed=0))
        b = cf_curve(scaled, grid=grid, horn_params=HornParams(seed=0))
        assert np.array_equal(a.n_features, b.n_features)
        assert a.selected == b.selected

    def test_grid_validation(self, block_data):
        with pytest.raises(ValueError, match="increasing"):
            cf_curve(block_data, grid=[4, 4, 8])
        with pytest.raises(ValueError, match="lie in"):
            cf_curve(block_data, grid=[0, 4])
        with pytest.raises(ValueError, match="lie in"):
            cf_curve(block_data, grid=[2, 2000])

    def test_threads_do_not_change_result(self, block_data):
        grid = [2, 8, 30]
        a = cf_curve(block_data, grid=grid, n_threads=1)
        b = cf_curve(block_data, grid=grid, n_threads=4)
        assert np.array_equal(a.n_features, b.n_features)


class TestDefaultGrid:
    def test_includes_endpoint_and_range(self):
        grid = default_grid(80)
        assert grid[0] == 2
        assert grid[-1] == 80
        assert (np.diff(grid) > 0).all()
        assert grid.size <= 40

    def test_tiny_feature_counts(self):
        assert default_grid(1).tolist() == [1]
        assert default_grid(2).tolist() == [2]
        assert default_grid(3)[-1] == 3
