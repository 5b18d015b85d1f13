import numpy as np
import pytest

from pcabottleneck.autoencoder import TrainConfig, build_model, fit
from pcabottleneck.bottleneck import make_layout
from pcabottleneck.datasets import render_disc
from pcabottleneck.errors import RejectedInputError
from pcabottleneck.experiments import (
    evaluate,
    fraction_to_k,
    image_statistic,
    monotone_frames,
    pearson_matrix,
    scaling_sweep,
    sorted_coefficients,
    tile_grid,
    traverse,
    truncation_sweep,
)


@pytest.fixture(scope="module")
def small_model():
    rng = np.random.default_rng(0)
    images = rng.uniform(size=(12, 1, 8, 8))
    model = build_model((1, 8, 8), make_layout("single_vector", (5, 1, 1), 4, seed=0), (10,), 0)
    fit(model, images, TrainConfig(epochs=3, batch_size=4))
    return model, images


class TestTileGrid:
    def test_layout(self):
        a, b = np.zeros((2, 3)), np.full((2, 3), 0.5)
        grid = tile_grid([[a, b], [b]], gap=1, fill=1.0)
        assert grid.shape == (2 * 3, 2 * 4)
        np.testing.assert_array_equal(grid[0:2, 0:3], a)
        np.testing.assert_array_equal(grid[3:5, 0:3], b)
        np.testing.assert_array_equal(grid[3:5, 4:7], 1.0)  # missing tile stays filler
        np.testing.assert_array_equal(grid[2], 1.0)

    def test_no_gap(self):
        assert tile_grid([[np.zeros((4, 4))] * 3], gap=0).shape == (4, 12)


@pytest.mark.parametrize("f, q, k", [(1.0, 16, 16), (0.5, 16, 8), (0.01, 16, 1), (0.0625, 16, 1), (0.3, 10, 3)])
def test_fraction_to_k(f, q, k):
    assert fraction_to_k(f, q) == k


@pytest.mark.parametrize("f", [0.0, -0.1, 1.5])
def test_fraction_out_of_range(f):
    with pytest.raises(RejectedInputError):
        fraction_to_k(f, 8)


def test_pearson_matrix():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 2))
    b = np.column_stack([2 * a[:, 0] + 1, -a[:, 1], np.ones(50)])
    r = pearson_matrix(a, b)
    assert r[0, 0] == pytest.approx(1.0)
    assert r[1, 1] == pytest.approx(-1.0)
    assert r[0, 2] == 0.0
    assert r[0, 1] == pytest.approx(np.corrcoef(a[:, 0], b[:, 1])[0, 1])


class TestImageStatistic:
    def test_centroid_tracks_disc(self):
        imgs = np.stack([render_disc(32, x, 16.0, 5.0, 1.0) for x in (10.0, 16.0, 22.0)])[:, None]
        np.testing.assert_allclose(image_statistic(imgs, "x_position"), [10.0, 16.0, 22.0], atol=0.05)

    def test_radius_of_uniform_disc(self):
        # second moment of a uniform disc of radius r is r^2 / 2
        img = render_disc(64, 32.0, 32.0, 12.0, 1.0)[None, None]
        assert image_statistic(img, "radius")[0] == pytest.approx(12.0, rel=0.02)

    def test_brightness(self):
        imgs = np.stack([np.full((1, 4, 4), v) for v in (0.1, 0.7)])
        np.testing.assert_allclose(image_statistic(imgs, "brightness"), [0.1, 0.7])

    def test_unknown(self):
        with pytest.raises(RejectedInputError):
            image_statistic(np.zeros((1, 1, 2, 2)), "hue")


@pytest.mark.parametrize(
    "values, expected",
    [([1, 2, 3, 4], 4), ([4, 3, 2, 1], 4), ([1, 3, 2, 4], 3), ([2, 2, 2], 1), ([1, 2, 2, 3], 3)],
)
def test_monotone_frames(values, expected):
    assert monotone_frames(values) == expected


class TestEvaluation:
    def test_full_k_is_untruncated(self, small_model):
        model, images = small_model
        assert evaluate(model, images, 4) == evaluate(model, images)

    def test_bits(self, small_model):
        model, images = small_model
        assert [r.bits for r in truncation_sweep(model, images, [1, 3])] == [32, 96]

    def test_mse_per_pixel(self, small_model):
        model, images = small_model
        row = evaluate(model, images)
        assert row.mse == pytest.approx(np.mean((model.reconstruct(images) - images) ** 2))

    def test_invalid_k(self, small_model):
        model, images = small_model
        with pytest.raises(RejectedInputError):
            evaluate(model, images, 5)

    def test_scaling(self, small_model):
        model, images = small_model
        rows, grids = scaling_sweep(model, images, [0.5, 1.0], grid_images=4)
        assert [r.k for r in rows] == [2, 4]
        assert grids[0].shape == (2 * 9, 4 * 9)
        with pytest.raises(RejectedInputError):
            scaling_sweep(model, images, [])


class TestTraverse:
    def test_frames_and_values(self, small_model):
        model, images = small_model
        tr = traverse(model, images, 2, 1, (-2, 2), 9)
        assert tr.frames.shape == (9, 1, 8, 8)
        np.testing.assert_allclose(tr.values, np.linspace(-2, 2, 9))
        np.testing.assert_allclose(tr.coefficients, tr.values * tr.component_std)

    def test_std_matches_coefficient_spread(self, small_model):
        model, images = small_model
        coeffs = sorted_coefficients(model, images)
        tr = traverse(model, images, 0, 0)
        assert tr.component_std == pytest.approx(coeffs[:, 0].std(), rel=1e-9)
        assert np.all(np.diff(coeffs.var(axis=0)) <= 1e-12)

    def test_zero_width(self, small_model):
        model, images = small_model
        tr = traverse(model, images, 3, 0, (0.0, 0.0), 4)
        for f in tr.frames[1:]:
            np.testing.assert_array_equal(f, tr.frames[0])

    def test_other_coefficients_held(self, small_model):
        model, images = small_model
        tr_a = traverse(model, images, 3, 0, (1.0, 1.0), 1)
        tr_b = traverse(model, images, 3, 0, (-1.0, -1.0), 1)
        assert not np.array_equal(tr_a.frames, tr_b.frames)

    def test_errors(self, small_model):
        model, images = small_model
        with pytest.raises(RejectedInputError):
            traverse(model, images, 0, 4)
        with pytest.raises(RejectedInputError):
            traverse(model, images, 99, 0)
        multi = build_model((1, 8, 8), make_layout("multi_patch", (2, 1, 2), 1), (4,), 0)
        with pytest.raises(RejectedInputError):
            traverse(multi, images, 0, 0)
