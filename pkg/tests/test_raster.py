import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braillekit.errors import InvalidImageError
from braillekit.raster import (
    background_mode,
    compute_integral,
    normalize_gray,
    rect_sum,
    rotate,
    rotate_points,
    to_grayscale,
)

from conftest import make_page


class TestToGrayscale:
    @pytest.mark.parametrize(
        "pixel,expected",
        [((255, 255, 255), 255), ((0, 0, 0), 0), ((100, 100, 100), 100)],
    )
    def test_identity_cases(self, pixel, expected):
        img = np.full((3, 3, 3), pixel, dtype=np.uint8)
        assert np.all(to_grayscale(img) == expected)

    def test_empty_image_rejected(self):
        with pytest.raises(InvalidImageError):
            to_grayscale(np.empty((0, 0, 3), dtype=np.uint8))

    def test_within_one_of_exact_luminance(self, rng):
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        exact = (
            0.299 * img[:, :, 0].astype(float)
            + 0.587 * img[:, :, 1]
            + 0.114 * img[:, :, 2]
        )
        assert np.max(np.abs(to_grayscale(img).astype(float) - exact)) <= 1.0


class TestNormalizeGray:
    def test_full_span_unchanged(self, rng):
        # Percentiles already at 0/255: the stretch is the identity.
        img = rng.integers(0, 256, size=(100, 100), dtype=np.uint8)
        img.ravel()[:1500] = 0
        img.ravel()[1500:3000] = 255
        out = normalize_gray(img)
        assert not out.degenerate
        assert np.array_equal(out.image, img)

    def test_two_valued_stretch(self):
        # p1=60, p99=180 by order statistics; the stretch formula maps
        # 60 -> 0, 180 -> 255, 120 -> round(60 * 255 / 120) = 128.
        img = np.full(1000, 60, dtype=np.uint8)
        img[:11] = 180
        img[11:13] = 120
        out = normalize_gray(img.reshape(25, 40))
        values = out.image.ravel()
        assert not out.degenerate
        assert set(np.unique(values)) == {0, 128, 255}
        assert np.all(values[:11] == 255)
        assert np.all(values[11:13] == 128)

    def test_constant_image_degenerate(self):
        img = np.full((10, 10), 128, dtype=np.uint8)
        out = normalize_gray(img)
        assert out.degenerate
        assert np.array_equal(out.image, img)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        img = np.random.default_rng(seed).integers(0, 256, size=(24, 24)).astype(np.uint8)
        once = normalize_gray(img).image
        twice = normalize_gray(once).image
        assert np.array_equal(once, twice)


class TestIntegralImage:
    def test_all_ones_rect_queries(self):
        img = np.ones((4, 4), dtype=np.uint8)
        ii = compute_integral(img)
        assert rect_sum(ii, 0, 0, 2, 2) == 4
        assert rect_sum(ii, 1, 1, 2, 2) == 4

    def test_zero_row_and_column(self, rng):
        ii = compute_integral(rng.integers(0, 256, size=(8, 8), dtype=np.uint8))
        assert np.all(ii[0, :] == 0)
        assert np.all(ii[:, 0] == 0)

    @pytest.mark.parametrize("size", [8, 16])
    def test_equals_brute_force_exhaustively(self, size, rng):
        img = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
        ii = compute_integral(img)
        for y in range(size):
            for x in range(size):
                for h in range(1, size - y + 1):
                    for w in range(1, size - x + 1):
                        brute = int(img[y : y + h, x : x + w].sum())
                        assert rect_sum(ii, x, y, w, h) == brute


class TestRotate:
    def test_angle_zero_is_identity(self, rng):
        img = rng.integers(0, 256, size=(20, 30), dtype=np.uint8)
        assert np.array_equal(rotate(img, 0.0), img)

    def test_constant_image_stays_constant(self):
        img = np.full((40, 50), 77, dtype=np.uint8)
        for angle in (3.0, -12.5, 45.0):
            assert np.all(rotate(img, angle) == 77)

    def test_angle_bound(self):
        with pytest.raises(ValueError):
            rotate(np.zeros((10, 10), dtype=np.uint8), 46.0)

    @pytest.mark.parametrize("angle", [1.5, -3.0])
    def test_round_trip_bounded_error(self, angle):
        img, _, _ = make_page(rows=4, cols=6, noise=0.0, seed=5)
        back = rotate(rotate(img, angle), -angle)
        interior = (slice(2, -2), slice(2, -2))
        diff = np.abs(back[interior].astype(int) - img[interior].astype(int))
        assert diff.max() <= 8

    def test_points_track_image_content(self):
        # A bright pixel block lands where rotate_points says it should.
        img = np.full((101, 101), 30, dtype=np.uint8)
        img[20:23, 60:63] = 250
        angle = 10.0
        rotated = rotate(img, angle)
        (cx, cy) = rotate_points(np.array([[61.0, 21.0]]), angle, (50.0, 50.0))[0]
        patch = rotated[int(cy) - 2 : int(cy) + 3, int(cx) - 2 : int(cx) + 3]
        assert patch.max() > 200

    def test_rotate_points_inverse(self, rng):
        pts = rng.uniform(0, 100, size=(50, 2))
        back = rotate_points(rotate_points(pts, 7.3, (50, 50)), -7.3, (50, 50))
        assert np.allclose(back, pts, atol=1e-9)


def test_background_mode_is_histogram_peak(rng):
    img = np.full((50, 50), 150, dtype=np.uint8)
    img[:10, :10] = 90
    assert background_mode(img) == 150
