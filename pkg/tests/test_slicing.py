"""Intensity slicing: band arithmetic, exact reconstruction, disjointness."""

import numpy as np
import pytest

from stnet.errors import ValidationError
from stnet.slicing import SliceSpec, band_of, decompose, decompose_batch, reconstruct


class TestBandOf:
    def test_lowest_band(self):
        assert band_of(0, 5) == 0

    def test_highest_band_right_closed(self):
        assert band_of(255, 5) == 4

    def test_midpoint_value(self):
        assert band_of(128, 5) == 2  # floor(128 * 5 / 256) = floor(2.5)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            band_of(-1, 4)
        with pytest.raises(ValidationError):
            band_of(256, 4)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 256])
    def test_monotone_and_surjective(self, n):
        bands = [band_of(v, n) for v in range(256)]
        assert all(b2 >= b1 for b1, b2 in zip(bands, bands[1:]))
        assert set(bands) == set(range(n))

    def test_matches_decompose_membership(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (3, 6, 6)).astype(np.float32)
        for n in (2, 5, 7):
            stack = decompose(img, SliceSpec(n))
            for c in range(3):
                for y in range(6):
                    for x in range(6):
                        b = band_of(float(img[c, y, x]), n)
                        for i, sl in enumerate(stack.slices):
                            expected = img[c, y, x] if i == b else 0.0
                            assert sl[c, y, x] == expected


class TestDecompose:
    def test_single_slice_is_identity(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (3, 4, 4)).astype(np.float32)
        stack = decompose(img, SliceSpec(1))
        assert stack.n == 1
        np.testing.assert_array_equal(stack.slices[0], img)

    def test_two_band_assignment(self):
        img = np.array([[[10.0, 200.0], [200.0, 10.0]]])
        stack = decompose(img, SliceSpec(2))
        np.testing.assert_array_equal(stack.slices[0], [[[10.0, 0.0], [0.0, 10.0]]])
        np.testing.assert_array_equal(stack.slices[1], [[[0.0, 200.0], [200.0, 0.0]]])

    def test_disjoint_support_and_coverage(self):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, (3, 8, 8)).astype(np.float32)
        stack = decompose(img, SliceSpec(5))
        nonzero_counts = sum((sl != 0).astype(int) for sl in stack.slices)
        assert nonzero_counts.max() <= 1  # disjoint support
        covered = sum(sl for sl in stack.slices)
        np.testing.assert_array_equal(covered, img)  # nonzero values all covered

    def test_empty_bands_still_emitted(self):
        img = np.zeros((1, 2, 2), dtype=np.float32)
        stack = decompose(img, SliceSpec(6))
        assert stack.n == 6
        for sl in stack.slices:
            assert sl.shape == (1, 2, 2)

    def test_out_of_range_pixel_rejected(self):
        with pytest.raises(ValidationError):
            decompose(np.full((1, 2, 2), 300.0), SliceSpec(3))


class TestReconstruct:
    def test_unit_weights_bit_exact(self):
        rng = np.random.default_rng(3)
        for n in range(1, 17):
            img = rng.integers(0, 256, (3, 5, 7)).astype(np.float32)
            out = reconstruct(decompose(img, SliceSpec(n)))
            np.testing.assert_array_equal(out, img)

    def test_zero_weights(self):
        img = np.full((1, 3, 3), 77.0, dtype=np.float32)
        out = reconstruct(decompose(img, SliceSpec(4)), weights=[0.0] * 4)
        np.testing.assert_array_equal(out, np.zeros_like(img))

    def test_single_slice_doubling(self):
        img = np.arange(12, dtype=np.float32).reshape(1, 3, 4)
        out = reconstruct(decompose(img, SliceSpec(1)), weights=[2.0])
        np.testing.assert_array_equal(out, img * 2)

    def test_weight_length_mismatch(self):
        stack = decompose(np.zeros((1, 2, 2), dtype=np.float32), SliceSpec(3))
        with pytest.raises(ValidationError):
            reconstruct(stack, weights=[1.0, 1.0])

    def test_pairwise_products_vanish(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, (3, 6, 6)).astype(np.float32)
        slices = decompose(img, SliceSpec(4)).slices
        for i in range(4):
            for j in range(i + 1, 4):
                assert not np.any(slices[i] * slices[j])


class TestSliceSpec:
    def test_default_weights_are_ones(self):
        assert SliceSpec(3).weights == (1.0, 1.0, 1.0)

    def test_bad_count(self):
        with pytest.raises(ValidationError):
            SliceSpec(0)

    def test_weight_length_checked(self):
        with pytest.raises(ValidationError):
            SliceSpec(2, weights=(1.0,))


class TestDecomposeBatch:
    def test_matches_per_image_decompose(self):
        rng = np.random.default_rng(5)
        batch = rng.integers(0, 256, (4, 3, 5, 5)).astype(np.float32)
        slices = decompose_batch(batch, 5)
        assert len(slices) == 5
        for i in range(4):
            stack = decompose(batch[i], SliceSpec(5))
            for s in range(5):
                np.testing.assert_array_equal(slices[s][i], stack.slices[s])

    def test_non_integer_values_reconstruct(self):
        rng = np.random.default_rng(6)
        img = (rng.uniform(0, 255, (3, 4, 4))).astype(np.float32)
        out = reconstruct(decompose(img, SliceSpec(7)))
        np.testing.assert_array_equal(out, img)  # disjointness makes this exact
