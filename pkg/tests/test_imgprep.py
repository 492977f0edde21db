import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusevote.errors import CropError
from fusevote.imgprep import (
    CropParams,
    augment,
    augment_expand,
    box_blur,
    compute_crop_bounds,
    crop_extreme_points,
    crop_or_resize,
    largest_component,
    read_pgm,
    resize_bicubic,
    write_pgm,
)

BOUNDS_ONLY = CropParams(threshold=45, morph_iterations=0, blur_radius=0,
                         target_size=None)


def oracle_components(mask):
    """Independent two-pass union-find connected-component labeling."""
    h, w = mask.shape
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    labels = np.zeros((h, w), dtype=int)
    next_label = 0
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            up = labels[r - 1, c] if r > 0 and mask[r - 1, c] else 0
            left = labels[r, c - 1] if c > 0 and mask[r, c - 1] else 0
            if up == 0 and left == 0:
                next_label += 1
                parent[next_label] = next_label
                labels[r, c] = next_label
            elif up and left:
                labels[r, c] = min(up, left)
                union(up, left)
            else:
                labels[r, c] = max(up, left)
    groups = {}
    for r in range(h):
        for c in range(w):
            if labels[r, c]:
                root = find(labels[r, c])
                groups.setdefault(root, []).append((r, c))
    return list(groups.values())


class TestCrop:
    def test_rectangle_bounds(self):
        img = np.zeros((10, 10), dtype=np.uint8)
        img[2:6, 3:8] = 255
        assert compute_crop_bounds(img, BOUNDS_ONLY) == (2, 5, 3, 7)

    def test_empty_foreground_raises(self):
        img = np.zeros((10, 10), dtype=np.uint8)
        with pytest.raises(CropError):
            crop_extreme_points(img, BOUNDS_ONLY)

    def test_fallback_resizes_whole_image(self):
        img = np.zeros((10, 12), dtype=np.uint8)
        params = CropParams(threshold=45, morph_iterations=0, blur_radius=0,
                            target_size=(6, 6))
        out = crop_or_resize(img, params)
        assert out.shape == (6, 6)
        assert (out == 0).all()

    def test_largest_of_two_components(self):
        img = np.zeros((12, 12), dtype=np.uint8)
        img[1:4, 1:5] = 200   # area 12
        img[6:11, 5:13] = 200  # area 40 (clipped to 5x7=35 inside image)
        img[6:11, 5:12] = 200
        mask = img > 45
        comps = oracle_components(mask)
        biggest = max(comps, key=len)
        rows = [r for r, _ in biggest]
        cols = [c for _, c in biggest]
        expected = (min(rows), max(rows), min(cols), max(cols))
        assert compute_crop_bounds(img, BOUNDS_ONLY) == expected

    def test_component_tie_breaks_to_first_seen(self):
        img = np.zeros((9, 9), dtype=np.uint8)
        img[1:3, 1:3] = 255  # area 4, seen first in row-major order
        img[5:7, 5:7] = 255  # area 4
        assert compute_crop_bounds(img, BOUNDS_ONLY) == (1, 2, 1, 2)

    def test_morphology_closes_pinholes(self):
        img = np.zeros((16, 16), dtype=np.uint8)
        img[4:12, 4:12] = 255
        img[7, 7] = 0  # pinhole survives threshold, dies under dilate+erode
        params = CropParams(threshold=45, morph_iterations=2, blur_radius=0,
                            target_size=None)
        assert compute_crop_bounds(img, params) == (4, 11, 4, 11)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_bounds_inside_image(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.integers(0, 256, size=(12, 15)).astype(np.uint8)
        try:
            top, bottom, left, right = compute_crop_bounds(img, BOUNDS_ONLY)
        except CropError:
            return
        assert 0 <= top <= bottom < 12
        assert 0 <= left <= right < 15

    def test_crop_then_resize_shape(self):
        img = np.zeros((20, 20), dtype=np.uint8)
        img[5:15, 3:9] = 180
        params = CropParams(threshold=45, morph_iterations=0, blur_radius=0,
                            target_size=(32, 32))
        assert crop_extreme_points(img, params).shape == (32, 32)


def oracle_bicubic(img, out_h, out_w, a=-0.5):
    """Direct per-pixel evaluation of the convolution formula."""
    def kernel(x):
        x = abs(x)
        if x <= 1:
            return (a + 2) * x**3 - (a + 3) * x**2 + 1
        if x < 2:
            return a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a
        return 0.0

    in_h, in_w = img.shape
    out = np.zeros((out_h, out_w))
    for r in range(out_h):
        src_r = (r + 0.5) * in_h / out_h - 0.5
        br = int(np.floor(src_r))
        for c in range(out_w):
            src_c = (c + 0.5) * in_w / out_w - 0.5
            bc = int(np.floor(src_c))
            total = 0.0
            for dr in range(-1, 3):
                rr = min(max(br + dr, 0), in_h - 1)
                wr = kernel(src_r - (br + dr))
                for dc in range(-1, 3):
                    cc = min(max(bc + dc, 0), in_w - 1)
                    total += wr * kernel(src_c - (bc + dc)) * img[rr, cc]
            out[r, c] = total
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


class TestResize:
    def test_identity(self):
        img = np.random.default_rng(0).integers(0, 256, size=(9, 7)).astype(np.uint8)
        np.testing.assert_array_equal(resize_bicubic(img, (9, 7)), img)

    def test_constant_preserved(self):
        img = np.full((2, 2), 100, dtype=np.uint8)
        for size in [(3, 3), (5, 8), (1, 1), (11, 2)]:
            out = resize_bicubic(img, size)
            assert (out == 100).all()

    def test_ramp_upscale_monotone(self):
        ramp = np.tile(np.array([0, 60, 120, 180], dtype=np.uint8), (4, 1))
        out = resize_bicubic(ramp, (8, 8))
        assert (np.diff(out.astype(int), axis=1) >= 0).all()

    def test_matches_direct_kernel_evaluation(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(6, 5)).astype(np.uint8)
        for size in [(9, 9), (4, 7), (12, 3)]:
            np.testing.assert_array_equal(
                resize_bicubic(img, size), oracle_bicubic(img, *size))

    def test_output_range(self):
        img = np.zeros((6, 6), dtype=np.uint8)
        img[2:4, 2:4] = 255  # sharp edge provokes kernel overshoot
        out = resize_bicubic(img, (17, 17))
        assert out.min() >= 0 and out.max() <= 255


class TestAugment:
    def test_single_clockwise_rotation(self):
        img = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        np.testing.assert_array_equal(augment(img, 1, False),
                                      np.array([[3, 1], [4, 2]]))

    def test_identity(self):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4)
        np.testing.assert_array_equal(augment(img, 0, False), img)

    def test_half_turn_twice_restores(self):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4)
        np.testing.assert_array_equal(augment(augment(img, 2, False), 2, False), img)

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_rotations_compose_mod_4(self, a, b, seed):
        img = np.random.default_rng(seed).integers(0, 256, size=(4, 6)).astype(np.uint8)
        np.testing.assert_array_equal(
            augment(augment(img, a, False), b, False),
            augment(img, (a + b) % 4, False),
        )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_hflip_involution(self, seed):
        img = np.random.default_rng(seed).integers(0, 256, size=(5, 3)).astype(np.uint8)
        flipped = augment(img, 0, True)
        np.testing.assert_array_equal(augment(flipped, 0, True), img)

    def test_expand_is_sevenfold(self):
        img = np.arange(16, dtype=np.uint8).reshape(4, 4)
        variants = augment_expand(img)
        assert len(variants) == 7
        np.testing.assert_array_equal(variants[0], img)


class TestPgm:
    def test_round_trip(self, tmp_path):
        img = np.random.default_rng(7).integers(0, 256, size=(11, 13)).astype(np.uint8)
        write_pgm(img, tmp_path / "probe.pgm")
        np.testing.assert_array_equal(read_pgm(tmp_path / "probe.pgm"), img)

    def test_comments_skipped(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n# another\n255\n\x00\x01\x02\x03")
        np.testing.assert_array_equal(read_pgm(path), [[0, 1], [2, 3]])


def test_box_blur_constant_invariant():
    img = np.full((9, 9), 77, dtype=np.uint8)
    np.testing.assert_array_equal(box_blur(img, 2), img)
