import unittest

import numpy as np
from hypothesis import given, strategies as st, settings

from src.geometry.camera import CameraIntrinsics
from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose, quat_from_axis_angle
from src.patches.sampling import PatchConfig, patch_pixel_size, extract_patch, sample_scene, \
    sample_view_patches, grid_pixels
from src.rendering.procedural import make_cube
from src.rendering.rasterizer import render
from src.utils.exceptions import InvalidDepthError, ParameterError

K = CameraIntrinsics()
CFG = PatchConfig()


def flat_frame(depth: float = 1.0, color=(100, 150, 200)) -> RgbdFrame:
    return RgbdFrame(np.full((*K.shape, 3), color, dtype=np.uint8), np.full(K.shape, depth), K)


def random_frame(seed: int) -> RgbdFrame:
    rng = np.random.default_rng(seed)
    depth = rng.uniform(0.3, 2.0, K.shape)
    depth[rng.random(K.shape) < 0.2] = 0.0
    color = rng.integers(0, 256, (*K.shape, 3), dtype=np.uint8)
    return RgbdFrame(color, depth, K)


class TestPatchSize(unittest.TestCase):
    def test_values(self):
        self.assertAlmostEqual(patch_pixel_size(0.5, K, 0.05), 57.5, places=9)
        self.assertAlmostEqual(patch_pixel_size(0.05 * 575, K, 0.05), 1.0, places=12)
        self.assertEqual(patch_pixel_size(1.4, K, 0.05), 2 * patch_pixel_size(2.8, K, 0.05))

    def test_invalid_depth(self):
        with self.assertRaises(InvalidDepthError):
            patch_pixel_size(0.0, K, 0.05)

    def test_invalid_config(self):
        with self.assertRaises(ParameterError):
            PatchConfig(m=0)
        with self.assertRaises(ParameterError):
            PatchConfig(out_size=16)
        with self.assertRaises(ParameterError):
            PatchConfig(grid_step=0)


class TestExtractPatch(unittest.TestCase):
    def test_flat_uniform_plane(self):
        patch = extract_patch(flat_frame(), 200, 100, CFG)
        self.assertEqual(patch.data.shape, (4, 32, 32))
        np.testing.assert_array_equal(patch.data[3], 0.0)
        for channel, value in enumerate((100, 150, 200)):
            np.testing.assert_allclose(patch.data[channel], value / 127.5 - 1.0, atol=1e-6)
        np.testing.assert_allclose(patch.center_point, [(200 - 320) / 575, (100 - 240) / 575, 1])

    def test_depth_step_clamps(self):
        frame = flat_frame()
        frame.depth[:, 330:] = 1.2
        patch = extract_patch(frame, 320, 240, CFG)
        self.assertEqual(patch.data[3].max(), 1.0)
        # samples well right of the step
        np.testing.assert_array_equal(patch.data[3, :, 28:], 1.0)
        np.testing.assert_array_equal(patch.data[3, :, :14], 0.0)

    def test_center_depth_is_zero(self):
        frame = random_frame(3)
        rows, cols = np.nonzero(frame.depth > 0)
        patch = extract_patch(frame, int(cols[100]), int(rows[100]), CFG)
        self.assertEqual(patch.data[3, 16, 16], 0.0)

    def test_missing_center_depth_skips(self):
        frame = flat_frame()
        frame.depth[50, 60] = 0.0
        self.assertIsNone(extract_patch(frame, 60, 50, CFG))

    def test_out_of_bounds(self):
        with self.assertRaises(ParameterError):
            extract_patch(flat_frame(), 640, 0, CFG)

    def test_border_window_replicates(self):
        patch = extract_patch(flat_frame(0.3), 0, 0, CFG)
        np.testing.assert_array_equal(patch.data[3], 0.0)
        np.testing.assert_allclose(patch.data[0], 100 / 127.5 - 1.0, atol=1e-6)

    def test_holes_are_neutral(self):
        frame = flat_frame(0.5)
        frame.depth[230:235, :] = 0.0
        frame.depth[:, 340:] = 0.52
        patch = extract_patch(frame, 320, 240, CFG)
        self.assertTrue(np.all(np.abs(patch.data[3]) <= 1.0))
        # rows sampled from the hole rows carry the neutral value
        size = patch_pixel_size(0.5, K, 0.05)
        rows = [i for i in range(32) if 230 <= round(240 + (i - 16) * size / 32) <= 234]
        self.assertTrue(rows)
        np.testing.assert_array_equal(patch.data[3, rows], 0.0)

    def test_slanted_plane_profile(self):
        # plane z = 0.5 + 0.5 * x in camera coordinates
        u, v = np.meshgrid(np.arange(640.0), np.arange(480.0))
        ray_x = (u - K.cx) / K.fx
        depth = 0.5 / (1.0 - 0.5 * ray_x)
        frame = RgbdFrame(np.zeros((480, 640, 3), dtype=np.uint8), depth, K)
        patch = extract_patch(frame, 320, 240, CFG)

        size = patch_pixel_size(0.5, K, 0.05)
        sample_u = 320 + (np.arange(32) - 16) * size / 32
        expected = 0.5 / (1.0 - 0.5 * (sample_u - K.cx) / K.fx)
        expected = np.clip(expected - 0.5, -0.05, 0.05) / 0.05
        np.testing.assert_allclose(patch.data[3], np.tile(expected, (32, 1)), atol=2e-2)

    def test_deterministic(self):
        frame = random_frame(5)
        first = extract_patch(frame, 101, 77, CFG) or extract_patch(frame, 321, 240, CFG)
        second = extract_patch(frame, 101, 77, CFG) or extract_patch(frame, 321, 240, CFG)
        np.testing.assert_array_equal(first.data, second.data)

    def test_scale_invariance(self):
        cube = make_cube(edge=0.3)
        rotation = quat_from_axis_angle([0, 1, 0], 30)
        near = render(cube, Pose(rotation, [0, 0, 0.7]), K).to_frame()
        far = render(cube, Pose(rotation, [0, 0, 1.2]), K).to_frame()
        near_patch = extract_patch(near, 320, 240, CFG)
        far_patch = extract_patch(far, 320, 240, CFG)
        self.assertGreater(np.abs(near_patch.data[3]).max(), 0.1)
        self.assertLess(np.abs(near_patch.data - far_patch.data).mean(), 0.08)


class TestSampleScene(unittest.TestCase):
    def test_full_grid(self):
        self.assertEqual(len(sample_scene(flat_frame(), CFG)), 80 * 60)

    def test_invalid_frame(self):
        self.assertEqual(sample_scene(flat_frame(0.0), CFG), [])

    def test_half_plane(self):
        frame = flat_frame()
        frame.depth[:, 300:] = 0.0
        expected = sum(1 for v in range(4, 480, 8) for u in range(4, 640, 8) if u < 300)
        patches = sample_scene(frame, CFG)
        self.assertEqual(len(patches), expected)
        pixels = [patch.source_pixel for patch in patches]
        self.assertEqual(pixels, sorted(pixels, key=lambda p: (p[1], p[0])))

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=1000))
    def test_values_bounded(self, seed):
        patches = sample_scene(random_frame(seed), PatchConfig(grid_step=16))
        data = np.stack([p.data for p in patches])
        self.assertTrue(np.all(np.abs(data) <= 1.0))
        self.assertTrue(np.all(data[:, 3, 16, 16] == 0.0))


class TestSampleViewPatches(unittest.TestCase):
    def setUp(self):
        pose = Pose(quat_from_axis_angle([1, 1, 0], 40), [0, 0, 0.6])
        self.view = render(make_cube(), pose, K)

    def test_empty_view(self):
        empty = render(make_cube(), Pose(translation=[0, 0, -1]), K)
        self.assertEqual(sample_view_patches(empty, CFG), [])

    def test_threshold_disabled_matches_scene_sampling(self):
        samples = sample_view_patches(self.view, PatchConfig(fg_min_fraction=0.0))
        self.assertEqual(len(samples), len(sample_scene(self.view.to_frame(), CFG)))

    def test_recount_foreground_fraction(self):
        samples = sample_view_patches(self.view, CFG)
        expected = 0
        for u, v in grid_pixels(self.view.to_frame(), 8):
            size = np.float64(patch_pixel_size(self.view.depth[v, u], K, 0.05))
            offsets = (np.arange(32) - 16) / 32
            xs = np.float32(u + offsets * size)
            ys = np.float32(v + offsets * size)
            cols = np.clip(np.rint(xs).astype(int), 0, 639)
            rows = np.clip(np.rint(ys).astype(int), 0, 479)
            fraction = self.view.mask[np.ix_(rows, cols)].mean()
            expected += fraction >= 0.5
        self.assertGreater(len(samples), 0)
        self.assertEqual(len(samples), expected)
        for patch, mask in samples:
            self.assertEqual(mask.shape, (32, 32))
            self.assertGreaterEqual(mask.mean(), 0.5)
