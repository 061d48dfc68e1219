import unittest

import numpy as np

from src.evaluation.synthetic import SceneConfig, make_scene, make_scenes
from src.rendering.procedural import default_objects
from src.utils.exceptions import ParameterError

MESHES = default_objects()


class TestMakeScene(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.scenes = make_scenes(MESHES, 4, seed=10)

    def test_frame_ids(self):
        self.assertEqual([s.ground_truth.frame for s in self.scenes],
                         ["000010", "000011", "000012", "000013"])

    def test_deterministic(self):
        again = make_scene(MESHES, 10)
        first = self.scenes[0]
        np.testing.assert_array_equal(again.frame.depth, first.frame.depth)
        np.testing.assert_array_equal(again.frame.color, first.frame.color)
        for (_, expected), (_, actual) in zip(first.ground_truth.annotations,
                                              again.ground_truth.annotations):
            np.testing.assert_array_equal(actual.matrix, expected.matrix)

    def test_seeds_differ(self):
        self.assertFalse(np.array_equal(self.scenes[0].frame.depth, self.scenes[1].frame.depth))

    def test_objects_in_range(self):
        for scene in self.scenes:
            self.assertEqual(sorted(scene.ground_truth.object_ids), [1, 2, 3])
            for object_id, pose in scene.ground_truth.annotations:
                depth = pose.apply(MESHES[object_id].centroid)[2]
                self.assertGreaterEqual(depth, 0.4 - 1e-9)
                self.assertLessEqual(depth, 1.0 + 1e-9)

    def test_background_fills_frame(self):
        for scene in self.scenes:
            self.assertTrue(np.all(scene.frame.valid))
            self.assertLessEqual(scene.frame.depth.max(), 1.4 + 1e-6)

    def test_occlusion(self):
        for scene in self.scenes:
            self.assertIn(scene.occluded_object, [1, 2, 3])
            self.assertGreater(scene.occluded_fraction, 0.15)
            self.assertLess(scene.occluded_fraction, 0.35)

    def test_without_background_and_occluder(self):
        cfg = SceneConfig(occluded_fraction=(0.0, 0.0), background_depth=None)
        scene = make_scene(MESHES, 3, cfg=cfg, frame_id="plain")
        self.assertIsNone(scene.occluded_object)
        self.assertEqual(scene.occluded_fraction, 0.0)
        self.assertEqual(scene.ground_truth.frame, "plain")
        self.assertFalse(np.all(scene.frame.valid))
        self.assertTrue(np.any(scene.frame.valid))

    def test_depth_noise(self):
        clean = make_scene(MESHES, 5)
        noisy = make_scene(MESHES, 5, cfg=SceneConfig(depth_noise=0.002))
        for (_, expected), (_, actual) in zip(clean.ground_truth.annotations,
                                              noisy.ground_truth.annotations):
            np.testing.assert_array_equal(actual.matrix, expected.matrix)
        difference = noisy.frame.depth - clean.frame.depth
        self.assertGreater(np.abs(difference).max(), 0.0)
        self.assertLess(np.abs(difference).std(), 0.004)


class TestSceneConfig(unittest.TestCase):
    def test_invalid(self):
        with self.assertRaises(ParameterError):
            SceneConfig(min_depth=1.0, max_depth=0.5)
        with self.assertRaises(ParameterError):
            SceneConfig(occluded_fraction=(0.3, 0.2))
        with self.assertRaises(ParameterError):
            SceneConfig(background_depth=0.9)
        with self.assertRaises(ParameterError):
            SceneConfig(depth_noise=-0.1)

    def test_negative_count(self):
        with self.assertRaises(ParameterError):
            make_scenes(MESHES, -1)


if __name__ == '__main__':
    unittest.main()
