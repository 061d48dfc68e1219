import unittest

import cv2
import numpy as np

from src.geometry.camera import CameraIntrinsics
from src.geometry.pose import Pose, quat_from_axis_angle
from src.patches.sampling import PatchConfig, sample_view_patches
from src.rendering.procedural import make_cube, make_icosphere
from src.rendering.rasterizer import render
from src.voting.segmentation import paint_mask, segmentation_map
from src.voting.votes import Hypothesis, VoteInstance

K = CameraIntrinsics()
CFG = PatchConfig()


def votes_of_view(view, object_id: int) -> list[VoteInstance]:
    """votes carrying the rendered foreground masks of the view patches"""
    return [VoteInstance(patch.center_point, view.pose.rotation, 1.0, object_id,
                         source_pixel=patch.source_pixel, footprint=patch.footprint, mask=mask)
            for patch, mask in sample_view_patches(view, CFG)]


def hypothesis_of(view, object_id: int) -> Hypothesis:
    votes = votes_of_view(view, object_id)
    return Hypothesis(object_id, view.pose, float(len(votes)), tuple(votes))


class TestSegmentationMap(unittest.TestCase):
    def test_no_hypotheses(self):
        labels = segmentation_map([], K.shape)
        self.assertEqual(labels.shape, (480, 640))
        self.assertFalse(labels.any())

    def test_single_cube(self):
        pose = Pose(quat_from_axis_angle([1, 1, 0], 35), [0.0, 0.0, 0.6])
        view = render(make_cube(), pose, K)
        labels = segmentation_map([hypothesis_of(view, 1)], K.shape)
        segmented = labels == 1
        iou = np.count_nonzero(segmented & view.mask) / np.count_nonzero(segmented | view.mask)
        self.assertGreaterEqual(iou, 0.5)
        self.assertEqual(set(np.unique(labels)), {0, 1})

    def test_two_objects(self):
        cube = render(make_cube(), Pose(quat_from_axis_angle([0, 1, 0], 20),
                                        [-0.12, 0.0, 0.7]), K)
        sphere = render(make_icosphere(), Pose(translation=[0.12, 0.0, 0.7]), K)
        labels = segmentation_map([hypothesis_of(cube, 1), hypothesis_of(sphere, 2)], K.shape)
        self.assertEqual(set(np.unique(labels)), {0, 1, 2})
        for object_id in (1, 2):
            count, _ = cv2.connectedComponents((labels == object_id).astype(np.uint8))
            self.assertEqual(count, 2)  # background + one region
        self.assertEqual(labels[240, int(320 - 0.12 * 575 / 0.7)], 1)
        self.assertEqual(labels[240, int(320 + 0.12 * 575 / 0.7)], 2)

    def test_stronger_object_wins(self):
        mask = np.ones((32, 32), dtype=bool)
        weak = VoteInstance(np.zeros(3), [1, 0, 0, 0], 0.2, 1, (100, 100), (20.0, 20.0), mask)
        strong = VoteInstance(np.zeros(3), [1, 0, 0, 0], 0.9, 2, (100, 100), (20.0, 20.0), mask)
        labels = segmentation_map([Hypothesis(1, Pose(), 0.2, (weak,)),
                                   Hypothesis(2, Pose(), 0.9, (strong,))], K.shape)
        self.assertEqual(labels[100, 100], 2)


class TestPaintMask(unittest.TestCase):
    def test_footprint(self):
        accumulator = np.zeros((100, 100))
        vote = VoteInstance(np.zeros(3), [1, 0, 0, 0], 0.5, 1, (50, 40), (32.0, 32.0),
                            np.ones((32, 32), dtype=bool))
        paint_mask(accumulator, vote)
        ys, xs = np.nonzero(accumulator)
        self.assertEqual((xs.min(), xs.max()), (34, 65))
        self.assertEqual((ys.min(), ys.max()), (24, 55))
        np.testing.assert_allclose(accumulator[accumulator > 0], 0.5)

    def test_mask_orientation(self):
        mask = np.zeros((32, 32), dtype=bool)
        mask[:, :16] = True  # left half
        accumulator = np.zeros((100, 100))
        paint_mask(accumulator, VoteInstance(np.zeros(3), [1, 0, 0, 0], 1.0, 1, (50, 50),
                                             (64.0, 64.0), mask))
        self.assertGreater(accumulator[50, 30], 0)
        self.assertEqual(accumulator[50, 70], 0)

    def test_clipped_at_border(self):
        accumulator = np.zeros((50, 50))
        paint_mask(accumulator, VoteInstance(np.zeros(3), [1, 0, 0, 0], 1.0, 1, (0, 0),
                                             (40.0, 40.0), np.ones((32, 32), dtype=bool)))
        self.assertGreater(accumulator[0, 0], 0)
        self.assertEqual(accumulator[30, 30], 0)

    def test_vote_without_mask(self):
        accumulator = np.zeros((10, 10))
        paint_mask(accumulator, VoteInstance(np.zeros(3), [1, 0, 0, 0], 1.0, 1))
        self.assertFalse(accumulator.any())


if __name__ == '__main__':
    unittest.main()
