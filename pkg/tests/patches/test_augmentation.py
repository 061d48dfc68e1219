import itertools
import unittest

import numpy as np
from hypothesis import given, strategies as st, settings

from src.patches.augmentation import augment, augment_with, augment_batch, COLOR_PERMUTATIONS
from src.patches.sampling import Patch


def random_patch(seed: int = 0) -> Patch:
    data = np.random.default_rng(seed).uniform(-1, 1, (4, 32, 32)).astype(np.float32)
    return Patch(data, np.array([0.0, 0.0, 1.0]), (10, 20), (30.0, 30.0))


class TestAugmentation(unittest.TestCase):
    def test_identity(self):
        patch = random_patch()
        np.testing.assert_array_equal(augment_with(patch, False, False).data, patch.data)

    def test_double_flip_is_identity(self):
        patch = random_patch()
        twice = augment_with(augment_with(patch, True, False), True, False)
        np.testing.assert_array_equal(twice.data, patch.data)
        twice = augment_with(augment_with(patch, False, True), False, True)
        np.testing.assert_array_equal(twice.data, patch.data)

    def test_three_cycle(self):
        patch = random_patch()
        cycle = (2, 0, 1)
        result = patch
        for _ in range(3):
            result = augment_with(result, False, False, cycle)
        np.testing.assert_array_equal(result.data, patch.data)
        once = augment_with(patch, False, False, cycle)
        np.testing.assert_array_equal(once.data[0], patch.data[2])

    def test_depth_never_permuted(self):
        patch = random_patch()
        for permutation in COLOR_PERMUTATIONS:
            out = augment_with(patch, False, False, permutation)
            np.testing.assert_array_equal(out.data[3], patch.data[3])
        flipped = augment_with(patch, True, True, (1, 2, 0))
        np.testing.assert_array_equal(flipped.data[3], patch.data[3, ::-1, ::-1])

    def test_metadata_kept(self):
        patch = random_patch()
        out = augment(patch, 4)
        self.assertEqual(out.source_pixel, patch.source_pixel)
        np.testing.assert_array_equal(out.center_point, patch.center_point)

    @settings(deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_seeded_and_valid(self, seed):
        patch = random_patch()
        first, second = augment(patch, seed), augment(patch, seed)
        np.testing.assert_array_equal(first.data, second.data)
        variants = [augment_with(patch, h, v, p).data for h, v, p in
                    itertools.product([False, True], [False, True], COLOR_PERMUTATIONS)]
        self.assertTrue(any(np.array_equal(first.data, variant) for variant in variants))

    def test_batch_draws_are_valid_variants(self):
        patches = [random_patch(seed) for seed in range(8)]
        batch = np.stack([patch.data for patch in patches])
        out = augment_batch(batch, np.random.default_rng(0))
        self.assertEqual(out.shape, batch.shape)
        self.assertEqual(out.dtype, batch.dtype)
        for patch, augmented in zip(patches, out):
            variants = [augment_with(patch, h, v, p).data for h, v, p in
                        itertools.product([False, True], [False, True], COLOR_PERMUTATIONS)]
            self.assertTrue(any(np.array_equal(augmented, variant) for variant in variants))
