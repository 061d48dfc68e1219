import math
import unittest

import numpy as np
from hypothesis import given, strategies as st, settings

from src.codebook.codebook import Codebook
from src.codebook.index import IndexParams
from src.descriptors.pca_regressor import PcaRegressor
from src.patches.sampling import Patch
from src.utils.exceptions import DimensionMismatchError, ParameterError
from src.voting.casting import cast_votes
from src.voting.votes import VoteParams

F = 8


def head_regressor(dimension: int = F) -> PcaRegressor:
    """descriptor = first values of the flattened patch"""
    return PcaRegressor.from_arrays(np.zeros(4096), np.eye(4096)[:dimension])


def make_patches(count: int, seed: int = 0) -> list[Patch]:
    rng = np.random.default_rng(seed)
    return [Patch(rng.uniform(-1, 1, (4, 32, 32)).astype(np.float32),
                  np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 1.0)]),
                  (int(rng.integers(0, 640)), int(rng.integers(0, 480))), (40.0, 40.0))
            for _ in range(count)]


def make_codebook(descriptors: np.ndarray, seed: int = 1) -> Codebook:
    rng = np.random.default_rng(seed)
    count = len(descriptors)
    orientations = rng.normal(size=(count, 4))
    orientations /= np.linalg.norm(orientations, axis=1, keepdims=True)
    return Codebook(descriptors, rng.uniform(-0.05, 0.05, (count, 3)), orientations,
                    rng.random((count, 32, 32)) < 0.5, rng.integers(1, 3, count),
                    IndexParams(exact=True))


class TestCastVotes(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.regressor = head_regressor()
        cls.patches = make_patches(20)
        stored = np.stack([patch.data.reshape(-1)[:F] for patch in cls.patches[:5]])
        noise = np.random.default_rng(2).uniform(-1, 1, (40, F))
        cls.codebook = make_codebook(np.concatenate([stored, noise]))

    def test_tau_zero(self):
        self.assertEqual(cast_votes(self.patches, self.codebook, self.regressor,
                                    VoteParams(tau=0.0)), [])

    def test_exact_match(self):
        votes = cast_votes(self.patches[:1], self.codebook, self.regressor, VoteParams(k=1))
        self.assertEqual(len(votes), 1)
        vote = votes[0]
        self.assertEqual(vote.entry, 0)
        self.assertEqual(vote.weight, 1.0)
        np.testing.assert_array_equal(vote.centroid,
                                      self.patches[0].center_point + self.codebook.offsets[0])
        np.testing.assert_array_equal(vote.orientation, self.codebook.orientations[0])
        np.testing.assert_array_equal(vote.mask, self.codebook.masks[0])
        self.assertEqual(vote.object_id, self.codebook.object_ids[0])
        self.assertEqual(vote.source_pixel, self.patches[0].source_pixel)

    def test_unconstrained(self):
        for k in (1, 3, 7):
            votes = cast_votes(self.patches, self.codebook, self.regressor,
                               VoteParams(k=k, tau=math.inf))
            self.assertEqual(len(votes), len(self.patches) * k)

    def test_weights(self):
        for patch in self.patches[3:8]:
            query = patch.data.reshape(-1)[:F].astype(np.float64)
            for vote in cast_votes([patch], self.codebook, self.regressor,
                                   VoteParams(k=4, tau=3.0)):
                distance = np.linalg.norm(self.codebook.descriptors[vote.entry] - query)
                self.assertAlmostEqual(vote.weight, math.exp(-distance), places=12)
                self.assertGreater(vote.weight, math.exp(-3.0))
                self.assertLessEqual(vote.weight, 1.0)

    @settings(deadline=None, max_examples=30)
    @given(st.lists(st.floats(0.0, 6.0), min_size=2, max_size=5), st.integers(1, 5))
    def test_monotone_in_tau(self, taus, k):
        counts = [len(cast_votes(self.patches, self.codebook, self.regressor,
                                 VoteParams(k=k, tau=tau)))
                  for tau in sorted(taus)]
        self.assertEqual(counts, sorted(counts))
        self.assertLessEqual(counts[-1], len(self.patches) * k)

    def test_empty_scene(self):
        self.assertEqual(cast_votes([], self.codebook, self.regressor, VoteParams()), [])

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            cast_votes(self.patches, self.codebook, head_regressor(F + 1), VoteParams())

    def test_invalid_params(self):
        with self.assertRaises(ParameterError):
            VoteParams(k=0)
        with self.assertRaises(ParameterError):
            VoteParams(tau=-1.0)
        with self.assertRaises(ParameterError):
            VoteParams(ms_trans_radius=0.0)
        self.assertEqual(VoteParams(k=5).min_cell_votes, 5)


if __name__ == '__main__':
    unittest.main()
