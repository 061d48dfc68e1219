import unittest

import numpy as np
from hypothesis import given, strategies as st, settings

from src.descriptors.pca_regressor import PcaRegressor, pca_fit
from src.descriptors.training import TrainConfig, train
from src.utils.exceptions import RankError, RegressorStateError, ParameterError


def toy_set(samples: int = 50, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (samples, 4, 32, 32))


class TestPcaFit(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.data = toy_set()
        cls.regressor = pca_fit(cls.data, 10)

    def test_error_equals_discarded_eigenvalues(self):
        reconstruction = self.regressor.reconstruct(self.data)
        total = np.sum((reconstruction - self.data) ** 2)

        flat = self.data.reshape(len(self.data), -1)
        centered = flat - flat.mean(axis=0)
        eigenvalues = np.sort(np.linalg.eigvalsh(centered @ centered.T / (len(flat) - 1)))[::-1]
        expected = eigenvalues[10:].sum()
        self.assertLess(abs(total / (len(flat) - 1) - expected) / expected, 1e-6)

    def test_mean_patch_encodes_to_zero(self):
        mean_patch = self.data.mean(axis=0)
        np.testing.assert_allclose(self.regressor.encode(mean_patch)[0], 0.0, atol=1e-5)

    def test_descriptor_shape_and_dtype(self):
        codes = self.regressor.encode(self.data[:7])
        self.assertEqual(codes.shape, (7, 10))
        self.assertEqual(codes.dtype, np.float32)

    def test_complete_basis_of_the_data_span(self):
        data = toy_set(64, seed=3)
        regressor = pca_fit(data, 63)
        np.testing.assert_allclose(regressor.reconstruct(data), data, atol=1e-8)

    def test_identity_components(self):
        regressor = PcaRegressor.from_arrays(np.zeros(4096), np.eye(4096))
        data = toy_set(3, seed=5)
        np.testing.assert_allclose(regressor.reconstruct(data), data, atol=1e-12)

    def test_better_than_random_projections(self):
        flat = self.data.reshape(len(self.data), -1)
        centered = flat - self.regressor.mean
        best = np.sum((self.regressor.reconstruct(self.data) - self.data) ** 2)
        rng = np.random.default_rng(1)
        for _ in range(100):
            basis, _ = np.linalg.qr(rng.normal(size=(4096, 10)))
            projected = centered @ basis @ basis.T
            self.assertLessEqual(best, np.sum((projected - centered) ** 2) + 1e-9)

    def test_forward_single_patch(self):
        code, reconstruction = self.regressor.forward(self.data[0])
        self.assertEqual(code.shape, (10,))
        self.assertEqual(reconstruction.shape, (4, 32, 32))

    @settings(deadline=None, max_examples=10)
    @given(st.integers(min_value=0, max_value=40))
    def test_batch_sizes(self, count):
        codes = self.regressor.encode(self.data[:count])
        self.assertEqual(codes.shape, (count, 10))
        self.assertTrue(np.all(np.isfinite(codes)))


class TestPcaErrors(unittest.TestCase):
    def test_rank_error(self):
        with self.assertRaises(RankError):
            pca_fit(toy_set(5), 10)

    def test_untrained(self):
        regressor = PcaRegressor(8)
        with self.assertRaises(RegressorStateError):
            regressor.encode(toy_set(2))
        with self.assertRaises(RegressorStateError):
            regressor.forward(toy_set(1)[0])

    def test_not_trainable(self):
        regressor = pca_fit(toy_set(20), 4)
        with self.assertRaises(RegressorStateError):
            regressor.train()
        with self.assertRaises(RegressorStateError):
            train(regressor, toy_set(20), TrainConfig(iterations=1))

    def test_bad_shapes(self):
        regressor = pca_fit(toy_set(20), 4)
        with self.assertRaises(ParameterError):
            regressor.encode(np.zeros((2, 3, 32, 32)))
        with self.assertRaises(ParameterError):
            PcaRegressor(0)


if __name__ == '__main__':
    unittest.main()
