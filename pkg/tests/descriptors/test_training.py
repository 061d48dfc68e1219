import os
import tempfile
import unittest

import numpy as np

from src.descriptors.autoencoder import AutoencoderRegressor
from src.descriptors.training import TrainConfig, train
from src.utils.exceptions import ParameterError, TrainingDivergenceError


def random_patches(count: int, seed: int = 0, amplitude: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-amplitude, amplitude, (count, 4, 32, 32)).astype(np.float32)


def small_ae(seed: int = 0) -> AutoencoderRegressor:
    return AutoencoderRegressor("ae", 8, seed=seed, hidden_units=32)


class TestTrainConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = TrainConfig()
        self.assertEqual(cfg.batch_size, 500)
        self.assertEqual(cfg.learning_rate, 1e-5)
        self.assertEqual(cfg.log_every, 10)

    def test_invalid(self):
        with self.assertRaises(ParameterError):
            TrainConfig(batch_size=0)
        with self.assertRaises(ParameterError):
            TrainConfig(learning_rate=-1.0)
        with self.assertRaises(ParameterError):
            TrainConfig(iterations=0)
        with self.assertRaises(ParameterError):
            TrainConfig(learning_rate=float("nan"))


class TestTrain(unittest.TestCase):
    def test_zero_learning_rate_keeps_loss_constant(self):
        regressor = small_ae()
        run = train(regressor, random_patches(20), TrainConfig(batch_size=8, learning_rate=0.0,
                                                               iterations=30))
        self.assertEqual(len(run.loss_curve), 4)
        self.assertEqual([i for i, _ in run.loss_curve], [0, 10, 20, 30])
        self.assertEqual(len(set(run.losses)), 1)
        self.assertTrue(regressor.trained)

    def test_same_seed_same_curve(self):
        cfg = TrainConfig(batch_size=8, learning_rate=0.05, iterations=40, seed=3)
        first = train(small_ae(), random_patches(30), cfg)
        second = train(small_ae(), random_patches(30), cfg)
        self.assertEqual(first.loss_curve, second.loss_curve)
        self.assertEqual(first.loss, first.loss_curve[-1][1])

    def test_augmentation_changes_training(self):
        plain = train(small_ae(), random_patches(30),
                      TrainConfig(batch_size=8, learning_rate=0.05, iterations=20, augment=False))
        augmented = train(small_ae(), random_patches(30),
                          TrainConfig(batch_size=8, learning_rate=0.05, iterations=20))
        self.assertEqual(plain.loss_curve[0], augmented.loss_curve[0])
        self.assertNotEqual(plain.loss, augmented.loss)

    def test_memorizes_single_pattern(self):
        # one pattern, so every batch size gives the same gradient
        patches = np.repeat(random_patches(1, seed=11, amplitude=0.5), 50, axis=0)
        regressor = AutoencoderRegressor("ae", 32, seed=0)
        run = train(regressor, patches, TrainConfig(batch_size=5, learning_rate=0.045,
                                                    iterations=3000, augment=False,
                                                    monitor_size=1, log_every=100))
        self.assertLess(run.loss, 0.1 * run.losses[0])
        self.assertTrue(np.all(np.isfinite(run.losses)))

    def test_divergence(self):
        regressor = AutoencoderRegressor("ae", 8, hidden_units=None, activation="linear")
        with self.assertRaises(TrainingDivergenceError):
            train(regressor, random_patches(10), TrainConfig(batch_size=10, learning_rate=1e4,
                                                             iterations=200, augment=False))
        self.assertFalse(regressor.trained)

    def test_empty_input(self):
        with self.assertRaises(ParameterError):
            train(small_ae(), np.zeros((0, 4, 32, 32)), TrainConfig(iterations=1))

    def test_run_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            run = train(small_ae(), random_patches(10),
                        TrainConfig(batch_size=4, learning_rate=0.01, iterations=10), run_dir=tmp)
            self.assertEqual(run.path, tmp)
            self.assertTrue(os.path.exists(os.path.join(tmp, "model.pvrg")))
            self.assertTrue(os.path.exists(os.path.join(tmp, "loss_curve.png")))


if __name__ == '__main__':
    unittest.main()
