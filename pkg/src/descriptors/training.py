"""
Stochastic gradient descent training of the autoencoder regressors on patch reconstruction, and
fitting of the configured regressor kind.
"""
import os
from dataclasses import dataclass, field

import keras
import numpy as np
import pandas as pd

from src.descriptors.autoencoder import AutoencoderRegressor
from src.descriptors.base_regressor import BaseRegressor, RegressorKind, as_batch
from src.descriptors.pca_regressor import pca_fit
from src.patches.augmentation import augment_batch
from src.utils.exceptions import ParameterError, RegressorStateError, TrainingDivergenceError
from src.utils.general import plot_loss_curve
from src.utils.keras import configure_determinism
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """
    Training parameters.
    :param batch_size: patches per iteration (capped at the data set size)
    :param learning_rate: fixed SGD learning rate, 0 disables updates
    :param iterations: number of SGD steps
    :param seed: seed of the batch order and the augmentation draws
    :param augment: apply flips and color permutations per sample and epoch
    :param monitor_size: size of the fixed, un-augmented subset the loss curve is measured on
    :param log_every: loss curve resolution in iterations
    """
    batch_size: int = 500
    learning_rate: float = 1e-5
    iterations: int = 2000
    seed: int = 0
    augment: bool = True
    monitor_size: int = 256
    log_every: int = 10

    def __post_init__(self):
        if self.batch_size < 1 or self.iterations < 1 or self.monitor_size < 1:
            raise ParameterError("batch_size, iterations and monitor_size have to be positive",
                                 "TrainConfig")
        if self.learning_rate < 0 or not np.isfinite(self.learning_rate):
            raise ParameterError(f"Invalid learning rate {self.learning_rate}", "TrainConfig")
        if self.log_every < 1:
            raise ParameterError("log_every has to be positive", "TrainConfig")


@dataclass
class TrainingRun:
    """
    Record of a training run.
    :param loss_curve: (iteration, loss) pairs measured on the monitor subset
    :param loss: last monitored loss
    :param ts_start: timestamp of the start of the run
    :param path: directory the run artifacts were written to, if any
    """
    loss_curve: list[tuple[int, float]] = field(default_factory=list)
    loss: float = None
    ts_start: pd.Timestamp = field(default_factory=pd.Timestamp.utcnow)
    path: str = None

    @property
    def losses(self) -> np.ndarray:
        """monitored losses without the iteration numbers"""
        return np.array([loss for _, loss in self.loss_curve])


def train(regressor: BaseRegressor, patches, cfg: TrainConfig,
          run_dir: str = None) -> TrainingRun:
    """
    Trains an autoencoder regressor with plain SGD on the mean squared reconstruction error.
    Samples are drawn epoch wise from a seeded permutation and augmented when drawn. The loss
    curve is measured every cfg.log_every iterations on a fixed subset before the update and
    once after the last iteration.
    :param regressor: AE or CAE regressor, modified in place and marked trained
    :param patches: list of Patch or (N, 4, 32, 32) array
    :param cfg: training parameters
    :param run_dir: optional directory for the model file and the loss curve plot
    :return: TrainingRun
    :raises RegressorStateError: for PCA regressors
    :raises TrainingDivergenceError: if the loss becomes non-finite
    """
    if not isinstance(regressor, AutoencoderRegressor):
        raise RegressorStateError(f"{regressor!r} can not be trained by gradient descent",
                                  "train")
    data = as_batch(patches).astype(regressor.dtype)
    if len(data) == 0:
        raise ParameterError("No training patches", "train")

    configure_determinism(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    monitor = data[np.sort(rng.choice(len(data), min(len(data), cfg.monitor_size),
                                      replace=False))]
    optimizer = keras.optimizers.SGD(learning_rate=cfg.learning_rate)
    batch_size = min(cfg.batch_size, len(data))

    run = TrainingRun()
    logger.info(f"Training {regressor!r} on {len(data)} patches for {cfg.iterations} "
                f"iterations (batch {batch_size}, lr {cfg.learning_rate})")

    order, position = rng.permutation(len(data)), 0
    last_finite = None
    for iteration in range(cfg.iterations):
        if iteration % cfg.log_every == 0:
            run.loss_curve.append((iteration, regressor.loss(monitor)))
            logger.debug(f"Iteration {iteration}: monitored loss {run.loss_curve[-1][1]:.6f}")

        if position + batch_size > len(data):
            order, position = rng.permutation(len(data)), 0
        batch = data[order[position:position + batch_size]]
        position += batch_size
        if cfg.augment:
            batch = augment_batch(batch, rng)

        loss = regressor.train_step(batch, optimizer)
        if not np.isfinite(loss):
            raise TrainingDivergenceError(f"Loss became {loss} at iteration {iteration}, last "
                                          f"finite loss {last_finite}", "train")
        last_finite = loss

    run.loss_curve.append((cfg.iterations, regressor.loss(monitor)))
    run.loss = run.loss_curve[-1][1]
    if not np.isfinite(run.loss):
        raise TrainingDivergenceError(f"Monitored loss became {run.loss} after training",
                                      "train")
    regressor.trained = True
    logger.info(f"Trained {regressor!r}, loss {run.loss_curve[0][1]:.5f} -> {run.loss:.5f}")

    if run_dir is not None:
        os.makedirs(run_dir, exist_ok=True)
        run.path = run_dir
        regressor.save(os.path.join(run_dir, "model.pvrg"))
        plot_loss_curve(run.loss_curve, os.path.join(run_dir, "loss_curve.png"),
                        title=f"{regressor.kind.upper()}-{regressor.dimension}")
    return run


@dataclass(frozen=True)
class RegressorConfig:
    """
    Kind and size of the descriptor regressor.
    :param kind: "pca", "ae" or "cae"
    :param dimension: descriptor dimension F
    :param hidden_units: AE hidden width, 0 for a single layer encoder and decoder
    :param seed: seed of the weight initialization
    """
    kind: str = RegressorKind.PCA
    dimension: int = 64
    hidden_units: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.kind not in RegressorKind.ALL:
            raise ParameterError(f"Unknown regressor kind {self.kind}", "RegressorConfig")
        if self.dimension < 1 or self.hidden_units < 0:
            raise ParameterError(f"Invalid regressor size {self}", "RegressorConfig")


def fit_regressor(cfg: RegressorConfig, patches, train_cfg: TrainConfig,
                  run_dir: str = None) -> tuple[BaseRegressor, TrainingRun | None]:
    """
    Fits PCA or trains an autoencoder on the patches.
    :param cfg: regressor kind and size
    :param patches: list of Patch or (N, 4, 32, 32) array
    :param train_cfg: SGD parameters, unused for PCA
    :param run_dir: optional directory for the model file and training artifacts
    :return: trained regressor and the training run (None for PCA)
    """
    if cfg.kind == RegressorKind.PCA:
        regressor = pca_fit(patches, cfg.dimension)
        if run_dir is not None:
            os.makedirs(run_dir, exist_ok=True)
            regressor.save(os.path.join(run_dir, "model.pvrg"))
        return regressor, None
    regressor = AutoencoderRegressor(cfg.kind, cfg.dimension, seed=cfg.seed,
                                     hidden_units=cfg.hidden_units or None)
    return regressor, train(regressor, patches, train_cfg, run_dir)
