"""
This file contains custom keras objects and the settings used for reproducible training.
"""

import keras
import tensorflow as tf

from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


@keras.saving.register_keras_serializable(package="Losses", name="reconstruction_mse")
def reconstruction_loss(y_true, y_pred):
    """
    Unweighted mean of the squared differences over all values of the batch, color and depth
    channels count equally.
    :param y_true: target patches
    :param y_pred: reconstructed patches
    :return: tensor with a single value
    """
    return tf.math.reduce_mean(tf.math.square(y_true - y_pred))


reconstruction_loss.__name__ = 'reconstruction_mse'


def fan_in_uniform(seed: int) -> keras.initializers.Initializer:
    """
    Uniform initializer scaled by the fan in of the layer.
    :param seed: seed of the initializer
    """
    return keras.initializers.VarianceScaling(scale=1.0, mode="fan_in", distribution="uniform",
                                              seed=seed)


def configure_determinism(seed: int):
    """
    Seeds python, numpy and the backend and switches tensorflow to deterministic single threaded
    kernels. The thread count can only be set before the runtime is initialized, later calls keep
    the current setting.
    :param seed: global seed
    """
    keras.utils.set_random_seed(seed)
    tf.config.experimental.enable_op_determinism()
    try:
        tf.config.threading.set_inter_op_parallelism_threads(1)
        tf.config.threading.set_intra_op_parallelism_threads(1)
    except RuntimeError:
        logger.debug("Tensorflow runtime already initialized, thread count unchanged")
