"""
Finite difference check of the backpropagated gradients of the reconstruction loss.
"""
import keras
import numpy as np
import pandas as pd
import tensorflow as tf

from src.descriptors.autoencoder import AutoencoderRegressor, to_channels_last
from src.descriptors.base_regressor import as_batch
from src.utils.exceptions import ParameterError
from src.utils.keras import reconstruction_loss
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

# gradients below this magnitude are compared absolutely
MIN_GRADIENT_MAGNITUDE = 1e-6


def _kink_pattern(regressor: AutoencoderRegressor, tensors) -> list[np.ndarray]:
    pattern = []
    for kind, tensor in zip(regressor.kink_kinds, tensors):
        values = keras.ops.convert_to_numpy(tensor)
        if kind == "pool":
            n, height, width, channels = values.shape
            windows = values.reshape(n, height // 2, 2, width // 2, 2, channels)
            windows = windows.transpose(0, 1, 3, 5, 2, 4).reshape(n, height // 2, width // 2,
                                                                  channels, 4)
            pattern.append(np.argmax(windows, axis=-1))
        else:
            pattern.append(values > 0)
    return pattern


def _evaluate(regressor: AutoencoderRegressor, inputs, target: np.ndarray):
    results = regressor.kink_model(inputs, training=False)
    if not isinstance(results, (list, tuple)):
        results = [results]
    reconstruction = keras.ops.convert_to_numpy(results[0])
    return (reconstruction - target) ** 2, _kink_pattern(regressor, results[1:])


def _same_pattern(first: list[np.ndarray], second: list[np.ndarray]) -> bool:
    return all(np.array_equal(a, b) for a, b in zip(first, second))


def gradient_errors(regressor: AutoencoderRegressor, patches, epsilon: float = 1e-5,
                    samples_per_variable: int = 6, seed: int = 0) -> pd.DataFrame:
    """
    Compares the analytic gradient of the reconstruction loss with central finite differences
    for randomly drawn entries of every trainable variable. Entries whose perturbation flips a
    PReLU sign or a max-pool selection are skipped since the loss is not differentiable there.
    :param regressor: AE or CAE regressor built with dtype float64
    :param patches: Patch, list of Patch or (N, 4, 32, 32) array the loss is evaluated on
    :param epsilon: finite difference step
    :param samples_per_variable: checked entries per variable
    :param seed: seed of the entry selection
    :return: DataFrame with one row per variable: variable, layer_type, checked, skipped,
        max_rel_error
    :raises ParameterError: if the regressor is not in double precision
    """
    if not isinstance(regressor, AutoencoderRegressor) or regressor.dtype != "float64":
        raise ParameterError("Gradient checks need an autoencoder in float64", "gradient_check")

    target = to_channels_last(as_batch(patches).astype(np.float64))
    inputs = tf.convert_to_tensor(target)
    rng = np.random.default_rng(seed)

    variables, types = [], []
    for code, layer in zip(regressor.layer_types, regressor.parameter_layers):
        for variable in layer.trainable_variables:
            variables.append(variable)
            types.append(code)

    with tf.GradientTape() as tape:
        _, reconstruction = regressor.model(inputs, training=False)
        loss = reconstruction_loss(inputs, reconstruction)
    gradients = [keras.ops.convert_to_numpy(g) for g in tape.gradient(loss, variables)]
    _, base_pattern = _evaluate(regressor, inputs, target)

    rows = []
    for variable, code, gradient in zip(variables, types, gradients):
        original = variable.numpy()
        flat_gradient = gradient.reshape(-1)
        candidates = rng.permutation(original.size)[:4 * samples_per_variable]
        errors, skipped = [], 0
        for index in candidates:
            if len(errors) == samples_per_variable:
                break
            values = original.copy().reshape(-1)
            values[index] += epsilon
            variable.assign(values.reshape(original.shape))
            sq_plus, plus_pattern = _evaluate(regressor, inputs, target)
            values[index] -= 2 * epsilon
            variable.assign(values.reshape(original.shape))
            sq_minus, minus_pattern = _evaluate(regressor, inputs, target)
            variable.assign(original)

            if not (_same_pattern(plus_pattern, base_pattern)
                    and _same_pattern(minus_pattern, base_pattern)):
                skipped += 1
                continue
            numeric = np.sum(sq_plus - sq_minus) / (2 * epsilon * sq_plus.size)
            analytic = flat_gradient[index]
            errors.append(abs(analytic - numeric)
                          / max(abs(analytic), abs(numeric), MIN_GRADIENT_MAGNITUDE))

        rows.append({"variable": variable.path, "layer_type": code, "checked": len(errors),
                     "skipped": skipped,
                     "max_rel_error": max(errors) if errors else np.nan})
        logger.debug(f"Gradient check {variable.path}: {len(errors)} entries, "
                     f"max relative error {rows[-1]['max_rel_error']:.3e}")
    return pd.DataFrame(rows)


def gradient_check(regressor: AutoencoderRegressor, patches, epsilon: float = 1e-5,
                   samples_per_variable: int = 6, seed: int = 0) -> float:
    """
    Maximum relative error between analytic and finite difference gradients over every
    parameter group of the regressor, see gradient_errors.
    :return: max relative error
    """
    table = gradient_errors(regressor, patches, epsilon, samples_per_variable, seed)
    result = float(table["max_rel_error"].max())
    logger.info(f"Gradient check of {regressor!r}: max relative error {result:.3e} over "
                f"{int(table['checked'].sum())} entries")
    return result
