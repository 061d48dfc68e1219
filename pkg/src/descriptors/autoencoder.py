"""
Fully connected (AE) and convolutional (CAE) autoencoders. Both are keras functional models with
one bottleneck of width F; the descriptor of a patch is the bottleneck activation.

AE:  4096 -> hidden -> F -> hidden -> 4096, tanh on every layer
CAE: conv 5x5 -> PReLU -> conv 5x5 -> max-pool 2x2 -> conv 5x5 -> PReLU -> dense F -> dense ->
     learned 2x2 deconvolution -> conv 5x5 -> PReLU -> conv 5x5 -> tanh

Patches are stored channel first (4, 32, 32), the networks run channel last.
"""
import keras
import numpy as np
import tensorflow as tf

from src.descriptors.base_regressor import BaseRegressor, RegressorKind, LayerType
from src.utils.exceptions import ParameterError
from src.utils.keras import fan_in_uniform, reconstruction_loss
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_CHANNELS, PATCH_SIZE, PATCH_VALUES

logger = get_default_logger(__name__)


def to_channels_last(data: np.ndarray) -> np.ndarray:
    """(N, 4, 32, 32) -> (N, 32, 32, 4)"""
    return np.transpose(data, (0, 2, 3, 1))


def to_channels_first(data: np.ndarray) -> np.ndarray:
    """(N, 32, 32, 4) -> (N, 4, 32, 32)"""
    return np.transpose(data, (0, 3, 1, 2))


class AutoencoderRegressor(BaseRegressor):
    """
    Keras autoencoder regressor.
    :param kind: "ae" or "cae"
    :param dimension: bottleneck width F
    :param seed: seed of the weight initialization, layer i uses seed + i
    :param hidden_units: AE hidden width, None for a single layer encoder and decoder
    :param activation: AE activation, "tanh" or "linear"
    :param conv_filters: CAE filter counts of the three encoder convolutions
    :param dtype: "float32" or "float64" (gradient checks)
    """

    def __init__(self, kind: str, dimension: int, seed: int = 0, hidden_units: int | None = 1024,
                 activation: str = "tanh", conv_filters: tuple[int, int, int] = (16, 16, 32),
                 dtype: str = "float32"):
        super().__init__(dimension)
        if kind not in (RegressorKind.AE, RegressorKind.CAE):
            raise ParameterError(f"Unknown autoencoder kind {kind}", "AutoencoderRegressor")
        if activation not in ("tanh", "linear"):
            raise ParameterError(f"Unsupported activation {activation}", "AutoencoderRegressor")
        self.kind = kind
        self.seed = seed
        self.hidden_units = hidden_units
        self.activation = activation
        self.conv_filters = tuple(conv_filters)
        self.dtype = dtype

        # (layer type code, keras layer) of every layer with parameters, in file order
        self._parameter_layers = []
        self._kink_tensors = []
        # "sign" for PReLU inputs, "pool" for max-pool inputs
        self.kink_kinds = []
        self._layer_count = 0

        if kind == RegressorKind.AE:
            inputs, code, outputs = self._build_ae()
        else:
            inputs, code, outputs = self._build_cae()

        self.model = keras.Model(inputs, [code, outputs], name=f"{kind}_{dimension}")
        self.encoder = keras.Model(inputs, code, name=f"{kind}_{dimension}_encoder")
        # outputs plus every tensor whose sign pattern or arg max decides a kink
        self.kink_model = keras.Model(inputs, [outputs, *self._kink_tensors])

        logger.debug(f"Built {kind.upper()}-{dimension} with {self.model.count_params()} "
                     f"parameters ({dtype})")

    def _next_seed(self) -> int:
        self._layer_count += 1
        return self.seed + self._layer_count - 1

    def _dense(self, units: int, activation: str):
        layer = keras.layers.Dense(units, activation=activation,
                                   kernel_initializer=fan_in_uniform(self._next_seed()),
                                   bias_initializer="zeros", dtype=self.dtype)
        code = LayerType.DENSE_TANH if activation == "tanh" else LayerType.DENSE_LINEAR
        self._parameter_layers.append((code, layer))
        return layer

    def _conv(self, filters: int, activation: str = None):
        layer = keras.layers.Conv2D(filters, 5, padding="same", activation=activation,
                                    kernel_initializer=fan_in_uniform(self._next_seed()),
                                    bias_initializer="zeros", dtype=self.dtype)
        code = LayerType.CONV_TANH if activation == "tanh" else LayerType.CONV
        self._parameter_layers.append((code, layer))
        return layer

    def _prelu(self, tensor):
        self._kink_tensors.append(tensor)
        self.kink_kinds.append("sign")
        layer = keras.layers.PReLU(alpha_initializer=keras.initializers.Constant(0.25),
                                   shared_axes=[1, 2], dtype=self.dtype)
        self._parameter_layers.append((LayerType.PRELU, layer))
        return layer(tensor)

    def _build_ae(self):
        inputs = keras.Input((PATCH_SIZE, PATCH_SIZE, PATCH_CHANNELS), dtype=self.dtype)
        x = keras.layers.Flatten(dtype=self.dtype)(inputs)
        if self.hidden_units:
            x = self._dense(self.hidden_units, self.activation)(x)
        code = self._dense(self.dimension, self.activation)(x)
        x = code
        if self.hidden_units:
            x = self._dense(self.hidden_units, self.activation)(x)
        x = self._dense(PATCH_VALUES, self.activation)(x)
        outputs = keras.layers.Reshape((PATCH_SIZE, PATCH_SIZE, PATCH_CHANNELS),
                                       dtype=self.dtype)(x)
        return inputs, code, outputs

    def _build_cae(self):
        first, second, third = self.conv_filters
        half = PATCH_SIZE // 2

        inputs = keras.Input((PATCH_SIZE, PATCH_SIZE, PATCH_CHANNELS), dtype=self.dtype)
        x = self._prelu(self._conv(first)(inputs))
        x = self._conv(second)(x)
        self._kink_tensors.append(x)
        self.kink_kinds.append("pool")
        x = keras.layers.MaxPooling2D(2, dtype=self.dtype)(x)
        x = self._prelu(self._conv(third)(x))
        x = keras.layers.Flatten(dtype=self.dtype)(x)
        code = self._dense(self.dimension, "linear")(x)

        x = self._dense(half * half * third, "linear")(code)
        x = keras.layers.Reshape((half, half, third), dtype=self.dtype)(x)
        deconv = keras.layers.Conv2DTranspose(third, 2, strides=2,
                                              kernel_initializer=fan_in_uniform(self._next_seed()),
                                              bias_initializer="zeros", dtype=self.dtype)
        self._parameter_layers.append((LayerType.DECONV, deconv))
        x = deconv(x)
        x = self._prelu(self._conv(first)(x))
        outputs = self._conv(PATCH_CHANNELS, "tanh")(x)
        return inputs, code, outputs

    def _to_backend(self, data: np.ndarray):
        return tf.convert_to_tensor(to_channels_last(data), dtype=self.dtype)

    def _encode(self, data: np.ndarray) -> np.ndarray:
        return keras.ops.convert_to_numpy(self.encoder(self._to_backend(data), training=False))

    def _forward(self, data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        code, reconstruction = self.model(self._to_backend(data), training=False)
        return (keras.ops.convert_to_numpy(code),
                to_channels_first(keras.ops.convert_to_numpy(reconstruction)))

    def loss(self, data: np.ndarray) -> float:
        """mean squared reconstruction error of a batch, also available before training"""
        _, reconstruction = self._forward(data)
        return float(np.mean((reconstruction - data) ** 2))

    def train_step(self, batch: np.ndarray, optimizer: keras.optimizers.Optimizer) -> float:
        """
        One gradient descent step on the reconstruction loss of a (n, 4, 32, 32) batch.
        :return: loss of the batch before the update
        """
        x = self._to_backend(batch)
        variables = self.model.trainable_variables
        with tf.GradientTape() as tape:
            _, reconstruction = self.model(x, training=True)
            loss = reconstruction_loss(x, reconstruction)
        gradients = tape.gradient(loss, variables)
        optimizer.apply_gradients(zip(gradients, variables))
        return float(loss)

    def layers(self) -> list[tuple[int, list[np.ndarray]]]:
        return [(code, layer.get_weights()) for code, layer in self._parameter_layers]

    def set_layers(self, arrays: list[list[np.ndarray]]):
        """
        Sets the parameters of every parameter layer, in the order of layers().
        :raises ParameterError: if the number of layers or a shape does not match
        """
        if len(arrays) != len(self._parameter_layers):
            raise ParameterError(f"Expected {len(self._parameter_layers)} parameter layers, got "
                                 f"{len(arrays)}", "AutoencoderRegressor")
        for (_, layer), values in zip(self._parameter_layers, arrays):
            expected = [tuple(w.shape) for w in layer.get_weights()]
            if expected != [tuple(np.shape(v)) for v in values]:
                raise ParameterError(f"Shape mismatch in layer {layer.name}: expected {expected}",
                                     "AutoencoderRegressor")
            layer.set_weights([np.asarray(v, dtype=self.dtype) for v in values])

    @property
    def layer_types(self) -> list[int]:
        """type codes of the parameter layers"""
        return [code for code, _ in self._parameter_layers]

    @property
    def parameter_layers(self) -> list:
        """keras layers with parameters, in file order"""
        return [layer for _, layer in self._parameter_layers]
