"""
Binary model file of the regressors (little endian):

    magic "PVRG" | version u32 | kind u8 | F u32 | layer count u32
    per layer:  layer type u8 | array count u32
    per array:  ndim u32 | dims u32 * ndim | float32 values

Arrays are written in the layout keras uses for the layer weights.
"""
import struct

import numpy as np

from src.descriptors.autoencoder import AutoencoderRegressor
from src.descriptors.base_regressor import BaseRegressor, LayerType, RegressorKind
from src.descriptors.pca_regressor import PcaRegressor
from src.utils.binary import BinaryReader
from src.utils.exceptions import FormatError, ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

MAGIC = b"PVRG"
VERSION = 1
_HEADER = "<4sIBII"
_LAYER = "<BI"


def save_regressor(regressor: BaseRegressor, path: str):
    """
    Writes a trained regressor.
    :param regressor: PCA, AE or CAE regressor
    :param path: target file
    """
    layers = regressor.layers()
    chunks = [struct.pack(_HEADER, MAGIC, VERSION, RegressorKind.CODES[regressor.kind],
                          regressor.dimension, len(layers))]
    for code, arrays in layers:
        chunks.append(struct.pack(_LAYER, code, len(arrays)))
        for array in arrays:
            array = np.asarray(array)
            chunks.append(struct.pack(f"<I{array.ndim}I", array.ndim, *array.shape))
            chunks.append(array.astype("<f4").tobytes())
    with open(path, "wb") as file:
        file.write(b"".join(chunks))
    logger.info(f"Saved {regressor!r} to {path}")


def _read_layers(reader: BinaryReader, count: int) -> list[tuple[int, list[np.ndarray]]]:
    layers = []
    for _ in range(count):
        code, arrays = reader.unpack(_LAYER)
        if code not in LayerType.ALL:
            reader.fail(f"Unknown layer type {code}")
        values = []
        for _ in range(arrays):
            ndim, = reader.unpack("<I")
            if ndim > 8:
                reader.fail(f"Implausible array rank {ndim}")
            shape = reader.unpack(f"<{ndim}I")
            values.append(reader.array("<f4", int(np.prod(shape))).reshape(shape))
        layers.append((code, values))
    return layers


def _build_autoencoder(kind: str, dimension: int,
                       layers: list[tuple[int, list[np.ndarray]]]) -> AutoencoderRegressor:
    codes = [code for code, _ in layers]
    if kind == RegressorKind.AE:
        activation = "tanh" if codes[0] == LayerType.DENSE_TANH else "linear"
        hidden = layers[0][1][0].shape[1] if len(layers) == 4 else None
        regressor = AutoencoderRegressor(kind, dimension, hidden_units=hidden,
                                         activation=activation)
    else:
        filters = (layers[0][1][0].shape[3], layers[2][1][0].shape[3], layers[3][1][0].shape[3])
        regressor = AutoencoderRegressor(kind, dimension, conv_filters=filters)
    if regressor.layer_types != codes:
        raise FormatError(f"Layer sequence {codes} does not describe a {kind.upper()}",
                          component="model_file")
    return regressor


def load_regressor(path: str) -> BaseRegressor:
    """
    Reads a model file.
    :param path: model file
    :return: trained regressor
    :raises FormatError: for bad magic, unsupported version, unknown codes or truncation
    """
    reader = BinaryReader.from_file(path, "model_file")
    reader.expect_magic(MAGIC)
    version, kind_code, dimension, count = reader.unpack("<IBII")
    if version != VERSION:
        reader.fail(f"Unsupported model file version {version}")
    kinds = {code: kind for kind, code in RegressorKind.CODES.items()}
    if kind_code not in kinds:
        reader.fail(f"Unknown regressor kind {kind_code}")
    kind = kinds[kind_code]
    layers = _read_layers(reader, count)
    reader.expect_end()

    if not layers:
        raise FormatError("Model file without layers", component="model_file")
    if kind == RegressorKind.PCA:
        if len(layers) != 1 or layers[0][0] != LayerType.PCA or len(layers[0][1]) != 2:
            raise FormatError("PCA model files hold exactly one PCA layer", component="model_file")
        regressor = PcaRegressor.from_arrays(*layers[0][1])
    else:
        try:
            regressor = _build_autoencoder(kind, dimension, layers)
            regressor.set_layers([arrays for _, arrays in layers])
        except (IndexError, ParameterError) as exc:
            raise FormatError(f"Inconsistent {kind.upper()} layers: {exc}",
                              component="model_file") from exc
        regressor.trained = True

    if regressor.dimension != dimension:
        raise FormatError(f"Header dimension {dimension} does not match the layers "
                          f"({regressor.dimension})", component="model_file")
    logger.info(f"Loaded {regressor!r} from {path}")
    return regressor
