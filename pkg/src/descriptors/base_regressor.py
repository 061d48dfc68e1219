"""
Base class of all descriptor regressors. A regressor maps normalized 4x32x32 patches to an
F dimensional descriptor (encode) and back to patch space (reconstruct).
"""
from abc import ABC, abstractmethod

import numpy as np

from src.patches.sampling import Patch, stack_patches
from src.utils.exceptions import ParameterError, RegressorStateError
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_CHANNELS, PATCH_SIZE

logger = get_default_logger(__name__)

_BATCH = 1024


class RegressorKind:
    """Enum of the regressor kinds and their model file codes"""
    PCA = "pca"
    AE = "ae"
    CAE = "cae"
    ALL = [PCA, AE, CAE]
    CODES = {PCA: 0, AE: 1, CAE: 2}


class LayerType:
    """Enum of the parameter layer codes of the model file"""
    PCA = 0
    DENSE_TANH = 1
    DENSE_LINEAR = 2
    CONV = 3
    CONV_TANH = 4
    PRELU = 5
    DECONV = 6
    ALL = [PCA, DENSE_TANH, DENSE_LINEAR, CONV, CONV_TANH, PRELU, DECONV]


def as_batch(patches) -> np.ndarray:
    """
    Converts a Patch, a list of patches or an array of patch data into a (N, 4, 32, 32) array.
    """
    if isinstance(patches, Patch):
        return patches.data[None]
    if isinstance(patches, list):
        return stack_patches(patches)
    data = np.asarray(patches)
    if data.shape == (PATCH_CHANNELS, PATCH_SIZE, PATCH_SIZE):
        data = data[None]
    if data.shape[1:] != (PATCH_CHANNELS, PATCH_SIZE, PATCH_SIZE):
        raise ParameterError(f"Expected patches of shape (N, 4, 32, 32), got {data.shape}",
                             "Regressor")
    return data


class BaseRegressor(ABC):
    """
    Trainable encoder/decoder with a single bottleneck of width F.
    """
    KIND: str = None

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ParameterError(f"Descriptor dimension has to be positive, got {dimension}",
                                 type(self).__name__)
        self.dimension = dimension
        self.kind = self.KIND
        self.trained = False

    def _check_trained(self):
        if not self.trained:
            raise RegressorStateError(f"{type(self).__name__} (F={self.dimension}) is not trained",
                                      type(self).__name__)

    @abstractmethod
    def _encode(self, data: np.ndarray) -> np.ndarray:
        """encodes a (n, 4, 32, 32) batch"""

    @abstractmethod
    def _forward(self, data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """descriptors and reconstructions of a (n, 4, 32, 32) batch"""

    @abstractmethod
    def layers(self) -> list[tuple[int, list[np.ndarray]]]:
        """parameter layers as (layer type code, arrays) used by the model file"""

    def encode(self, patches) -> np.ndarray:
        """
        Descriptors of one or many patches.
        :param patches: Patch, list of Patch or (N, 4, 32, 32) array
        :return: (N, F) float32 descriptors
        :raises RegressorStateError: if the regressor is not trained
        """
        self._check_trained()
        data = as_batch(patches)
        if len(data) == 0:
            return np.zeros((0, self.dimension), dtype=np.float32)
        out = [self._encode(data[i:i + _BATCH]) for i in range(0, len(data), _BATCH)]
        return np.concatenate(out).astype(np.float32)

    def reconstruct(self, patches) -> np.ndarray:
        """
        Reconstructions of one or many patches.
        :return: (N, 4, 32, 32) array
        """
        return self.forward_batch(patches)[1]

    def forward_batch(self, patches) -> tuple[np.ndarray, np.ndarray]:
        """
        Descriptors and reconstructions of a batch.
        :return: (N, F) descriptors and (N, 4, 32, 32) reconstructions
        """
        self._check_trained()
        data = as_batch(patches)
        codes, reconstructions = [], []
        for i in range(0, len(data), _BATCH):
            code, reconstruction = self._forward(data[i:i + _BATCH])
            codes.append(code)
            reconstructions.append(reconstruction)
        if not codes:
            return (np.zeros((0, self.dimension)),
                    np.zeros((0, PATCH_CHANNELS, PATCH_SIZE, PATCH_SIZE)))
        return np.concatenate(codes), np.concatenate(reconstructions)

    def forward(self, patch: Patch) -> tuple[np.ndarray, np.ndarray]:
        """
        Descriptor and reconstruction of a single patch.
        :return: (F,) descriptor and (4, 32, 32) reconstruction
        """
        codes, reconstructions = self.forward_batch(patch)
        return codes[0], reconstructions[0]

    def reconstruction_errors(self, patches) -> np.ndarray:
        """mean squared reconstruction error per patch"""
        data = as_batch(patches)
        reconstructions = self.reconstruct(data)
        return np.mean((reconstructions - data) ** 2, axis=(1, 2, 3))

    def save(self, path: str):
        """Writes the regressor as model file"""
        # pylint: disable=import-outside-toplevel
        from src.descriptors.model_file import save_regressor
        save_regressor(self, path)

    def __repr__(self):
        state = "trained" if self.trained else "untrained"
        return f"{type(self).__name__}(F={self.dimension}, {state})"
