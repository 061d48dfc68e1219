"""
PCA baseline regressor: the descriptor is the centered projection on the top F principal
components of the flattened 4096 dimensional patches.
"""
import numpy as np
from sklearn.decomposition import PCA

from src.descriptors.base_regressor import BaseRegressor, RegressorKind, LayerType, as_batch
from src.utils.exceptions import RankError, RegressorStateError
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_CHANNELS, PATCH_SIZE, PATCH_VALUES

logger = get_default_logger(__name__)


class PcaRegressor(BaseRegressor):
    """
    Linear regressor with encode(x) = C (x - mean) and reconstruct(d) = C^T d + mean.
    """
    KIND = RegressorKind.PCA

    def __init__(self, dimension: int):
        super().__init__(dimension)
        self.mean = None
        self.components = None
        self.explained_variance = None

    @classmethod
    def from_arrays(cls, mean: np.ndarray, components: np.ndarray) -> "PcaRegressor":
        """Creates a trained regressor from a mean (4096,) and components (F, 4096)"""
        regressor = cls(len(components))
        regressor.mean = np.asarray(mean, dtype=np.float64).reshape(PATCH_VALUES)
        regressor.components = np.asarray(components, dtype=np.float64)
        regressor.trained = True
        return regressor

    def fit(self, patches) -> "PcaRegressor":
        """
        Fits mean and components to the patches.
        :param patches: list of Patch or (N, 4, 32, 32) array
        :return: self
        :raises RankError: if there are fewer patches than descriptor dimensions
        """
        data = as_batch(patches).reshape(-1, PATCH_VALUES).astype(np.float64)
        if len(data) < self.dimension:
            raise RankError(f"PCA with F={self.dimension} needs at least {self.dimension} "
                            f"samples, got {len(data)}", "PcaRegressor")
        if self.dimension > PATCH_VALUES:
            raise RankError(f"F={self.dimension} exceeds the patch dimension {PATCH_VALUES}",
                            "PcaRegressor")

        pca = PCA(n_components=self.dimension, svd_solver="full")
        pca.fit(data)

        self.mean = pca.mean_
        self.components = pca.components_
        self.explained_variance = pca.explained_variance_
        self.trained = True
        logger.info(f"Fitted PCA-{self.dimension} on {len(data)} patches, explained variance "
                    f"ratio {pca.explained_variance_ratio_.sum():.3f}")
        return self

    def _encode(self, data: np.ndarray) -> np.ndarray:
        flat = data.reshape(len(data), -1).astype(np.float64)
        return (flat - self.mean) @ self.components.T

    def _forward(self, data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        codes = self._encode(data)
        reconstructions = codes @ self.components + self.mean
        return codes, reconstructions.reshape(len(data), PATCH_CHANNELS, PATCH_SIZE, PATCH_SIZE)

    def layers(self) -> list[tuple[int, list[np.ndarray]]]:
        self._check_trained()
        return [(LayerType.PCA, [self.mean, self.components])]

    def train(self, *_args, **_kwargs):
        """PCA is fitted in closed form and can not be trained by gradient descent"""
        raise RegressorStateError("PCA regressors are fitted with pca_fit, not trained",
                                  "PcaRegressor")


def pca_fit(patches, dimension: int) -> PcaRegressor:
    """
    Fits a PCA regressor.
    :param patches: list of Patch or (N, 4, 32, 32) array
    :param dimension: descriptor dimension F
    :return: trained PcaRegressor
    """
    return PcaRegressor(dimension).fit(patches)
