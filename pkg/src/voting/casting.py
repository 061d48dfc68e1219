"""
Constrained 6D vote casting: every scene patch retrieves its k nearest codebook entries and each
neighbor closer than tau in feature space votes for the object centroid s + offset with the
stored orientation.
"""
import numpy as np

from src.codebook.codebook import Codebook
from src.descriptors.base_regressor import BaseRegressor
from src.patches.sampling import Patch, stack_patches
from src.utils.exceptions import DimensionMismatchError
from src.utils.logging import get_default_logger
from src.voting.votes import VoteInstance, VoteParams

logger = get_default_logger(__name__)


def encode_scene(patches: list[Patch], regressor: BaseRegressor) -> np.ndarray:
    """
    Descriptors of the scene patches in the float32 precision of the codebook.
    :return: (S, F) array
    """
    if not patches:
        return np.zeros((0, regressor.dimension), dtype=np.float32)
    return np.asarray(regressor.encode(stack_patches(patches)), dtype=np.float32)


def cast_from_descriptors(patches: list[Patch], descriptors: np.ndarray, codebook: Codebook,
                          params: VoteParams, exact: bool = None) -> list[VoteInstance]:
    """
    Casts the votes of already encoded scene patches.
    :param patches: scene patches
    :param descriptors: (S, F) descriptors of the patches
    :param codebook: codebook to search
    :param params: vote parameters, k and tau are used
    :param exact: retrieval mode override, the codebook index parameters decide if None
    :return: votes in scene patch order, then neighbor order
    """
    if descriptors.shape[1] != codebook.dimension:
        raise DimensionMismatchError(f"Descriptor dimension {descriptors.shape[1]} does not "
                                     f"match the codebook dimension {codebook.dimension}",
                                     "cast_votes")
    if not patches or len(codebook) == 0:
        return []

    indices, distances = codebook.query(descriptors, params.k, exact)
    weights = np.exp(-distances)
    votes = []
    for patch, rows, row_distances, row_weights in zip(patches, indices, distances, weights):
        for entry, distance, weight in zip(rows, row_distances, row_weights):
            if entry < 0 or not distance < params.tau or weight <= 0:
                continue
            votes.append(VoteInstance(centroid=patch.center_point + codebook.offsets[entry],
                                      orientation=codebook.orientations[entry].astype(np.float64),
                                      weight=float(weight),
                                      object_id=int(codebook.object_ids[entry]),
                                      source_pixel=patch.source_pixel,
                                      footprint=patch.footprint,
                                      mask=codebook.masks[entry],
                                      entry=int(entry)))
    logger.debug(f"{len(votes)} of {len(patches) * min(params.k, len(codebook))} possible votes "
                 f"passed tau={params.tau}")
    return votes


def cast_votes(scene_patches: list[Patch], codebook: Codebook, regressor: BaseRegressor,
               params: VoteParams, exact: bool = None) -> list[VoteInstance]:
    """
    Encodes the scene patches and casts their votes.
    :param scene_patches: patches sampled from the scene
    :param codebook: codebook to search
    :param regressor: regressor the codebook was built with
    :param params: vote parameters
    :param exact: retrieval mode override
    :return: list of VoteInstance, at most len(scene_patches) * k
    :raises DimensionMismatchError: if regressor and codebook dimensions differ
    """
    if regressor.dimension != codebook.dimension:
        raise DimensionMismatchError(f"Regressor dimension {regressor.dimension} does not match "
                                     f"the codebook dimension {codebook.dimension}", "cast_votes")
    return cast_from_descriptors(scene_patches, encode_scene(scene_patches, regressor), codebook,
                                 params, exact)
