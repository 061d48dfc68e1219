"""
Codebooks: descriptors of synthetic patches together with their local 6D votes and patch
foreground masks. Entries are stored column wise, the CodebookEntry view is created on access.
"""
from dataclasses import dataclass

import numpy as np

from src.codebook.index import DescriptorIndex, IndexParams
from src.descriptors.base_regressor import BaseRegressor
from src.geometry.camera import CameraIntrinsics
from src.geometry.viewpoints import ViewpointSet
from src.patches.sampling import PatchConfig, sample_view_patches, stack_patches
from src.rendering.mesh import Mesh
from src.rendering.rasterizer import render
from src.utils.exceptions import CodebookBuildError, DimensionMismatchError, ParameterError
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_SIZE

logger = get_default_logger(__name__)


@dataclass(frozen=True, eq=False)
class CodebookEntry:
    """
    One codebook entry.
    :param index: position in the codebook
    :param descriptor: (F,) descriptor
    :param offset: (3,) patch center -> object centroid in the view camera frame, meters
    :param orientation: (4,) object -> view camera rotation, unit quaternion with w >= 0
    :param mask: (32, 32) foreground mask of the patch
    :param object_id: object the patch was rendered from
    """
    index: int
    descriptor: np.ndarray
    offset: np.ndarray
    orientation: np.ndarray
    mask: np.ndarray
    object_id: int


class Codebook:
    """
    Immutable set of codebook entries with a k-NN index over the descriptors.
    :param descriptors: (N, F) descriptors
    :param offsets: (N, 3) vote offsets
    :param orientations: (N, 4) vote orientations, canonicalized on construction
    :param masks: (N, 32, 32) patch foreground masks
    :param object_ids: (N,) object ids
    :param index_params: retrieval parameters
    """

    def __init__(self, descriptors: np.ndarray, offsets: np.ndarray, orientations: np.ndarray,
                 masks: np.ndarray, object_ids: np.ndarray, index_params: IndexParams = None):
        descriptors = np.asarray(descriptors, dtype=np.float32)
        if descriptors.ndim != 2 or descriptors.shape[1] < 1:
            raise ParameterError(f"Descriptors have to be (N, F), got {descriptors.shape}",
                                 "Codebook")
        count = len(descriptors)
        self.descriptors = descriptors
        self.offsets = np.asarray(offsets, dtype=np.float32).reshape(count, 3)
        orientations = np.asarray(orientations, dtype=np.float32).reshape(count, 4)
        if count and np.max(np.abs(np.linalg.norm(orientations, axis=1) - 1.0)) > 1e-4:
            raise ParameterError("Vote orientations have to be unit quaternions", "Codebook")
        # sign flip only, so that stored values survive save and load unchanged
        self.orientations = np.where(orientations[:, :1] < 0, -orientations, orientations)
        self.masks = np.asarray(masks, dtype=bool).reshape(count, PATCH_SIZE, PATCH_SIZE)
        self.object_ids = np.asarray(object_ids, dtype=np.uint32).reshape(count)
        self.index_params = index_params or IndexParams()
        self.index = DescriptorIndex(self.descriptors, self.index_params)

    def __len__(self):
        return len(self.descriptors)

    @property
    def dimension(self) -> int:
        """descriptor dimension F"""
        return self.descriptors.shape[1]

    @property
    def objects(self) -> list[int]:
        """sorted ids of the objects in the codebook"""
        return sorted(int(i) for i in np.unique(self.object_ids))

    def entry(self, index: int) -> CodebookEntry:
        """entry at a position"""
        return CodebookEntry(index=int(index), descriptor=self.descriptors[index],
                             offset=self.offsets[index], orientation=self.orientations[index],
                             mask=self.masks[index], object_id=int(self.object_ids[index]))

    def select(self, rows: np.ndarray) -> "Codebook":
        """codebook of a subset of the entries, in the given order"""
        return Codebook(self.descriptors[rows], self.offsets[rows], self.orientations[rows],
                        self.masks[rows], self.object_ids[rows], self.index_params)

    def restrict(self, object_ids) -> "Codebook":
        """codebook with the entries of the given objects only"""
        return self.select(np.flatnonzero(np.isin(self.object_ids, list(object_ids))))

    def with_index_params(self, params: IndexParams) -> "Codebook":
        """same entries with other retrieval parameters"""
        return Codebook(self.descriptors, self.offsets, self.orientations, self.masks,
                        self.object_ids, params)

    def query(self, descriptors: np.ndarray, k: int,
              exact: bool = None) -> tuple[np.ndarray, np.ndarray]:
        """
        Batched k-NN, see DescriptorIndex.query.
        :return: (Q, min(k, N)) entry indices and distances
        """
        return self.index.query(descriptors, k, exact)

    def __repr__(self):
        return f"Codebook(F={self.dimension}, entries={len(self)}, objects={self.objects})"


def knn(codebook: Codebook, query: np.ndarray, k: int,
        mode: str = "exact") -> list[tuple[CodebookEntry, float]]:
    """
    k nearest neighbors of a single descriptor.
    :param codebook: codebook to search
    :param query: (F,) descriptor
    :param k: number of neighbors
    :param mode: "exact" or "approx"
    :return: list of (entry, distance), ascending distance, empty for an empty codebook
    """
    if mode not in ("exact", "approx"):
        raise ParameterError(f"Unknown retrieval mode {mode}", "knn")
    if k < 1:
        raise ParameterError(f"k has to be >= 1, got {k}", "knn")
    if len(codebook) == 0:
        return []
    indices, distances = codebook.query(np.asarray(query)[None], k, exact=mode == "exact")
    return [(codebook.entry(i), float(d)) for i, d in zip(indices[0], distances[0]) if i >= 0]


def build_codebook(mesh: Mesh, views: ViewpointSet, regressor: BaseRegressor, cfg: PatchConfig,
                   intrinsics: CameraIntrinsics = None, object_id: int = 1,
                   index_params: IndexParams = None) -> Codebook:
    """
    Renders the mesh from every view, samples foreground patches and stores their descriptors
    with the local votes of the known render pose.
    :param mesh: object mesh
    :param views: viewpoint set
    :param regressor: trained regressor
    :param cfg: patch sampling configuration
    :param intrinsics: render camera, default intrinsics if None
    :param object_id: id stored with every entry
    :param index_params: retrieval parameters
    :return: Codebook, entries in view order then row-major patch order
    :raises CodebookBuildError: for an empty view set or if no patch could be extracted
    """
    if len(views) == 0:
        raise CodebookBuildError(f"No views to build the codebook of {mesh.name}",
                                 "build_codebook")
    intrinsics = intrinsics or CameraIntrinsics()

    descriptors, offsets, orientations, masks = [], [], [], []
    for pose in views:
        samples = sample_view_patches(render(mesh, pose, intrinsics), cfg)
        if not samples:
            continue
        patches = [patch for patch, _ in samples]
        centroid = pose.apply(mesh.centroid)
        descriptors.append(regressor.encode(stack_patches(patches)))
        offsets.append(centroid - np.stack([patch.center_point for patch in patches]))
        orientations.append(np.repeat(pose.rotation[None], len(patches), axis=0))
        masks.append(np.stack([mask for _, mask in samples]))

    if not descriptors:
        raise CodebookBuildError(f"No patches could be extracted from {len(views)} views of "
                                 f"{mesh.name}", "build_codebook")
    descriptors = np.concatenate(descriptors)
    codebook = Codebook(descriptors, np.concatenate(offsets), np.concatenate(orientations),
                        np.concatenate(masks), np.full(len(descriptors), object_id), index_params)
    logger.info(f"Built codebook of {mesh.name} (id {object_id}): {len(codebook)} entries from "
                f"{len(views)} views")
    return codebook


def merge(codebooks: list[Codebook]) -> Codebook:
    """
    Joint codebook of several codebooks, entries in input order, index rebuilt.
    :raises DimensionMismatchError: if the descriptor dimensions differ
    """
    if not codebooks:
        raise CodebookBuildError("Nothing to merge", "merge")
    dimensions = {codebook.dimension for codebook in codebooks}
    if len(dimensions) > 1:
        raise DimensionMismatchError(f"Can not merge codebooks of dimensions {sorted(dimensions)}",
                                     "merge")
    merged = Codebook(np.concatenate([c.descriptors for c in codebooks]),
                      np.concatenate([c.offsets for c in codebooks]),
                      np.concatenate([c.orientations for c in codebooks]),
                      np.concatenate([c.masks for c in codebooks]),
                      np.concatenate([c.object_ids for c in codebooks]),
                      codebooks[0].index_params)
    logger.info(f"Merged {len(codebooks)} codebooks into {merged!r}")
    return merged
