"""
Vote and hypothesis types shared by vote casting, vote filtering and verification.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.geometry.pose import Pose, quat_to_scipy
from src.utils.exceptions import ParameterError


@dataclass(frozen=True)
class VoteParams:
    """
    Parameters of vote casting and vote filtering.
    :param k: number of nearest neighbors per scene patch
    :param tau: feature distance threshold, votes need d < tau; inf disables the threshold
    :param cell_px: side length of the accumulation cells in pixels
    :param min_cell_votes: cells with fewer votes are suppressed, defaults to k
    :param ms_trans_radius: flat kernel radius of the translational mean shift in meters
    :param ms_rot_radius: flat kernel radius of the quaternion mean shift in degrees
    :param ms_max_iters: iteration limit of each mean shift
    :param ms_eps_trans: translational convergence threshold in meters
    :param ms_eps_rot: rotational convergence threshold in degrees
    """
    k: int = 3
    tau: float = 10.0
    cell_px: int = 5
    min_cell_votes: int = None
    ms_trans_radius: float = 0.025
    ms_rot_radius: float = 7.0
    ms_max_iters: int = 50
    ms_eps_trans: float = 1e-4
    ms_eps_rot: float = 0.05

    def __post_init__(self):
        if self.min_cell_votes is None:
            object.__setattr__(self, "min_cell_votes", self.k)
        if self.k < 1 or self.cell_px < 1 or self.min_cell_votes < 1 or self.ms_max_iters < 1:
            raise ParameterError(f"Counts have to be positive: {self}", "VoteParams")
        if math.isnan(self.tau) or self.tau < 0:
            raise ParameterError(f"tau has to be >= 0, got {self.tau}", "VoteParams")
        for name in ("ms_trans_radius", "ms_rot_radius", "ms_eps_trans", "ms_eps_rot"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} has to be positive", "VoteParams")

    def with_k(self, k: int) -> "VoteParams":
        """same parameters with another k, a cell threshold equal to the old k follows k"""
        min_cell_votes = k if self.min_cell_votes == self.k else self.min_cell_votes
        return replace(self, k=k, min_cell_votes=min_cell_votes)


@dataclass(frozen=True, eq=False)
class VoteInstance:
    """
    A 6D vote of one scene patch for one codebook neighbor.
    :param centroid: voted object centroid in the camera frame, meters
    :param orientation: voted object -> camera rotation, unit quaternion (w, x, y, z)
    :param weight: e^-d for the feature distance d of the match
    :param object_id: object of the matched codebook entry
    :param source_pixel: (u, v) center pixel of the scene patch
    :param footprint: (width, height) of the scene patch in pixels
    :param mask: (32, 32) foreground mask of the matched codebook patch
    :param entry: index of the matched codebook entry
    """
    centroid: np.ndarray
    orientation: np.ndarray
    weight: float
    object_id: int
    source_pixel: tuple[int, int] = (0, 0)
    footprint: tuple[float, float] = (0.0, 0.0)
    mask: np.ndarray = None
    entry: int = -1


def object_pose(centroid: np.ndarray, orientation: np.ndarray,
                object_centroid: np.ndarray = None) -> Pose:
    """
    Object pose from a voted centroid and orientation.
    :param centroid: centroid in the camera frame
    :param orientation: object -> camera rotation
    :param object_centroid: centroid in the object frame, the origin if None
    """
    translation = np.asarray(centroid, dtype=np.float64)
    if object_centroid is not None:
        translation = translation - quat_to_scipy(orientation).apply(object_centroid)
    return Pose(orientation, translation)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """
    Pose hypothesis of one object.
    :param object_id: detected object
    :param pose: object -> camera pose
    :param score: accumulated weight of the supporting votes
    :param support: votes that contributed to the hypothesis
    """
    object_id: int
    pose: Pose
    score: float
    support: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.score > 0:
            raise ParameterError(f"Hypothesis score has to be positive, got {self.score}",
                                 "Hypothesis")

    def with_pose(self, pose: Pose) -> "Hypothesis":
        """same hypothesis at another pose"""
        return Hypothesis(self.object_id, pose, self.score, self.support)


class VoteArrays:
    """
    Column view of a list of votes used by the filter.
    :param votes: list of VoteInstance
    """

    def __init__(self, votes: list[VoteInstance]):
        self.votes = list(votes)
        count = len(self.votes)
        self.centroids = np.array([v.centroid for v in self.votes], dtype=np.float64).reshape(
            count, 3)
        self.orientations = np.array([v.orientation for v in self.votes],
                                     dtype=np.float64).reshape(count, 4)
        self.weights = np.array([v.weight for v in self.votes], dtype=np.float64)
        self.object_ids = np.array([v.object_id for v in self.votes], dtype=np.int64)

    def __len__(self):
        return len(self.votes)
