"""
Parameters and results of hypothesis refinement and verification.
"""
from dataclasses import dataclass

import numpy as np

from src.geometry.pose import Pose
from src.utils.exceptions import ParameterError
from src.voting.votes import Hypothesis


@dataclass(frozen=True)
class VerifyParams:
    """
    :param icp_max_iters: iteration limit of the projective ICP
    :param icp_point_plane: point-to-plane objective, point-to-point if False
    :param assoc_max_dist: largest distance of an associated point pair in meters
    :param depth_inlier_tol: largest depth difference of an inlier pixel in meters
    :param min_depth_inlier_frac: required fraction of depth inliers
    :param normal_max_angle: largest accepted mean normal deviation in degrees
    :param min_valid_frac: required fraction of associated pixels before refinement
    :param icp_eps_trans: translational convergence threshold in meters
    :param icp_eps_rot: rotational convergence threshold in degrees
    :param max_step_halvings: step halvings tried before an increasing step ends the refinement
    """
    icp_max_iters: int = 15
    icp_point_plane: bool = True
    assoc_max_dist: float = 0.02
    depth_inlier_tol: float = 0.02
    min_depth_inlier_frac: float = 0.65
    normal_max_angle: float = 30.0
    min_valid_frac: float = 0.2
    icp_eps_trans: float = 1e-5
    icp_eps_rot: float = 0.01
    max_step_halvings: int = 5

    def __post_init__(self):
        if self.icp_max_iters < 0 or self.max_step_halvings < 0:
            raise ParameterError(f"Iteration counts have to be >= 0: {self}", "VerifyParams")
        for name in ("assoc_max_dist", "depth_inlier_tol", "normal_max_angle", "icp_eps_trans",
                     "icp_eps_rot"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} has to be positive", "VerifyParams")
        for name in ("min_depth_inlier_frac", "min_valid_frac"):
            if not 0 < getattr(self, name) <= 1:
                raise ParameterError(f"{name} has to be in (0, 1]", "VerifyParams")


@dataclass(frozen=True, eq=False)
class VerifiedDetection:
    """
    A hypothesis after refinement and verification.
    :param object_id: detected object
    :param pose: refined object -> camera pose
    :param centroid: object centroid in the camera frame at the refined pose
    :param depth_inlier_frac: fraction of rendered pixels whose scene depth agrees
    :param mean_normal_angle: mean angle between rendered and scene normals over the inliers,
        nan without inliers
    :param accepted: both checks passed and the refinement did not fail
    :param hypothesis: the refined hypothesis, None for a pose verified on its own
    :param refinement_failed: too few associations at the start of the refinement
    """
    object_id: int
    pose: Pose
    centroid: np.ndarray
    depth_inlier_frac: float
    mean_normal_angle: float
    accepted: bool
    hypothesis: Hypothesis = None
    refinement_failed: bool = False

    @property
    def score(self) -> float:
        """vote score of the hypothesis, 0 without one"""
        return self.hypothesis.score if self.hypothesis is not None else 0.0
