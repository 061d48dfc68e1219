"""
Pose error measures: the average distance of the model points (ADD) and its closest point variant
for symmetric objects (ADI).
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from src.geometry.pose import Pose
from src.rendering.mesh import Mesh
from src.rendering.procedural import SYMMETRIC_OBJECTS
from src.utils.exceptions import ParameterError


@dataclass(frozen=True)
class MetricConfig:
    """
    :param k_m: a detection is correct if its pose error is below k_m times the object diameter,
        0.1 for single instance and 0.15 for multi instance benchmarks
    :param symmetric: ids of the objects scored with the closest point error, if None objects are
        looked up by mesh name
    """
    k_m: float = 0.1
    symmetric: frozenset[int] = None

    def __post_init__(self):
        if not self.k_m > 0:
            raise ParameterError(f"k_m has to be positive, got {self.k_m}", "MetricConfig")
        if self.symmetric is not None:
            object.__setattr__(self, "symmetric", frozenset(int(i) for i in self.symmetric))

    def is_symmetric(self, object_id: int, mesh: Mesh) -> bool:
        """whether the object is scored with the closest point error"""
        if self.symmetric is None:
            return mesh.name in SYMMETRIC_OBJECTS
        return object_id in self.symmetric

    def threshold(self, mesh: Mesh) -> float:
        """largest pose error of a correct detection of the mesh in meters"""
        return self.k_m * mesh.diameter


def pose_error_add(mesh: Mesh, gt: Pose, est: Pose) -> float:
    """
    Mean distance between the model points transformed by both poses.
    :return: error in meters
    """
    return float(np.mean(np.linalg.norm(gt.apply(mesh.vertices) - est.apply(mesh.vertices),
                                        axis=1)))


def pose_error_adi(mesh: Mesh, gt: Pose, est: Pose) -> float:
    """
    Mean distance of every model point at the ground truth pose to the closest model point at the
    estimated pose. Never larger than the ADD error.
    :return: error in meters
    """
    distances, _ = cKDTree(est.apply(mesh.vertices)).query(gt.apply(mesh.vertices), k=1)
    return float(np.mean(distances))


def pose_error(mesh: Mesh, gt: Pose, est: Pose, symmetric: bool = False) -> float:
    """ADI for symmetric objects, ADD otherwise"""
    if symmetric:
        return pose_error_adi(mesh, gt, est)
    return pose_error_add(mesh, gt, est)
