"""
Viewpoint sampling on a subdivided icosahedron. Every camera sits on a sphere around the object
origin and looks at it, each vertex is combined with a number of in-plane rotations about the
optical axis.
"""
from dataclasses import dataclass

import numpy as np
import trimesh

from src.geometry.pose import Pose, quat_from_axis_angle, quat_multiply
from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)


@dataclass(frozen=True, eq=False)
class ViewpointSet:
    """
    Camera poses looking at the origin.
    :param radius: distance of every camera to the origin in meters
    :param inplane_steps: number of in-plane rotations per vertex
    :param vertices: (V, 3) camera positions in the object frame
    :param poses: object -> camera transforms, vertex major then in-plane rotation
    """
    radius: float
    inplane_steps: int
    vertices: np.ndarray
    poses: tuple

    def __len__(self):
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)

    def __getitem__(self, item) -> Pose:
        return self.poses[item]

    @property
    def camera_positions(self) -> np.ndarray:
        """(N, 3) camera centers in the object frame for every view"""
        return np.array([pose.inverse().translation for pose in self.poses])


def look_at_pose(position: np.ndarray) -> Pose:
    """
    Object -> camera transform of a camera at position looking at the origin. The camera frame
    has x to the right, y down and z along the optical axis.
    :param position: camera center in the object frame
    :return: pose mapping object coordinates to camera coordinates
    """
    position = np.asarray(position, dtype=np.float64)
    z_axis = -position / np.linalg.norm(position)
    up = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(up, z_axis)) > 0.99:
        up = np.array([0.0, 1.0, 0.0])
    x_axis = np.cross(z_axis, up)
    x_axis /= np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)

    rotation = np.stack([x_axis, y_axis, z_axis])  # rows: camera axes in object coordinates
    return Pose.from_rotation_matrix(rotation, -rotation @ position)


def rotate_inplane(pose: Pose, angle_deg: float) -> Pose:
    """
    Rotates the camera about its optical axis.
    :param pose: object -> camera pose
    :param angle_deg: in-plane angle in degrees
    :return: rotated object -> camera pose
    """
    roll = Pose(quat_from_axis_angle([0.0, 0.0, 1.0], angle_deg))
    return Pose(quat_multiply(roll.rotation, pose.rotation), roll.apply(pose.translation))


def sample_icosahedron_views(subdivisions: int = 2, radius: float = 0.6,
                             inplane_steps: int = 12) -> ViewpointSet:
    """
    Samples camera poses on a subdivided icosahedron (midpoint subdivision projected to the
    sphere), 10 * 4^subdivisions + 2 vertices, each with inplane_steps rotations of
    360 / inplane_steps degrees.
    :param subdivisions: number of subdivision steps
    :param radius: camera distance to the origin in meters
    :param inplane_steps: in-plane rotations per vertex
    :return: ViewpointSet
    """
    if subdivisions < 0:
        raise ParameterError("subdivisions has to be >= 0", "sample_icosahedron_views")
    if radius <= 0:
        raise ParameterError("radius has to be positive", "sample_icosahedron_views")
    if inplane_steps < 1:
        raise ParameterError("inplane_steps has to be >= 1", "sample_icosahedron_views")

    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=1.0)
    vertices = np.asarray(sphere.vertices, dtype=np.float64)
    vertices = vertices / np.linalg.norm(vertices, axis=1, keepdims=True) * radius

    poses = []
    for vertex in vertices:
        base = look_at_pose(vertex)
        for step in range(inplane_steps):
            poses.append(rotate_inplane(base, 360.0 * step / inplane_steps))

    logger.debug(f"Sampled {len(vertices)} vertices x {inplane_steps} in-plane rotations at "
                 f"radius {radius}")
    return ViewpointSet(radius=radius, inplane_steps=inplane_steps, vertices=vertices,
                        poses=tuple(poses))


@dataclass(frozen=True)
class RenderConfig:
    """
    View sampling of the codebook renders.
    :param subdivisions: icosahedron subdivision steps
    :param radius: camera distance in meters
    :param inplane_steps: in-plane rotations per vertex
    """
    subdivisions: int = 2
    radius: float = 0.6
    inplane_steps: int = 12

    def __post_init__(self):
        if self.subdivisions < 0 or self.radius <= 0 or self.inplane_steps < 1:
            raise ParameterError(f"Invalid view sampling {self}", "RenderConfig")

    def views(self) -> ViewpointSet:
        """the configured viewpoint set"""
        return sample_icosahedron_views(self.subdivisions, self.radius, self.inplane_steps)
