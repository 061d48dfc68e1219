"""
Pinhole camera model: intrinsics, projection and backprojection of pixels and depth images.
"""
from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import InvalidDepthError, ParameterError


@dataclass(frozen=True)
class CameraIntrinsics:
    """
    Intrinsics of a pinhole camera without distortion.
    :param fx: focal length in x (pixels)
    :param fy: focal length in y (pixels)
    :param cx: principal point x (pixels)
    :param cy: principal point y (pixels)
    :param width: image width in pixels
    :param height: image height in pixels
    """
    fx: float = 575.0
    fy: float = 575.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ParameterError(f"Focal lengths have to be positive, got ({self.fx}, {self.fy})",
                                 "CameraIntrinsics")
        if self.width <= 0 or self.height <= 0:
            raise ParameterError("Image size has to be positive", "CameraIntrinsics")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ParameterError(f"Principal point ({self.cx}, {self.cy}) outside of the "
                                 f"{self.width}x{self.height} image", "CameraIntrinsics")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 camera matrix"""
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def shape(self) -> tuple[int, int]:
        """image shape as (height, width)"""
        return self.height, self.width


def backproject(u: float, v: float, z: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """
    Lifts a pixel with metric depth to a 3D point in the camera frame.
    :param u: pixel column
    :param v: pixel row
    :param z: depth in meters
    :param intrinsics: camera intrinsics
    :return: 3-vector in meters
    :raises InvalidDepthError: if z is not positive
    """
    if not z > 0:
        raise InvalidDepthError(f"Can not backproject pixel ({u}, {v}) with depth {z}",
                                "backproject")
    return np.array([(u - intrinsics.cx) * z / intrinsics.fx,
                     (v - intrinsics.cy) * z / intrinsics.fy,
                     float(z)])


def project(points: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """
    Projects camera frame points to pixel coordinates.
    :param points: (3,) or (N, 3) points with positive z
    :param intrinsics: camera intrinsics
    :return: (2,) or (N, 2) pixel coordinates (u, v)
    """
    points = np.asarray(points, dtype=np.float64)
    z = points[..., 2]
    u = points[..., 0] * intrinsics.fx / z + intrinsics.cx
    v = points[..., 1] * intrinsics.fy / z + intrinsics.cy
    return np.stack([u, v], axis=-1)


def backproject_depth(depth: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """
    Lifts a whole depth image to an organized point image. Invalid pixels (depth 0) yield the
    zero point.
    :param depth: (H, W) depth in meters
    :param intrinsics: camera intrinsics
    :return: (H, W, 3) points in the camera frame
    """
    height, width = depth.shape
    u, v = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    x = (u - intrinsics.cx) * depth / intrinsics.fx
    y = (v - intrinsics.cy) * depth / intrinsics.fy
    return np.stack([x, y, depth.astype(np.float64)], axis=-1)
