"""
Surface normals of depth images by central differences.
"""
import numpy as np

from src.geometry.camera import CameraIntrinsics, backproject_depth

# neighbors further away along the ray are treated as a depth discontinuity
MAX_DEPTH_JUMP = 0.02


def depth_normals(depth: np.ndarray, intrinsics: CameraIntrinsics,
                  max_jump: float = MAX_DEPTH_JUMP) -> tuple[np.ndarray, np.ndarray]:
    """
    Normals from the cross product of the horizontal and vertical central differences of the
    backprojected depth, oriented towards the camera. A normal is valid if the pixel and its four
    neighbors have depth and no neighbor differs by more than max_jump.
    :param depth: (H, W) depth in meters, 0 is invalid
    :param intrinsics: camera intrinsics
    :param max_jump: largest accepted depth difference to a neighbor in meters
    :return: (H, W, 3) unit normals (zero where invalid) and the (H, W) validity mask
    """
    depth = np.asarray(depth, dtype=np.float64)
    points = backproject_depth(depth, intrinsics)
    normals = np.zeros_like(points)
    valid = np.zeros(depth.shape, dtype=bool)
    if depth.shape[0] < 3 or depth.shape[1] < 3:
        return normals, valid

    center = depth[1:-1, 1:-1]
    neighbors = (depth[1:-1, 2:], depth[1:-1, :-2], depth[2:, 1:-1], depth[:-2, 1:-1])
    inner = center > 0
    for neighbor in neighbors:
        inner &= (neighbor > 0) & (np.abs(neighbor - center) <= max_jump)

    horizontal = points[1:-1, 2:] - points[1:-1, :-2]
    vertical = points[2:, 1:-1] - points[:-2, 1:-1]
    cross = np.cross(horizontal, vertical)
    length = np.linalg.norm(cross, axis=-1)
    inner &= length > 0

    unit = np.divide(cross, length[..., None], out=np.zeros_like(cross),
                     where=length[..., None] > 0)
    facing_away = np.einsum("ijk,ijk->ij", unit, points[1:-1, 1:-1]) > 0
    unit[facing_away] *= -1.0
    unit[~inner] = 0.0

    normals[1:-1, 1:-1] = unit
    valid[1:-1, 1:-1] = inner
    return normals, valid
