"""
The registered RGB-D frame which is the input of every detection stage.
"""
from dataclasses import dataclass

import numpy as np

from src.geometry.camera import CameraIntrinsics
from src.utils.exceptions import ParameterError


@dataclass(frozen=True, eq=False)
class RgbdFrame:
    """
    Registered color and metric depth image.
    :param color: (H, W, 3) uint8 RGB image
    :param depth: (H, W) depth in meters, 0 marks invalid pixels
    :param intrinsics: camera intrinsics matching the image size
    """
    color: np.ndarray
    depth: np.ndarray
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        if self.depth.shape != self.intrinsics.shape:
            raise ParameterError(f"Depth image shape {self.depth.shape} does not match the "
                                 f"intrinsics {self.intrinsics.shape}", "RgbdFrame")
        if self.color.shape[:2] != self.depth.shape:
            raise ParameterError("Color and depth image sizes differ", "RgbdFrame")

    @property
    def valid(self) -> np.ndarray:
        """(H, W) validity mask of the depth image"""
        return self.depth > 0

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width)"""
        return self.depth.shape
