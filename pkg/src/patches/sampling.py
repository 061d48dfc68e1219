"""
Scale invariant RGB-D patch extraction. The pixel size of a patch follows from the depth at its
center so that it always covers the same metric neighborhood; color is mapped to [-1, 1] and the
depth is de-meaned with the center depth, clamped to the metric size and normalized.

Patches are resampled with one cv2.remap call per chunk of patches: the sampling grids of all
patches are stacked into a single map.
"""
from dataclasses import dataclass

import cv2
import numpy as np

from src.geometry.camera import CameraIntrinsics, backproject
from src.geometry.frame import RgbdFrame
from src.rendering.rasterizer import RenderedView
from src.utils.exceptions import InvalidDepthError, ParameterError
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_CHANNELS, PATCH_SIZE

logger = get_default_logger(__name__)

# OpenCV limits remap outputs to less than 2^15 rows
_CHUNK = 1000


@dataclass(frozen=True)
class PatchConfig:
    """
    Patch sampling parameters.
    :param m: metric half extent used for scaling and depth clamping in meters
    :param out_size: side length of the resampled patch, fixed to 32
    :param grid_step: distance of the sampling grid points in pixels
    :param fg_min_fraction: minimal foreground fraction of codebook patches
    """
    m: float = 0.05
    out_size: int = PATCH_SIZE
    grid_step: int = 8
    fg_min_fraction: float = 0.5

    def __post_init__(self):
        if self.m <= 0:
            raise ParameterError(f"Patch size m has to be positive, got {self.m}", "PatchConfig")
        if self.out_size != PATCH_SIZE:
            raise ParameterError(f"Patches are resampled to {PATCH_SIZE} pixels", "PatchConfig")
        if self.grid_step < 1:
            raise ParameterError("grid_step has to be >= 1", "PatchConfig")
        if not 0.0 <= self.fg_min_fraction <= 1.0:
            raise ParameterError("fg_min_fraction has to be in [0, 1]", "PatchConfig")


@dataclass(frozen=True, eq=False)
class Patch:
    """
    Normalized RGB-D patch.
    :param data: (4, 32, 32) float32 values in [-1, 1], channels R, G, B, D
    :param center_point: backprojected center pixel in meters (camera frame)
    :param source_pixel: (u, v) center pixel in the source image
    :param footprint: (width, height) of the sampled window in source pixels
    :param valid: False if the center depth was missing
    """
    data: np.ndarray
    center_point: np.ndarray
    source_pixel: tuple[int, int]
    footprint: tuple[float, float]
    valid: bool = True


def patch_pixel_size(z: float, intrinsics: CameraIntrinsics, m: float) -> float:
    """
    Side length in pixels of a window covering the metric size m at depth z, m / z * fx.
    :raises InvalidDepthError: if z is not positive
    """
    if not z > 0:
        raise InvalidDepthError(f"Patch size undefined for depth {z}", "patch_pixel_size")
    return m / z * intrinsics.fx


def _sampling_maps(pixels: np.ndarray, depths: np.ndarray, intrinsics: CameraIntrinsics,
                   m: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Stacked remap coordinates of several patches. Sample i of a patch lies at
    u + (i - 16) * size / 32, so sample 16 hits the center pixel exactly.
    :return: map_x, map_y of shape (N * 32, 32) and the (N, 2) footprints
    """
    sizes = np.stack([m / depths * intrinsics.fx, m / depths * intrinsics.fy], axis=-1)
    offsets = (np.arange(PATCH_SIZE, dtype=np.float64) - PATCH_SIZE // 2) / PATCH_SIZE
    map_x = pixels[:, 0, None, None] + offsets[None, None, :] * sizes[:, 0, None, None]
    map_y = pixels[:, 1, None, None] + offsets[None, :, None] * sizes[:, 1, None, None]
    map_x = np.broadcast_to(map_x, (len(pixels), PATCH_SIZE, PATCH_SIZE))
    map_y = np.broadcast_to(map_y, (len(pixels), PATCH_SIZE, PATCH_SIZE))
    shape = (len(pixels) * PATCH_SIZE, PATCH_SIZE)
    return (map_x.reshape(shape).astype(np.float32), map_y.reshape(shape).astype(np.float32),
            sizes)


def _remap(image: np.ndarray, map_x: np.ndarray, map_y: np.ndarray, interpolation: int):
    return cv2.remap(image, map_x, map_y, interpolation, borderMode=cv2.BORDER_REPLICATE)


def _extract_chunk(frame: RgbdFrame, pixels: np.ndarray, m: float,
                   mask: np.ndarray = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Extracts patches at pixels whose center depth is valid.
    :return: (N, 4, 32, 32) data, (N, 2) footprints and the (N, 32, 32) nearest resampled mask
        (None if no mask is given)
    """
    depths = frame.depth[pixels[:, 1], pixels[:, 0]].astype(np.float64)
    map_x, map_y, sizes = _sampling_maps(pixels.astype(np.float64), depths, frame.intrinsics, m)
    count = len(pixels)
    shape = (count, PATCH_SIZE, PATCH_SIZE)

    color = _remap(frame.color.astype(np.float32), map_x, map_y, cv2.INTER_LINEAR)
    color = color.reshape(*shape, 3).transpose(0, 3, 1, 2) / 127.5 - 1.0

    valid = frame.valid.astype(np.float64)
    weight = _remap(valid, map_x, map_y, cv2.INTER_LINEAR).reshape(shape)
    depth_sum = _remap(frame.depth.astype(np.float64) * valid, map_x, map_y,
                       cv2.INTER_LINEAR).reshape(shape)
    holes = _remap(valid, map_x, map_y, cv2.INTER_NEAREST).reshape(shape) == 0

    depth = np.divide(depth_sum, weight, out=np.zeros(shape), where=weight > 0)
    depth = np.clip(depth - depths[:, None, None], -m, m) / m
    depth[holes | (weight <= 0)] = 0.0

    data = np.concatenate([color, depth[:, None]], axis=1)
    data = np.clip(data, -1.0, 1.0).astype(np.float32)

    resampled_mask = None
    if mask is not None:
        resampled_mask = _remap(mask.astype(np.uint8), map_x, map_y,
                                cv2.INTER_NEAREST).reshape(shape) > 0
    return data, sizes, resampled_mask


def _to_patches(frame: RgbdFrame, pixels: np.ndarray, data: np.ndarray,
                sizes: np.ndarray) -> list[Patch]:
    patches = []
    for pixel, values, size in zip(pixels, data, sizes):
        u, v = int(pixel[0]), int(pixel[1])
        center = backproject(u, v, float(frame.depth[v, u]), frame.intrinsics)
        patches.append(Patch(values, center, (u, v), (float(size[0]), float(size[1]))))
    return patches


def extract_patch(frame: RgbdFrame, u: int, v: int, cfg: PatchConfig) -> Patch | None:
    """
    Extracts the patch centered at pixel (u, v).
    :param frame: input frame
    :param u: pixel column
    :param v: pixel row
    :param cfg: patch configuration
    :return: Patch or None if the center depth is missing
    """
    height, width = frame.shape
    if not (0 <= u < width and 0 <= v < height):
        raise ParameterError(f"Pixel ({u}, {v}) outside of the {width}x{height} frame",
                             "extract_patch")
    if not frame.depth[v, u] > 0:
        logger.debug(f"Skipped patch at ({u}, {v}) due to missing depth")
        return None

    pixels = np.array([[u, v]], dtype=np.int64)
    data, sizes, _ = _extract_chunk(frame, pixels, cfg.m)
    return _to_patches(frame, pixels, data, sizes)[0]


def grid_pixels(frame: RgbdFrame, step: int) -> np.ndarray:
    """
    Row major grid points with valid depth, starting half a step from the image border.
    :return: (N, 2) int array of (u, v)
    """
    height, width = frame.shape
    offset = step // 2
    vs, us = np.meshgrid(np.arange(offset, height, step), np.arange(offset, width, step),
                         indexing="ij")
    pixels = np.stack([us.ravel(), vs.ravel()], axis=-1)
    valid = frame.depth[pixels[:, 1], pixels[:, 0]] > 0
    return pixels[valid]


def sample_scene(frame: RgbdFrame, cfg: PatchConfig) -> list[Patch]:
    """
    Samples patches on a regular grid of the frame, skipping points with missing depth.
    :param frame: input frame
    :param cfg: patch configuration
    :return: patches in row major order
    """
    pixels = grid_pixels(frame, cfg.grid_step)
    patches = []
    for start in range(0, len(pixels), _CHUNK):
        chunk = pixels[start:start + _CHUNK]
        data, sizes, _ = _extract_chunk(frame, chunk, cfg.m)
        patches.extend(_to_patches(frame, chunk, data, sizes))
    logger.debug(f"Sampled {len(patches)} scene patches with step {cfg.grid_step}")
    return patches


def sample_view_patches(view: RenderedView, cfg: PatchConfig) -> list[tuple[Patch, np.ndarray]]:
    """
    Samples the patches of a rendered view whose resampled foreground fraction reaches
    cfg.fg_min_fraction, together with their 32x32 foreground masks.
    :param view: RenderedView
    :param cfg: patch configuration
    :return: list of (Patch, (32, 32) bool mask) in row major order
    """
    frame = view.to_frame()
    pixels = grid_pixels(frame, cfg.grid_step)
    samples = []
    for start in range(0, len(pixels), _CHUNK):
        chunk = pixels[start:start + _CHUNK]
        data, sizes, masks = _extract_chunk(frame, chunk, cfg.m, view.mask)
        keep = masks.mean(axis=(1, 2)) >= cfg.fg_min_fraction
        patches = _to_patches(frame, chunk[keep], data[keep], sizes[keep])
        samples.extend(zip(patches, masks[keep]))
    return samples


def stack_patches(patches: list[Patch]) -> np.ndarray:
    """(N, 4, 32, 32) float32 array of the patch data"""
    if not patches:
        return np.zeros((0, PATCH_CHANNELS, PATCH_SIZE, PATCH_SIZE), dtype=np.float32)
    return np.stack([patch.data for patch in patches]).astype(np.float32)
