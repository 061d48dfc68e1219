"""
Reading and writing of RGB-D data sets on disk. A data set directory contains

    intrinsics.txt          key = value lines fx, fy, cx, cy, width, height
    color/<frame>.png       8 bit RGB
    depth/<frame>.png       16 bit depth in millimeters, 0 is invalid
    gt/<frame>.txt          one line per instance: object_id qw qx qy qz tx ty tz (meters)
    models/<id>_<name>.ply  object meshes

The formats are documented in docu/formats.md.
"""
import glob
import os

import cv2
import numpy as np

from src.evaluation.matching import GroundTruth
from src.geometry.camera import CameraIntrinsics
from src.geometry.frame import RgbdFrame
from src.geometry.pose import Pose
from src.rendering.mesh import Mesh, load_ply, save_ply
from src.utils.exceptions import DatasetIOError, FormatError, ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

INTRINSICS_FILE = "intrinsics.txt"
_INTRINSICS_KEYS = ("fx", "fy", "cx", "cy", "width", "height")
_MAX_DEPTH_MM = np.iinfo(np.uint16).max


def _read_lines(path: str, component: str) -> list[str]:
    if not os.path.isfile(path):
        raise DatasetIOError(f"File {path} not found", component)
    with open(path, "r", encoding="utf-8") as text_file:
        return text_file.read().splitlines()


def _write_image(path: str, image: np.ndarray):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if not cv2.imwrite(path, image):
        raise DatasetIOError(f"Could not write image {path}", "dataset_io")


def _read_image(path: str, component: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise DatasetIOError(f"Image {path} not found", component)
    image = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise FormatError(f"Could not decode image {path}", offset=0, component=component)
    return image


def save_intrinsics(path: str, intrinsics: CameraIntrinsics):
    """
    Writes the intrinsics as "key = value" lines in the order fx, fy, cx, cy, width, height.
    :param path: intrinsics file, parent directories are created
    :param intrinsics: camera to store
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as text_file:
        for key in _INTRINSICS_KEYS:
            text_file.write(f"{key} = {getattr(intrinsics, key)!r}\n")


def load_intrinsics(path: str) -> CameraIntrinsics:
    """
    Reads an intrinsics file. Empty lines and lines starting with # are skipped.
    :raises FormatError: with the line number as offset for malformed lines, unknown or missing
        keys
    """
    values = {}
    for number, line in enumerate(_read_lines(path, "load_intrinsics"), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = (part.strip() for part in line.partition("="))
        if not separator or key not in _INTRINSICS_KEYS:
            raise FormatError(f"Unexpected line '{line}' in {path}", number, "load_intrinsics")
        try:
            values[key] = int(value) if key in ("width", "height") else float(value)
        except ValueError as ex:
            raise FormatError(f"Invalid value for {key} in {path}", number,
                              "load_intrinsics") from ex
    missing = set(_INTRINSICS_KEYS).difference(values)
    if missing:
        raise FormatError(f"Missing keys {sorted(missing)} in {path}", component="load_intrinsics")
    return CameraIntrinsics(**values)


def save_ground_truth(path: str, gt: GroundTruth):
    """
    Writes one "object_id qw qx qy qz tx ty tz" line per annotation.
    :param path: ground truth file, parent directories are created
    :param gt: annotations of one frame
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as text_file:
        for object_id, pose in gt.annotations:
            numbers = " ".join(repr(float(value)) for value in (*pose.rotation, *pose.translation))
            text_file.write(f"{object_id} {numbers}\n")


def load_ground_truth(path: str, frame: str = None) -> GroundTruth:
    """
    Reads the annotations of a frame.
    :param path: path of the gt file
    :param frame: frame id, the file name without extension if None
    :raises FormatError: with the line number as offset for malformed lines
    """
    annotations = []
    for number, line in enumerate(_read_lines(path, "load_ground_truth"), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 8:
            raise FormatError(f"Expected 8 values, got {len(fields)} in {path}", number,
                              "load_ground_truth")
        try:
            values = np.array([float(v) for v in fields[1:]])
            pose = Pose(values[:4], values[4:])
            annotations.append((int(fields[0]), pose))
        except (ValueError, ParameterError) as ex:
            raise FormatError(f"Invalid annotation in {path}: {ex}", number,
                              "load_ground_truth") from ex
    if frame is None:
        frame = os.path.splitext(os.path.basename(path))[0]
    return GroundTruth(frame, tuple(annotations))


def depth_to_millimeters(depth: np.ndarray) -> np.ndarray:
    """uint16 millimeter image, invalid and out of range depths become 0"""
    millimeters = np.rint(np.nan_to_num(depth, nan=0.0) * 1000.0)
    millimeters[(millimeters <= 0) | (millimeters > _MAX_DEPTH_MM)] = 0
    return millimeters.astype(np.uint16)


def save_frame(root: str, frame_id: str, frame: RgbdFrame):
    """writes color and depth of the frame, the intrinsics are written separately"""
    _write_image(os.path.join(root, "color", f"{frame_id}.png"),
                 cv2.cvtColor(frame.color, cv2.COLOR_RGB2BGR))
    _write_image(os.path.join(root, "depth", f"{frame_id}.png"), depth_to_millimeters(frame.depth))


def load_frame(root: str, frame_id: str, intrinsics: CameraIntrinsics = None) -> RgbdFrame:
    """
    Reads a frame of a data set directory.
    :param root: data set directory
    :param frame_id: frame id
    :param intrinsics: camera of the frame, read from the intrinsics file if None
    :raises DatasetIOError: for missing files
    :raises FormatError: for images of the wrong type or size
    """
    intrinsics = intrinsics or load_intrinsics(os.path.join(root, INTRINSICS_FILE))
    color_path = os.path.join(root, "color", f"{frame_id}.png")
    depth_path = os.path.join(root, "depth", f"{frame_id}.png")
    color = _read_image(color_path, "load_frame")
    depth = _read_image(depth_path, "load_frame")

    if color.ndim != 3 or color.shape[2] != 3 or color.dtype != np.uint8:
        raise FormatError(f"{color_path} is not an 8 bit RGB image", 0, "load_frame")
    if depth.ndim != 2 or depth.dtype != np.uint16:
        raise FormatError(f"{depth_path} is not a 16 bit depth image", 0, "load_frame")
    if color.shape[:2] != intrinsics.shape or depth.shape != intrinsics.shape:
        raise FormatError(f"Images of frame {frame_id} do not match the {intrinsics.width}x"
                          f"{intrinsics.height} camera", 0, "load_frame")
    return RgbdFrame(cv2.cvtColor(color, cv2.COLOR_BGR2RGB),
                     depth.astype(np.float64) / 1000.0, intrinsics)


def list_frames(root: str) -> list[str]:
    """sorted ids of the frames with a color image"""
    if not os.path.isdir(root):
        raise DatasetIOError(f"Data set directory {root} not found", "list_frames")
    paths = glob.glob(os.path.join(root, "color", "*.png"))
    return sorted(os.path.splitext(os.path.basename(path))[0] for path in paths)


def save_meshes(root: str, meshes: dict[int, Mesh]):
    """writes every mesh as models/<id>_<name>.ply below the data set root"""
    for object_id, mesh in meshes.items():
        save_ply(mesh, os.path.join(root, "models", f"{object_id}_{mesh.name}.ply"))


def load_meshes(root: str) -> dict[int, Mesh]:
    """
    Reads the meshes of the models directory.
    :return: object id -> Mesh, named by the part of the file name after the id
    :raises DatasetIOError: if there are no meshes
    """
    meshes = {}
    for path in sorted(glob.glob(os.path.join(root, "models", "*.ply"))):
        stem = os.path.splitext(os.path.basename(path))[0]
        object_id, _, name = stem.partition("_")
        if not object_id.isdigit():
            logger.warning(f"Skipping {path}, file names have to start with the object id")
            continue
        meshes[int(object_id)] = load_ply(path, name or stem)
    if not meshes:
        raise DatasetIOError(f"No meshes in {os.path.join(root, 'models')}", "load_meshes")
    logger.info(f"Loaded {len(meshes)} meshes from {root}")
    return meshes


def save_scene(root: str, frame_id: str, frame: RgbdFrame, gt: GroundTruth):
    """writes frame and annotations, and the intrinsics if the data set has none yet"""
    intrinsics_path = os.path.join(root, INTRINSICS_FILE)
    if not os.path.exists(intrinsics_path):
        save_intrinsics(intrinsics_path, frame.intrinsics)
    save_frame(root, frame_id, frame)
    save_ground_truth(os.path.join(root, "gt", f"{frame_id}.txt"), gt)


def load_scene(root: str, frame_id: str,
               intrinsics: CameraIntrinsics = None) -> tuple[RgbdFrame, GroundTruth]:
    """frame with its annotations, a frame without gt file has no annotations"""
    frame = load_frame(root, frame_id, intrinsics)
    gt_path = os.path.join(root, "gt", f"{frame_id}.txt")
    if not os.path.exists(gt_path):
        return frame, GroundTruth(frame_id)
    return frame, load_ground_truth(gt_path, frame_id)
