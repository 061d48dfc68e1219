"""
Rigid transforms and unit quaternion helpers. Quaternions are stored scalar first (w, x, y, z)
and canonicalized to w >= 0 so that q and -q compare equal.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

_IDENTITY_QUATERNION = np.array([1.0, 0.0, 0.0, 0.0])


def normalize_quaternion(q: np.ndarray) -> np.ndarray:
    """
    Normalizes a quaternion (or an (N, 4) array of quaternions) to unit length.
    :param q: quaternion(s) (w, x, y, z)
    :return: unit quaternion(s)
    """
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def canonicalize_quaternion(q: np.ndarray) -> np.ndarray:
    """
    Normalizes quaternion(s) and flips the sign so that w >= 0.
    :param q: quaternion(s) (w, x, y, z)
    :return: canonical unit quaternion(s)
    """
    q = normalize_quaternion(q)
    sign = np.where(q[..., :1] < 0, -1.0, 1.0)
    return q * sign


def quat_to_scipy(q: np.ndarray) -> Rotation:
    """Converts (w, x, y, z) quaternion(s) to a scipy Rotation."""
    q = np.asarray(q, dtype=np.float64)
    return Rotation.from_quat(np.roll(q, -1, axis=-1))


def scipy_to_quat(rotation: Rotation) -> np.ndarray:
    """Converts a scipy Rotation to canonical (w, x, y, z) quaternion(s)."""
    return canonicalize_quaternion(np.roll(rotation.as_quat(), 1, axis=-1))


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """
    Hamilton product q1 * q2, i.e. the rotation q2 followed by q1.
    :return: canonical unit quaternion
    """
    return scipy_to_quat(quat_to_scipy(q1) * quat_to_scipy(q2))


def quat_geodesic_deg(q1: np.ndarray, q2: np.ndarray) -> float | np.ndarray:
    """
    Angle of the relative rotation between two orientations in degrees, in [0, 180]. Inputs are
    normalized, the absolute value of the dot product accounts for the double cover.
    :param q1: quaternion(s) (w, x, y, z)
    :param q2: quaternion(s) (w, x, y, z)
    :return: geodesic distance in degrees
    """
    dot = np.abs(np.sum(normalize_quaternion(q1) * normalize_quaternion(q2), axis=-1))
    angle = np.degrees(2.0 * np.arccos(np.clip(dot, 0.0, 1.0)))
    if np.ndim(angle) == 0:
        return float(angle)
    return angle


def quat_from_axis_angle(axis: np.ndarray, angle_deg: float) -> np.ndarray:
    """
    Quaternion of a rotation about an axis.
    :param axis: rotation axis (normalized internally)
    :param angle_deg: angle in degrees
    :return: canonical unit quaternion
    """
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return scipy_to_quat(Rotation.from_rotvec(axis * np.radians(angle_deg)))


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Rigid transform x -> R x + t, e.g. object frame -> camera frame.
    :param rotation: unit quaternion (w, x, y, z), canonicalized to w >= 0 on construction
    :param translation: 3-vector in meters
    """
    rotation: np.ndarray = field(default_factory=lambda: _IDENTITY_QUATERNION.copy())
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = canonicalize_quaternion(np.asarray(self.rotation, dtype=np.float64))
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        rotation.setflags(write=False)
        translation = translation.copy()
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "Pose":
        """The identity transform"""
        return cls()

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Pose":
        """
        Creates a pose from a 4x4 homogeneous matrix or a 3x4 [R|t] matrix.
        """
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(scipy_to_quat(Rotation.from_matrix(matrix[:3, :3])), matrix[:3, 3])

    @classmethod
    def from_rotation_matrix(cls, rotation: np.ndarray, translation: np.ndarray) -> "Pose":
        """Creates a pose from a 3x3 rotation matrix and a translation."""
        return cls(scipy_to_quat(Rotation.from_matrix(rotation)), translation)

    @property
    def rotation_matrix(self) -> np.ndarray:
        """3x3 rotation matrix"""
        return quat_to_scipy(self.rotation).as_matrix()

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix"""
        out = np.eye(4)
        out[:3, :3] = self.rotation_matrix
        out[:3, 3] = self.translation
        return out

    def apply(self, points: np.ndarray) -> np.ndarray:
        """
        Transforms (3,) or (N, 3) points.
        """
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation_matrix.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """
        Returns self ∘ other, i.e. other is applied first.
        """
        rotation = quat_multiply(self.rotation, other.rotation)
        translation = self.rotation_matrix @ other.translation + self.translation
        return Pose(rotation, translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        """The inverse transform"""
        inverse_rotation = self.rotation * np.array([1.0, -1.0, -1.0, -1.0])
        return Pose(inverse_rotation, -(self.rotation_matrix.T @ self.translation))

    def rotation_angle_to(self, other: "Pose") -> float:
        """Geodesic rotation difference to another pose in degrees"""
        return quat_geodesic_deg(self.rotation, other.rotation)

    def translation_distance_to(self, other: "Pose") -> float:
        """Euclidean distance between the translations in meters"""
        return float(np.linalg.norm(self.translation - other.translation))

    def __repr__(self):
        q = np.array2string(self.rotation, precision=6)
        t = np.array2string(self.translation, precision=6)
        return f"Pose(rotation={q}, translation={t})"
