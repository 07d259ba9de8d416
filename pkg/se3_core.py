"""
Rotation and rigid-transform value types plus the representation algebra
(quaternion multiplication matrices, Kronecker product, vec operator and the
general mapping Omega) every calibration solver is built on.

Quaternions are stored as (w, x, y, z). Every public quaternion is kept in
canonical sign: w >= 0, and when w == 0 the first nonzero vector component is
positive.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation as ScipyRotation

from calibration_errors import (
    DimensionMismatch,
    InvariantViolation,
    UnsupportedRepresentation,
)

logger = logging.getLogger(__name__)

UNIT_NORM_TOL = 1e-12
ROTATION_TOL = 1e-10


class Representation(str, Enum):
    """Rotation representation a solver works in"""
    AXIS_ANGLE = "axis_angle"
    QUATERNION = "quaternion"
    KRONECKER = "kronecker"


def _frozen_array(values, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise DimensionMismatch(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def canonical_sign(w: float, v: np.ndarray) -> float:
    """Return +1 or -1 so that sign * (w, v) is canonical"""
    if w > 0:
        return 1.0
    if w < 0:
        return -1.0
    for component in v:
        if component != 0:
            return 1.0 if component > 0 else -1.0
    return 1.0


@dataclass(frozen=True, eq=False)
class UnitQuaternion:
    """
    Rotation as a unit quaternion (w, v) with w = cos(angle/2) and
    v = sin(angle/2) * axis. Construction canonicalizes the sign.
    """
    w: float
    v: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.v, (3,), "quaternion vector part")
        w = float(self.w)
        if not np.isfinite(w):
            raise InvariantViolation("quaternion scalar part is not finite")
        norm_sq = w * w + float(v @ v)
        if abs(norm_sq - 1.0) > UNIT_NORM_TOL:
            raise InvariantViolation(f"quaternion is not unit norm (|q|^2 = {norm_sq:.17g})")
        sign = canonical_sign(w, v)
        if sign < 0:
            v = -v
            v.setflags(write=False)
            w = -w
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_array(cls, q) -> "UnitQuaternion":
        """Normalize an arbitrary nonzero 4-vector (w, x, y, z)"""
        arr = np.asarray(q, dtype=float)
        if arr.shape != (4,):
            raise DimensionMismatch(f"quaternion must have 4 components, got {arr.shape}")
        norm = np.linalg.norm(arr)
        if not np.isfinite(norm) or norm == 0:
            raise InvariantViolation("cannot normalize a zero or non-finite quaternion")
        arr = arr / norm
        return cls(arr[0], arr[1:])

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, np.zeros(3))

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.w], self.v))

    def __repr__(self) -> str:
        return f"UnitQuaternion(w={self.w:.12g}, v={np.array2string(self.v, precision=12)})"


@dataclass(frozen=True, eq=False)
class PureQuaternion:
    """Quaternion with zero scalar part encoding a translation (meters)"""
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen_array(self.v, (3,), "pure quaternion"))

    def as_array(self) -> np.ndarray:
        return np.concatenate(([0.0], self.v))


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Proper rotation matrix (orthogonal, det +1 within 1e-10)"""
    m: np.ndarray

    def __post_init__(self):
        m = _frozen_array(self.m, (3, 3), "rotation matrix")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ROTATION_TOL:
            raise InvariantViolation("rotation matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > ROTATION_TOL:
            raise InvariantViolation("rotation matrix determinant is not +1")
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls(np.eye(3))

    @property
    def T(self) -> "Rotation3":
        return Rotation3(self.m.T)

    def __matmul__(self, other):
        if isinstance(other, Rotation3):
            return Rotation3(self.m @ other.m)
        return self.m @ np.asarray(other, dtype=float)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """
    Rotation plus translation (meters), acting on points as R p + t.

    source_quaternion holds the (w, x, y, z) values a pose was read from, so
    writing it back reproduces the input digits. Derived transforms drop it.
    """
    rotation: Rotation3
    translation: np.ndarray
    source_quaternion: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.rotation, Rotation3):
            object.__setattr__(self, "rotation", Rotation3(self.rotation))
        object.__setattr__(self, "translation", _frozen_array(self.translation, (3,), "translation"))
        if self.source_quaternion is not None:
            object.__setattr__(self, "source_quaternion",
                               _frozen_array(self.source_quaternion, (4,), "source quaternion"))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(Rotation3.identity(), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        mat = np.asarray(matrix, dtype=float)
        if mat.shape != (4, 4):
            raise DimensionMismatch(f"homogeneous transform must be 4x4, got {mat.shape}")
        return cls(Rotation3(mat[:3, :3]), mat[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        mat = np.eye(4)
        mat[:3, :3] = self.rotation.m
        mat[:3, 3] = self.translation
        return mat

    @property
    def quaternion(self) -> UnitQuaternion:
        return rotation_to_quat(self.rotation)

    def apply(self, point) -> np.ndarray:
        return self.rotation.m @ np.asarray(point, dtype=float) + self.translation

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)


QuaternionLike = Union[UnitQuaternion, PureQuaternion, np.ndarray]
RotationLike = Union[Rotation3, UnitQuaternion, np.ndarray]


def as_quaternion_array(q: QuaternionLike) -> np.ndarray:
    """(w, x, y, z) array of a quaternion type or a raw 4-vector (sign kept)"""
    if isinstance(q, (UnitQuaternion, PureQuaternion)):
        return q.as_array()
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise DimensionMismatch(f"quaternion must have 4 components, got {arr.shape}")
    return arr


def as_rotation_matrix(r: RotationLike) -> np.ndarray:
    """3x3 matrix of a rotation given as Rotation3, quaternion or raw array"""
    if isinstance(r, Rotation3):
        return r.m
    if isinstance(r, UnitQuaternion):
        return quat_to_rotation(r).m
    arr = np.asarray(r, dtype=float)
    if arr.shape == (3, 3):
        return arr
    if arr.shape == (4,):
        return quat_to_rotation(arr).m
    raise DimensionMismatch(f"expected a 3x3 rotation or a quaternion, got shape {arr.shape}")


def cross_matrix(v) -> np.ndarray:
    """Skew-symmetric [v]x with cross_matrix(a) @ b == a x b"""
    x, y, z = _frozen_array(v, (3,), "cross-product vector")
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def quat_left_matrix(q: QuaternionLike) -> np.ndarray:
    """Q+(q), so that Q+(p) @ q == p * q"""
    arr = as_quaternion_array(q)
    w, v = arr[0], arr[1:]
    mat = np.empty((4, 4))
    mat[0, 0] = w
    mat[0, 1:] = -v
    mat[1:, 0] = v
    mat[1:, 1:] = w * np.eye(3) + cross_matrix(v)
    return mat


def quat_right_matrix(q: QuaternionLike) -> np.ndarray:
    """Q-(q), so that Q-(q) @ p == p * q"""
    arr = as_quaternion_array(q)
    w, v = arr[0], arr[1:]
    mat = np.empty((4, 4))
    mat[0, 0] = w
    mat[0, 1:] = -v
    mat[1:, 0] = v
    mat[1:, 1:] = w * np.eye(3) - cross_matrix(v)
    return mat


def hamilton_product(p: QuaternionLike, q: QuaternionLike) -> np.ndarray:
    """Raw Hamilton product p * q as a 4-vector, no normalization or sign fix"""
    return quat_left_matrix(p) @ as_quaternion_array(q)


def quat_mul(p: UnitQuaternion, q: UnitQuaternion) -> UnitQuaternion:
    return UnitQuaternion.from_array(hamilton_product(p, q))


def kron(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch("kron expects two matrices")
    return np.kron(a, b)


def vec(m) -> np.ndarray:
    """Column-major stacking, so that vec(A X B) == kron(B.T, A) @ vec(X)"""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"vec expects a matrix, got {arr.ndim} dimensions")
    return arr.reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size != rows * cols:
        raise DimensionMismatch(f"cannot reshape {arr.shape} into {rows}x{cols}")
    return arr.reshape((rows, cols), order="F")


def omega_dimension(repr: Representation) -> int:
    if repr == Representation.QUATERNION:
        return 4
    if repr == Representation.KRONECKER:
        return 9
    raise UnsupportedRepresentation(f"no linear Omega mapping for {repr}")


def omega_vector(r: RotationLike, repr: Representation) -> np.ndarray:
    """Vectorized rotation: quaternion 4-vector or vec of the 3x3 matrix"""
    omega_dimension(repr)
    if repr == Representation.QUATERNION:
        if isinstance(r, Rotation3) or np.shape(r) == (3, 3):
            return rotation_to_quat(r).as_array()
        return as_quaternion_array(r)
    return vec(as_rotation_matrix(r))


def omega_left(r: RotationLike, repr: Representation) -> np.ndarray:
    """M+(A) with Omega(A B) = M+(A) @ omega_vector(B)"""
    omega_dimension(repr)
    if repr == Representation.QUATERNION:
        return quat_left_matrix(omega_vector(r, repr))
    return np.kron(np.eye(3), as_rotation_matrix(r))


def omega_right(r: RotationLike, repr: Representation) -> np.ndarray:
    """M-(B) with Omega(A B) = M-(B) @ omega_vector(A)"""
    omega_dimension(repr)
    if repr == Representation.QUATERNION:
        return quat_right_matrix(omega_vector(r, repr))
    return np.kron(as_rotation_matrix(r).T, np.eye(3))


def rotation_to_quat(r: Union[Rotation3, np.ndarray]) -> UnitQuaternion:
    # scipy needs a writable buffer; Rotation3.m is frozen
    m = np.array(r.m if isinstance(r, Rotation3) else r, dtype=float)
    x, y, z, w = ScipyRotation.from_matrix(m).as_quat()
    return UnitQuaternion.from_array([w, x, y, z])


def quat_to_rotation(q: QuaternionLike) -> Rotation3:
    """Rotation matrix of a (not necessarily canonical) quaternion; q and -q map identically"""
    arr = as_quaternion_array(q)
    norm = np.linalg.norm(arr)
    if norm == 0 or not np.isfinite(norm):
        raise InvariantViolation("cannot convert a zero or non-finite quaternion")
    w, x, y, z = arr / norm
    return Rotation3(np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]))


def axis_angle(r: Union[Rotation3, np.ndarray]) -> Tuple[np.ndarray, float]:
    """
    Rotation axis and angle in [0, pi].

    The identity returns axis (1, 0, 0). Above pi/2 the axis comes from the
    largest column of the symmetric part, which stays well conditioned up
    to and including pi.
    """
    m = r.m if isinstance(r, Rotation3) else np.asarray(r, dtype=float)
    skew = 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    sin_angle = np.linalg.norm(skew)
    cos_angle = 0.5 * (np.trace(m) - 1.0)
    angle = float(np.arctan2(sin_angle, cos_angle))

    if angle < 1e-12:
        return np.array([1.0, 0.0, 0.0]), 0.0
    if angle < np.pi / 2:
        return skew / sin_angle, angle

    # (1 - cos) * e e^T
    outer = 0.5 * (m + m.T) - cos_angle * np.eye(3)
    column = outer[:, np.argmax(np.linalg.norm(outer, axis=0))]
    axis = column / np.linalg.norm(column)
    if axis @ skew < 0:
        axis = -axis
    return axis, angle


def log_map(r: Union[Rotation3, np.ndarray]) -> np.ndarray:
    """Rotation vector axis * angle"""
    axis, angle = axis_angle(r)
    return axis * angle


def exp_map(rotvec) -> Rotation3:
    rv = _frozen_array(rotvec, (3,), "rotation vector")
    return Rotation3(ScipyRotation.from_rotvec(np.array(rv)).as_matrix())


def compose(t1: RigidTransform, t2: RigidTransform) -> RigidTransform:
    """t1 * t2, i.e. apply t2 first"""
    r1 = t1.rotation.m
    return RigidTransform(Rotation3(r1 @ t2.rotation.m), r1 @ t2.translation + t1.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.m.T
    return RigidTransform(Rotation3(rt), -rt @ t.translation)
