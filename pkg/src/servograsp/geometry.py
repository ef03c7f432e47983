"""Rigid-body transforms, velocity screws, and screw-frame changes.

All operations are pure functions on immutable values. A ``RigidTransform``
acts on points as ``p -> rotation @ p + translation``; a ``VelocityScrew``
``(linear, angular)`` generates the velocity field ``v(p) = linear +
angular x p`` in the frame it is expressed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ORTHO_GUARD = 1e-8    # constructor rejects rotations worse than this
_ORTHO_DRIFT = 1e-9    # integrate_screw re-projects beyond this
_SMALL_ANGLE = 1e-12   # series branch of the exponential, radians


def skew(a) -> np.ndarray:
    """Skew-symmetric matrix S(a) such that S(a) @ b == cross(a, b)."""
    x, y, z = np.asarray(a, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class RigidTransform:
    """4x4 homogeneous displacement split into rotation and translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if np.max(np.abs(r @ r.T - np.eye(3))) > _ORTHO_GUARD:
            raise ValueError("rotation matrix is not orthonormal")
        if np.linalg.det(r) < 0.0:
            raise ValueError("rotation must be proper (det +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rotvec(cls, rotvec, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Build from a rotation vector (axis * angle, radians) and translation."""
        return cls(rotation_exp(rotvec), np.asarray(translation, dtype=float))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class VelocityScrew:
    """Instantaneous rigid motion: velocity of the frame origin plus angular rate."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(3))
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=float).reshape(3))

    @classmethod
    def zero(cls) -> "VelocityScrew":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, v) -> "VelocityScrew":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], v[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class ScrewTransform:
    """6x6 operator mapping velocity screws between frames."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float).reshape(6, 6))

    def apply(self, t: VelocityScrew) -> VelocityScrew:
        return VelocityScrew.from_vector(self.matrix @ t.as_vector())

    def inverse(self) -> "ScrewTransform":
        r = self.matrix[:3, :3]
        b = self.matrix[:3, 3:]
        m = np.zeros((6, 6))
        m[:3, :3] = r.T
        m[3:, 3:] = r.T
        m[:3, 3:] = -r.T @ b @ r.T
        return ScrewTransform(m)


def screw_transform(d: RigidTransform) -> ScrewTransform:
    """Screw change-of-frame operator induced by a rigid displacement.

    For the coordinate map ``p_target = R @ p_source + t``, a screw expressed
    in the source frame maps to ``[[R, S(t) R], [0, R]]`` times itself in
    the target frame (equivalently ``[[R, R S(R^T t)], [0, R]]``, the same
    coupling written with the translation in source-frame coordinates).
    """
    r = d.rotation
    m = np.zeros((6, 6))
    m[:3, :3] = r
    m[:3, 3:] = skew(d.translation) @ r
    m[3:, 3:] = r
    return ScrewTransform(m)


def rotation_exp(omega) -> np.ndarray:
    """Rotation matrix for a rotation vector (Rodrigues), radians."""
    omega = np.asarray(omega, dtype=float).reshape(3)
    theta = float(np.linalg.norm(omega))
    s = skew(omega)
    if theta < _SMALL_ANGLE:
        # second-order series is exact to machine precision at this magnitude
        return np.eye(3) + s + 0.5 * (s @ s)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * s + b * (s @ s)


def rotation_log(r: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix (inverse of rotation_exp)."""
    r = np.asarray(r, dtype=float)
    cos_theta = np.clip(0.5 * (np.trace(r) - 1.0), -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    if theta < 1e-8:
        return 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if np.pi - theta < 1e-6:
        # near pi the antisymmetric part vanishes; recover the axis from R + I
        m = 0.5 * (r + np.eye(3))
        axis = np.sqrt(np.maximum(np.diag(m), 0.0))
        k = int(np.argmax(axis))
        axis = m[:, k] / max(axis[k], 1e-12)
        axis = axis / np.linalg.norm(axis)
        # fix the sign using the largest off-diagonal antisymmetric entry
        w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        if np.dot(w, axis) < 0.0:
            axis = -axis
        return theta * axis
    scale = theta / (2.0 * np.sin(theta))
    return scale * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle of a rotation matrix, radians in [0, pi]."""
    return float(np.arccos(np.clip(0.5 * (np.trace(np.asarray(r, dtype=float)) - 1.0), -1.0, 1.0)))


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Orthogonal-Procrustes projection onto the nearest proper rotation."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
    return u @ vt


def _screw_exp(t: VelocityScrew, dt: float) -> RigidTransform:
    """Closed-form rigid exponential of a constant screw over dt."""
    omega = t.angular * dt
    v = t.linear * dt
    theta = float(np.linalg.norm(omega))
    s = skew(omega)
    ss = s @ s
    if theta < _SMALL_ANGLE:
        rot = np.eye(3) + s + 0.5 * ss
        coupling = np.eye(3) + 0.5 * s + ss / 6.0
    else:
        rot = np.eye(3) + (np.sin(theta) / theta) * s + ((1.0 - np.cos(theta)) / theta**2) * ss
        coupling = (
            np.eye(3)
            + ((1.0 - np.cos(theta)) / theta**2) * s
            + ((theta - np.sin(theta)) / theta**3) * ss
        )
    return RigidTransform(rot, coupling @ v)


def integrate_screw(pose: RigidTransform, t: VelocityScrew, dt: float) -> RigidTransform:
    """Advance a pose by a constant screw over dt.

    The screw is expressed in the base frame of ``pose`` (the frame the pose
    maps into), so the update is the left composition ``exp(dt * screw) o
    pose``; with zero angular rate the pose is translated by ``linear * dt``.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    out = compose(_screw_exp(t, dt), pose)
    r = out.rotation
    if np.max(np.abs(r @ r.T - np.eye(3))) > _ORTHO_DRIFT:
        out = RigidTransform(nearest_rotation(r), out.translation)
    return out


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a after b: apply b first, then a."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -rt @ t.translation)


def transform_point(t: RigidTransform, p) -> np.ndarray:
    return t.rotation @ np.asarray(p, dtype=float).reshape(3) + t.translation


def transform_points(t: RigidTransform, pts) -> np.ndarray:
    """Apply a transform to an (n, 3) array of points."""
    return np.asarray(pts, dtype=float).reshape(-1, 3) @ t.rotation.T + t.translation
