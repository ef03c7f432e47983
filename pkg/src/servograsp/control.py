"""Interaction matrix, stacked image Jacobian, and the velocity-screw control law.

The per-point interaction matrix maps a camera-frame screw to the pixel
velocity of that point's projection; multiplying by a screw change-of-frame
operator re-expresses it against the gripper-frame screw actually commanded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import MIN_DEPTH, CameraIntrinsics
from .errors import NonPositiveDepth, SingularJacobian
from .geometry import ScrewTransform, VelocityScrew

_SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class InteractionMatrix:
    """2x6 map from a camera-frame screw to one point's image velocity."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float).reshape(2, 6))


@dataclass(frozen=True)
class ImageJacobian:
    """2n x 6 stack of per-point Jacobian blocks, in point order."""

    matrix: np.ndarray
    point_count: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2 * self.point_count, 6):
            raise ValueError(f"expected shape ({2 * self.point_count}, 6), got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def block(self, j: int) -> np.ndarray:
        return self.matrix[2 * j : 2 * j + 2]

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def rank(self, rel_tol: float = 1e-10) -> int:
        sv = self.singular_values()
        return int(np.sum(sv > rel_tol * sv[0]))


@dataclass(frozen=True)
class FeatureVector:
    """Pixel coordinates of all tracked points, flattened (u1, v1, ..., un, vn)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.size % 2 != 0:
            raise ValueError("feature vector length must be even")
        if not np.all(np.isfinite(c)):
            raise ValueError("feature coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_pixels(cls, uv: np.ndarray) -> "FeatureVector":
        return cls(np.asarray(uv, dtype=float).reshape(-1))

    def to_pixels(self) -> np.ndarray:
        return self.coords.reshape(-1, 2)

    @property
    def point_count(self) -> int:
        return self.coords.size // 2


@dataclass(frozen=True)
class ControlGains:
    """Convergence-rate scalar, optional feature weights, optional damping."""

    g: float = 1.0
    weight: np.ndarray | None = None
    damping: float = 0.0

    def __post_init__(self):
        if not self.g > 0.0:
            raise ValueError("gain g must be positive")
        if self.damping < 0.0:
            raise ValueError("damping must be non-negative")
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise ValueError("weight must be a square matrix")
            if np.max(np.abs(w - w.T)) > 1e-12:
                raise ValueError("weight must be symmetric")
            if np.min(np.linalg.eigvalsh(w)) < -1e-12:
                # zero eigenvalues are allowed: they de-select features
                raise ValueError("weight must be positive semi-definite")
            object.__setattr__(self, "weight", w)


def interaction_matrix(k: CameraIntrinsics, p_cam) -> InteractionMatrix:
    """Closed-form interaction matrix of one camera-frame point."""
    x, y, z = np.asarray(p_cam, dtype=float).reshape(3)
    if z <= MIN_DEPTH:
        raise NonPositiveDepth(f"point depth {z:.3e} m is not positive")
    z2 = z * z
    rows = np.array(
        [
            [1.0 / z, 0.0, -x / z2, -x * y / z2, 1.0 + x * x / z2, -y / z],
            [0.0, 1.0 / z, -y / z2, -1.0 - y * y / z2, x * y / z2, x / z],
        ]
    )
    return InteractionMatrix(np.diag([k.alpha_u, k.alpha_v]) @ rows)


def point_jacobian(l: InteractionMatrix, theta: ScrewTransform) -> np.ndarray:
    """2x6 Jacobian block of one point against the gripper-frame screw."""
    return l.matrix @ theta.matrix


def stack_jacobian(blocks) -> ImageJacobian:
    """Row-block concatenation of 2x6 blocks, preserving point order."""
    blocks = [np.asarray(b, dtype=float).reshape(2, 6) for b in blocks]
    if not blocks:
        raise ValueError("at least one Jacobian block is required")
    return ImageJacobian(np.vstack(blocks), len(blocks))


def _weight_sqrt(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(w)
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def control_screw(
    j_hat: ImageJacobian, gains: ControlGains, s: FeatureVector, s_star: FeatureVector
) -> VelocityScrew:
    """Weighted damped least-squares control screw g (J'WJ + damping I)^-1 J'W (s* - s).

    Solved through an orthogonal decomposition of the (optionally damped)
    weighted stack rather than an explicit normal-matrix inverse.
    """
    j = j_hat.matrix
    e = s_star.coords - s.coords
    if e.size != j.shape[0]:
        raise ValueError("feature vectors do not match the Jacobian row count")
    if gains.weight is not None:
        if gains.weight.shape[0] != j.shape[0]:
            raise ValueError("weight size does not match the Jacobian row count")
        w_half = _weight_sqrt(gains.weight)
        a = w_half @ j
        y = w_half @ e
    else:
        a = j
        y = e
    if gains.damping > 0.0:
        a = np.vstack([a, np.sqrt(gains.damping) * np.eye(6)])
        y = np.concatenate([y, np.zeros(6)])
    sv = np.linalg.svd(a, compute_uv=False)
    smallest = sv[5] if sv.size >= 6 else 0.0
    if smallest * smallest < _SINGULAR_EPS:
        raise SingularJacobian(
            f"normal matrix is singular (smallest singular value {smallest**2:.3e})"
        )
    sol, _, _, _ = np.linalg.lstsq(a, y, rcond=None)
    return VelocityScrew.from_vector(gains.g * sol)


def pixel_sensitivity(k: CameraIntrinsics, p_cam, dx: float, dz: float) -> float:
    """First-order pixel shift du caused by 3-D errors (dx, dz) at a point."""
    x, _, z = np.asarray(p_cam, dtype=float).reshape(3)
    if z <= MIN_DEPTH:
        raise NonPositiveDepth(f"point depth {z:.3e} m is not positive")
    return k.alpha_u * (dx / z - x * dz / (z * z))
