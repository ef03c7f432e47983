"""Pin-hole projection, intrinsics, and Euclidean projection matrices.

The camera model is a pure pin-hole: ``u = alpha_u x/z + u0``,
``v = alpha_v y/z + v0``. No distortion, no image-bound clipping; a separate
visibility predicate flags points outside a sensor rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDepth
from .geometry import RigidTransform, transform_point, transform_points
from .rng import as_generator

MIN_DEPTH = 1e-9  # meters; projection below this raises NonPositiveDepth


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pin-hole parameters: focal scales in pixels and the principal point."""

    alpha_u: float
    alpha_v: float
    u0: float
    v0: float

    def __post_init__(self):
        if not (self.alpha_u > 0.0 and self.alpha_v > 0.0):
            raise ValueError("focal scales alpha_u, alpha_v must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.alpha_u, 0.0, self.u0], [0.0, self.alpha_v, self.v0], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class ImagePoint:
    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("image coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class CameraPose:
    """A camera placed in the world: world->camera extrinsics plus intrinsics."""

    extrinsics: RigidTransform
    intrinsics: CameraIntrinsics


def project(k: CameraIntrinsics, p_cam) -> ImagePoint:
    """Project a camera-frame point to pixel coordinates."""
    x, y, z = np.asarray(p_cam, dtype=float).reshape(3)
    if z <= MIN_DEPTH:
        raise NonPositiveDepth(f"point depth {z:.3e} m is not positive")
    return ImagePoint(k.alpha_u * x / z + k.u0, k.alpha_v * y / z + k.v0)


def project_points(k: CameraIntrinsics, pts_cam) -> np.ndarray:
    """Project an (n, 3) array of camera-frame points to an (n, 2) pixel array."""
    pts = np.asarray(pts_cam, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    if np.any(z <= MIN_DEPTH):
        raise NonPositiveDepth("a point lies behind or on the camera plane")
    uv = np.empty((pts.shape[0], 2))
    uv[:, 0] = k.alpha_u * pts[:, 0] / z + k.u0
    uv[:, 1] = k.alpha_v * pts[:, 1] / z + k.v0
    return uv


def project_world(camera: CameraPose, p_world) -> ImagePoint:
    return project(camera.intrinsics, transform_point(camera.extrinsics, p_world))


def project_world_points(camera: CameraPose, pts_world) -> np.ndarray:
    return project_points(camera.intrinsics, transform_points(camera.extrinsics, pts_world))


def euclidean_projection_matrix(c: CameraPose) -> np.ndarray:
    """3x4 matrix K [R | t]; acting on homogeneous world points it reproduces project."""
    rt = np.hstack([c.extrinsics.rotation, c.extrinsics.translation.reshape(3, 1)])
    return c.intrinsics.matrix() @ rt


def add_pixel_noise(p: ImagePoint, sigma: float, rng) -> ImagePoint:
    """Isotropic Gaussian pixel noise; rng is a Generator or an integer seed."""
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return p
    gen = as_generator(rng)
    du, dv = gen.normal(0.0, sigma, size=2)
    return ImagePoint(p.u + du, p.v + dv)


def add_pixel_noise_array(uv: np.ndarray, sigma: float, rng) -> np.ndarray:
    """Noise applied to an (n, 2) pixel array, consuming one stream in point order."""
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    uv = np.asarray(uv, dtype=float)
    if sigma == 0.0:
        return uv.copy()
    gen = as_generator(rng)
    return uv + gen.normal(0.0, sigma, size=uv.shape)


def visible(p: ImagePoint, rect) -> bool:
    """True when p lies inside the sensor rectangle (u_min, v_min, u_max, v_max)."""
    u_min, v_min, u_max, v_max = rect
    return (u_min <= p.u <= u_max) and (v_min <= p.v <= v_max)
