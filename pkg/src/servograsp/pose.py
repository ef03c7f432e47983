"""Iterative pose estimation from 2-D/3-D point correspondences.

Gauss-Newton on the sum of squared reprojection errors, with a local
rotation-vector increment composed through the exponential map and a
halving line search that enforces monotone descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import MIN_DEPTH, CameraIntrinsics, ImagePoint
from .errors import BehindCamera, DivergedPose
from .geometry import RigidTransform, rotation_exp, transform_points

_STEP_EPS = 1e-10
_MAX_BACKTRACK = 20


@dataclass(frozen=True)
class PointCorrespondence2D3D:
    """One measured image point matched to a known model point (gripper frame)."""

    image: ImagePoint
    model: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "model", np.asarray(self.model, dtype=float).reshape(3))


@dataclass(frozen=True)
class PoseEstimate:
    pose: RigidTransform
    rms_reprojection: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.rms_reprojection < 0.0:
            raise ValueError("rms_reprojection must be non-negative")


def make_correspondences(uv: np.ndarray, model_pts: np.ndarray) -> list[PointCorrespondence2D3D]:
    """Pair an (n, 2) pixel array with an (n, 3) model array."""
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    model_pts = np.asarray(model_pts, dtype=float).reshape(-1, 3)
    if uv.shape[0] != model_pts.shape[0]:
        raise ValueError("pixel and model point counts differ")
    return [
        PointCorrespondence2D3D(ImagePoint(u, v), m) for (u, v), m in zip(uv, model_pts)
    ]


def _project_all(pose: RigidTransform, model: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    cam = transform_points(pose, model)
    if np.any(cam[:, 2] <= MIN_DEPTH):
        raise BehindCamera("a model point is at non-positive depth under this pose")
    uv = np.empty((cam.shape[0], 2))
    uv[:, 0] = k.alpha_u * cam[:, 0] / cam[:, 2] + k.u0
    uv[:, 1] = k.alpha_v * cam[:, 1] / cam[:, 2] + k.v0
    return uv


def _rms(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residual**2)))


def _residual_jacobian(
    pose: RigidTransform, model: np.ndarray, k: CameraIntrinsics
) -> np.ndarray:
    """Stacked 2n x 6 Jacobian of the residual against (d_translation, d_rotation)."""
    cam = transform_points(pose, model)
    rot_model = cam - pose.translation  # R @ model for each point
    n = model.shape[0]
    jac = np.empty((2 * n, 6))
    for i in range(n):
        x, y, z = cam[i]
        proj = np.array(
            [[k.alpha_u / z, 0.0, -k.alpha_u * x / z**2], [0.0, k.alpha_v / z, -k.alpha_v * y / z**2]]
        )
        rx, ry, rz = rot_model[i]
        neg_skew = np.array([[0.0, rz, -ry], [-rz, 0.0, rx], [ry, -rx, 0.0]])
        jac[2 * i : 2 * i + 2, :3] = proj
        jac[2 * i : 2 * i + 2, 3:] = proj @ neg_skew
    return jac


def _apply_step(pose: RigidTransform, step: np.ndarray) -> RigidTransform:
    """Left-increment: rotation perturbed in the camera frame, translation shifted."""
    return RigidTransform(
        rotation_exp(step[3:]) @ pose.rotation, pose.translation + step[:3]
    )


def estimate_pose(
    matches,
    k: CameraIntrinsics,
    init: RigidTransform,
    tol: float = 1e-9,
    max_iter: int = 50,
) -> PoseEstimate:
    """Local minimizer of the reprojection error over the model->camera pose.

    Converges when the step norm drops below 1e-10 or the rms change drops
    below ``tol`` pixels; hitting ``max_iter`` returns converged=False.
    """
    matches = list(matches)
    if len(matches) < 4:
        raise ValueError("pose estimation requires at least 4 correspondences")
    model = np.stack([m.model for m in matches])
    target = np.stack([m.image.as_array() for m in matches])

    pose = init
    residual = (_project_all(pose, model, k) - target).reshape(-1)
    rms = _rms(residual)
    for iteration in range(1, max_iter + 1):
        jac = _residual_jacobian(pose, model, k)
        step, _, _, _ = np.linalg.lstsq(jac, -residual, rcond=None)
        if np.linalg.norm(step) < _STEP_EPS:
            return PoseEstimate(pose, rms, iteration, True)
        accepted = False
        hit_depth = False
        full_step_rms = None
        scale = 1.0
        for _ in range(_MAX_BACKTRACK):
            candidate = _apply_step(pose, scale * step)
            try:
                cand_residual = (_project_all(candidate, model, k) - target).reshape(-1)
            except BehindCamera:
                hit_depth = True
                scale *= 0.5
                continue
            cand_rms = _rms(cand_residual)
            if full_step_rms is None:
                full_step_rms = cand_rms
            if cand_rms < rms:
                improvement = rms - cand_rms
                pose, residual, rms = candidate, cand_residual, cand_rms
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            # a full step that moves the rms by less than tol is the
            # stationary point itself, not a divergence
            if full_step_rms is not None and abs(full_step_rms - rms) < max(tol, 1e-12):
                return PoseEstimate(pose, rms, iteration, True)
            if hit_depth:
                raise BehindCamera("line search kept driving a model point behind the camera")
            raise DivergedPose(
                f"no descent step found after {_MAX_BACKTRACK} halvings (rms {rms:.3e} px)"
            )
        if improvement < tol:
            return PoseEstimate(pose, rms, iteration, True)
    return PoseEstimate(pose, rms, max_iter, False)


def pose_warm_start(previous: PoseEstimate) -> RigidTransform:
    """Seed for the next frame's estimate; requires a converged previous frame."""
    if not previous.converged:
        raise ValueError("warm start requires a converged previous estimate")
    return previous.pose
