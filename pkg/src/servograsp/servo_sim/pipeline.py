"""Grasp pipeline: planning-rig reconstruction, set-point transfer, execution.

Planning stage: an uncalibrated stereo rig images the gripper aligned with
the object (object frame = world frame of the planning scene) and both are
reconstructed projectively. Transfer stage: the runtime rig images the
displaced object plus the gripper in its initial position; the collineation
between the two object reconstructions carries the gripper points into the
runtime images, yielding the set-point. Execution stage: the servo loop runs
against that set-point. Ground-truth alignment errors are available because
the whole scene is synthetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..camera import CameraPose, add_pixel_noise_array, project_world_points
from ..control import FeatureVector
from ..errors import ScenarioError
from ..geometry import transform_points
from ..projective import (
    ProjectiveCameraPair,
    ProjectiveHomography,
    basis_homography,
    cameras_from_fundamental,
    estimate_fundamental,
    estimate_homography_3d,
    refine_homography_3d,
    setpoint_from_transfer,
    transfer_gripper_points,
    triangulate_points,
)
from .loop import run_servo
from .scenario import Scenario
from .trace import GraspResult, ServoTrace


@dataclass(frozen=True)
class TransferOutcome:
    """Transferred set-points plus their ground-truth references (pixels)."""

    s_star_left: FeatureVector
    s_star_right: FeatureVector
    truth_left: FeatureVector
    truth_right: FeatureVector
    h_xy: ProjectiveHomography
    pair_x: ProjectiveCameraPair
    pair_y: ProjectiveCameraPair

    def rms_error_px(self, which_camera: str = "left") -> float:
        got = self.s_star_left if which_camera == "left" else self.s_star_right
        ref = self.truth_left if which_camera == "left" else self.truth_right
        return float(np.sqrt(np.mean((got.coords - ref.coords) ** 2)))


def _observe(camera: CameraPose, pts_world, sigma: float, gen) -> np.ndarray:
    return add_pixel_noise_array(project_world_points(camera, pts_world), sigma, gen)


def plan_and_transfer(
    scenario: Scenario,
    seed: int | None = None,
    n_object_points: int | None = None,
    noise_px: float | None = None,
) -> TransferOutcome:
    """Planning + transfer stages; servo execution is left to the caller.

    ``n_object_points`` restricts the shared object cloud to its first k
    points (the transfer-accuracy sweeps vary it); noise defaults to the
    scenario's pixel sigma and applies to every synthetic observation.
    """
    if not scenario.supports_pipeline():
        raise ScenarioError(
            "pipeline needs planning_rig, object_points, grasp_pose, and a 2-camera runtime rig"
        )
    seed = scenario.seed if seed is None else seed
    sigma = scenario.noise_px if noise_px is None else noise_px
    obj = scenario.object_points
    if n_object_points is not None:
        if not 5 <= n_object_points <= obj.shape[0]:
            raise ScenarioError(f"n_object_points must be in [5, {obj.shape[0]}]")
        obj = obj[:n_object_points]

    # planning scene: object frame coincides with the world frame
    grip_plan_world = transform_points(scenario.grasp_pose, scenario.gripper_points)
    cam_xl, cam_xr = scenario.planning_rig
    gen_xl = rngmod.stream(seed, "transfer/plan_left")
    gen_xr = rngmod.stream(seed, "transfer/plan_right")
    obj_xl = _observe(cam_xl, obj, sigma, gen_xl)
    grip_xl = _observe(cam_xl, grip_plan_world, sigma, gen_xl)
    obj_xr = _observe(cam_xr, obj, sigma, gen_xr)
    grip_xr = _observe(cam_xr, grip_plan_world, sigma, gen_xr)
    f_x = estimate_fundamental(
        np.vstack([obj_xl, grip_xl]), np.vstack([obj_xr, grip_xr])
    )
    pair_x = cameras_from_fundamental(f_x)

    # runtime scene: object displaced, gripper parked at its initial pose
    obj_run_world = transform_points(scenario.object_motion, obj)
    grip_init_world = transform_points(scenario.initial_gripper_pose, scenario.gripper_points)
    cam_yl, cam_yr = scenario.runtime_rig
    gen_yl = rngmod.stream(seed, "transfer/run_left")
    gen_yr = rngmod.stream(seed, "transfer/run_right")
    obj_yl = _observe(cam_yl, obj_run_world, sigma, gen_yl)
    grip_yl = _observe(cam_yl, grip_init_world, sigma, gen_yl)
    obj_yr = _observe(cam_yr, obj_run_world, sigma, gen_yr)
    grip_yr = _observe(cam_yr, grip_init_world, sigma, gen_yr)
    f_y = estimate_fundamental(
        np.vstack([obj_yl, grip_yl]), np.vstack([obj_yr, grip_yr])
    )
    pair_y = cameras_from_fundamental(f_y)

    points_x = triangulate_points(pair_x, obj_xl, obj_xr)
    points_y = triangulate_points(pair_y, obj_yl, obj_yr)
    if scenario.h_route == "object_basis":
        idx = scenario.basis_indices
        if idx is None:
            raise ScenarioError("object_basis route needs basis_indices")
        if max(idx) >= len(points_x):
            raise ScenarioError("basis_indices exceed the restricted object cloud")
        h_xo = basis_homography([points_x[i] for i in idx])
        h_yo = basis_homography([points_y[i] for i in idx])
        h_xy = h_yo.inverse().after(h_xo)
    else:
        h_xy = estimate_homography_3d(points_x, points_y)
        # least-squares polish on runtime-image reprojection of the mapped points
        h_xy = refine_homography_3d(h_xy, points_x, pair_y, obj_yl, obj_yr)

    transferred = transfer_gripper_points(pair_x, grip_xl, grip_xr, h_xy, pair_y)
    s_star_left = setpoint_from_transfer(transferred, "left")
    s_star_right = setpoint_from_transfer(transferred, "right")

    goal_world = transform_points(scenario.resolved_goal_pose(), scenario.gripper_points)
    truth_left = FeatureVector.from_pixels(project_world_points(cam_yl, goal_world))
    truth_right = FeatureVector.from_pixels(project_world_points(cam_yr, goal_world))
    return TransferOutcome(
        s_star_left=s_star_left,
        s_star_right=s_star_right,
        truth_left=truth_left,
        truth_right=truth_right,
        h_xy=h_xy,
        pair_x=pair_x,
        pair_y=pair_y,
    )


def setpoint_transfer_error(
    scenario: Scenario, seed: int, n_object_points: int, noise_px: float
) -> float:
    """RMS set-point error (left runtime camera) for one Monte-Carlo draw."""
    outcome = plan_and_transfer(
        scenario, seed=seed, n_object_points=n_object_points, noise_px=noise_px
    )
    return outcome.rms_error_px("left")


def run_grasp_pipeline_detailed(
    scenario: Scenario,
) -> tuple[ServoTrace, GraspResult, TransferOutcome]:
    outcome = plan_and_transfer(scenario)
    s_star = [outcome.s_star_left, outcome.s_star_right][: scenario.cameras_used]
    trace, result = run_servo(scenario, s_star=s_star)
    return trace, result, outcome


def run_grasp_pipeline(scenario: Scenario) -> GraspResult:
    """Full planning -> transfer -> execution run; see run_grasp_pipeline_detailed."""
    _, result, _ = run_grasp_pipeline_detailed(scenario)
    return result
