"""Closed-loop servo simulation.

One control cycle measures the gripper features in every active camera,
re-estimates the gripper pose (variable-Jacobian mode), stacks the per-camera
Jacobian blocks against the shared gripper-frame screw, solves the control
law, and integrates the commanded screw over one sample period. The screw
change-of-frame operator of each camera is frozen at its step-0 estimate; the
robot is an ideal Cartesian actuator unless actuator noise is configured.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .. import rng as rngmod
from ..camera import CameraPose, ImagePoint, add_pixel_noise_array, project_world_points, visible
from ..control import (
    FeatureVector,
    ImageJacobian,
    control_screw,
    interaction_matrix,
    point_jacobian,
)
from ..errors import FeatureLost, NonPositiveDepth, ScenarioError
from ..geometry import (
    RigidTransform,
    ScrewTransform,
    VelocityScrew,
    compose,
    integrate_screw,
    rotation_exp,
    screw_transform,
    transform_points,
)
from ..pose import PoseEstimate, estimate_pose, make_correspondences, pose_warm_start
from .scenario import Scenario
from .trace import GraspResult, ServoTrace, TraceRow

_POSE_TOL_PX = 1e-10
_POSE_MAX_ITER = 50


@dataclass(frozen=True)
class CameraChannel:
    """Per-camera servo state: frozen frame operator, warm start, noise stream."""

    camera: CameraPose
    theta: ScrewTransform                  # frozen step-0 screw change of frame
    warm: PoseEstimate | None              # last pose estimate (variable mode)
    jac_const: np.ndarray | None           # frozen goal-configuration Jacobian
    rng: np.random.Generator


@dataclass(frozen=True)
class ServoState:
    pose: RigidTransform                   # true gripper pose, world frame
    time_s: float
    step: int
    channels: tuple[CameraChannel, ...]
    theta_world: ScrewTransform            # true gripper-frame -> world screw map
    rng_actuator: np.random.Generator


def goal_setpoints(scenario: Scenario) -> list[FeatureVector]:
    """Noise-free set-points: goal-pose gripper projections per active camera."""
    goal_world = transform_points(scenario.resolved_goal_pose(), scenario.gripper_points)
    return [
        FeatureVector.from_pixels(project_world_points(cam, goal_world))
        for cam in scenario.active_cameras()
    ]


def _measure(
    scenario: Scenario, channel: CameraChannel, pose: RigidTransform
) -> tuple[np.ndarray, np.ndarray]:
    """True and measured pixel arrays for one camera; FeatureLost on loss."""
    world_pts = transform_points(pose, scenario.gripper_points)
    try:
        uv_true = project_world_points(channel.camera, world_pts)
    except NonPositiveDepth as exc:
        raise FeatureLost(f"gripper point at non-positive depth: {exc}") from exc
    if scenario.sensor_rect is not None:
        for u, v in uv_true:
            if not visible(ImagePoint(u, v), scenario.sensor_rect):
                raise FeatureLost(
                    f"gripper point ({u:.1f}, {v:.1f}) px left the sensor rectangle"
                )
    uv_meas = add_pixel_noise_array(uv_true, scenario.noise_px, channel.rng)
    return uv_true, uv_meas


def _perturbed_init(scenario: Scenario, true_cam_pose: RigidTransform, gen) -> RigidTransform:
    """First-frame pose seed: ground truth with configurable perturbation."""
    if scenario.pose_init_rot_noise_rad == 0.0 and scenario.pose_init_trans_noise_m == 0.0:
        return true_cam_pose
    axis = gen.normal(size=3)
    axis /= np.linalg.norm(axis)
    rot = rotation_exp(axis * scenario.pose_init_rot_noise_rad)
    dt_vec = gen.normal(size=3)
    dt_vec *= scenario.pose_init_trans_noise_m / np.linalg.norm(dt_vec)
    return RigidTransform(rot @ true_cam_pose.rotation, true_cam_pose.translation + dt_vec)


def _camera_jacobian(
    scenario: Scenario, channel: CameraChannel, gripper_cam_pose: RigidTransform
) -> np.ndarray:
    pts_cam = transform_points(gripper_cam_pose, scenario.gripper_points)
    blocks = [
        point_jacobian(interaction_matrix(channel.camera.intrinsics, p), channel.theta)
        for p in pts_cam
    ]
    return np.vstack(blocks)


def init_servo(scenario: Scenario) -> ServoState:
    """Step-0 setup: initial pose estimates, frozen thetas, constant Jacobians."""
    pose0 = scenario.initial_gripper_pose
    init_gen = rngmod.stream(scenario.seed, "servo/pose_init")
    channels = []
    for i, cam in enumerate(scenario.active_cameras()):
        channel = CameraChannel(
            camera=cam,
            theta=ScrewTransform(np.eye(6)),  # placeholder until estimated below
            warm=None,
            jac_const=None,
            rng=rngmod.stream(scenario.seed, f"servo/measure/cam{i}"),
        )
        _, uv_meas = _measure(scenario, channel, pose0)
        true_cam_pose = compose(cam.extrinsics, pose0)
        est = estimate_pose(
            make_correspondences(uv_meas, scenario.gripper_points),
            cam.intrinsics,
            init=_perturbed_init(scenario, true_cam_pose, init_gen),
            tol=_POSE_TOL_PX,
            max_iter=_POSE_MAX_ITER,
        )
        theta = screw_transform(est.pose)
        jac_const = None
        if scenario.jacobian_mode == "constant":
            goal_cam_pose = compose(cam.extrinsics, scenario.resolved_goal_pose())
            jac_const = _camera_jacobian(
                scenario, dc_replace(channel, theta=theta), goal_cam_pose
            )
        channels.append(dc_replace(channel, theta=theta, warm=est, jac_const=jac_const))
    return ServoState(
        pose=pose0,
        time_s=0.0,
        step=0,
        channels=tuple(channels),
        theta_world=screw_transform(pose0),
        rng_actuator=rngmod.stream(scenario.seed, "servo/actuator"),
    )


def servo_step(
    scenario: Scenario, state: ServoState, s_star
) -> tuple[VelocityScrew, ServoState, TraceRow]:
    """One control cycle.

    ``s_star`` is one FeatureVector per active camera (a bare FeatureVector is
    accepted for single-camera runs). When the measured image error is already
    below the convergence threshold the zero screw is returned and the pose is
    left untouched.
    """
    if isinstance(s_star, FeatureVector):
        s_star = [s_star]
    if len(s_star) != len(state.channels):
        raise ScenarioError("need one set-point per active camera")

    jac_blocks = []
    s_parts = []
    star_parts = []
    new_channels = []
    pose_rms = float("nan")
    pose_iters = 0
    ms_pose = 0.0
    ms_jac = 0.0
    for channel, star in zip(state.channels, s_star):
        _, uv_meas = _measure(scenario, channel, state.pose)
        s_parts.append(uv_meas.reshape(-1))
        star_parts.append(star.coords)
        if scenario.jacobian_mode == "variable":
            t0 = time.perf_counter()
            est = estimate_pose(
                make_correspondences(uv_meas, scenario.gripper_points),
                channel.camera.intrinsics,
                init=pose_warm_start(channel.warm),
                tol=_POSE_TOL_PX,
                max_iter=_POSE_MAX_ITER,
            )
            t1 = time.perf_counter()
            jac_cam = _camera_jacobian(scenario, channel, est.pose)
            t2 = time.perf_counter()
            ms_pose += (t1 - t0) * 1e3
            ms_jac += (t2 - t1) * 1e3
            if np.isnan(pose_rms):
                pose_rms = est.rms_reprojection
                pose_iters = est.iterations
            new_channels.append(dc_replace(channel, warm=est))
        else:
            jac_cam = channel.jac_const
            new_channels.append(channel)
        jac_blocks.append(jac_cam)

    s_all = FeatureVector(np.concatenate(s_parts))
    star_all = FeatureVector(np.concatenate(star_parts))
    error_px = float(np.linalg.norm(star_all.coords - s_all.coords))

    if error_px < scenario.convergence_eps:
        row = TraceRow(
            step=state.step,
            time_s=state.time_s,
            error_px=error_px,
            screw=VelocityScrew.zero(),
            pose=state.pose,
            pose_rms_px=pose_rms,
            pose_iterations=pose_iters,
            ms_pose=ms_pose,
            ms_jacobian=ms_jac,
            ms_control=0.0,
        )
        return VelocityScrew.zero(), dc_replace(state, channels=tuple(new_channels)), row

    stacked = np.vstack(jac_blocks)
    jac = ImageJacobian(stacked, stacked.shape[0] // 2)
    t0 = time.perf_counter()
    screw = control_screw(jac, scenario.gains, s_all, star_all)
    ms_control = (time.perf_counter() - t0) * 1e3

    executed = screw
    if scenario.actuator_noise > 0.0:
        factors = 1.0 + state.rng_actuator.normal(0.0, scenario.actuator_noise, size=6)
        executed = VelocityScrew.from_vector(screw.as_vector() * factors)
    world_screw = state.theta_world.apply(executed)
    new_pose = integrate_screw(state.pose, world_screw, scenario.dt)

    row = TraceRow(
        step=state.step,
        time_s=state.time_s,
        error_px=error_px,
        screw=screw,
        pose=state.pose,
        pose_rms_px=pose_rms,
        pose_iterations=pose_iters,
        ms_pose=ms_pose,
        ms_jacobian=ms_jac,
        ms_control=ms_control,
    )
    new_state = dc_replace(
        state,
        pose=new_pose,
        time_s=state.time_s + scenario.dt,
        step=state.step + 1,
        channels=tuple(new_channels),
    )
    return screw, new_state, row


def _alignment_error(scenario: Scenario, pose: RigidTransform) -> float:
    """RMS distance between achieved and ideal gripper points, meters."""
    try:
        goal = scenario.resolved_goal_pose()
    except ScenarioError:
        return float("nan")
    achieved = transform_points(pose, scenario.gripper_points)
    ideal = transform_points(goal, scenario.gripper_points)
    return float(np.sqrt(np.mean(np.sum((achieved - ideal) ** 2, axis=1))))


def run_servo(scenario: Scenario, s_star=None) -> tuple[ServoTrace, GraspResult]:
    """Iterate servo_step until the image error is below threshold or steps run out.

    ``s_star`` defaults to the goal-pose projections; a grasp pipeline passes
    the transferred set-points instead.
    """
    if s_star is None:
        s_star = goal_setpoints(scenario)
    elif isinstance(s_star, FeatureVector):
        s_star = [s_star]
    state = init_servo(scenario)
    trace = ServoTrace()
    converged = False
    steps = 0
    while True:
        _, state, row = servo_step(scenario, state, s_star)
        trace.append(row)
        if row.error_px < scenario.convergence_eps:
            converged = True
            break
        steps += 1
        if steps >= scenario.max_steps:
            break
    result = GraspResult(
        converged=converged,
        final_error_px=trace.rows[-1].error_px,
        final_alignment_error_3d=_alignment_error(scenario, state.pose),
        steps=steps,
    )
    return trace, result


def run_two_camera_servo(scenario: Scenario, s_star=None) -> tuple[ServoTrace, GraspResult]:
    """Joint servoing over both runtime cameras (stacked 4n-row system)."""
    if len(scenario.runtime_rig) != 2:
        raise ScenarioError("two-camera servoing needs a two-camera runtime rig")
    from .scenario import replace as sc_replace

    return run_servo(sc_replace(scenario, cameras_used=2), s_star=s_star)
