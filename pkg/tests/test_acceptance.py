"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import time

import numpy as np
from servograsp.camera import CameraIntrinsics, CameraPose, project, project_world_points
from servograsp.control import (
    interaction_matrix,
    pixel_sensitivity,
    point_jacobian,
)
from servograsp.geometry import (
    RigidTransform,
    VelocityScrew,
    compose,
    integrate_screw,
    rotation_angle,
    rotation_exp,
    screw_transform,
    transform_point,
    transform_points,
)
from servograsp.pose import estimate_pose, make_correspondences
from servograsp.projective import (
    ProjectiveHomography,
    ProjectivePoint,
    basis_homography,
    cameras_from_fundamental,
    estimate_fundamental,
    estimate_homography_3d,
    euclidean_to_projective,
    triangulate_points,
)
from servograsp.servo_sim import (
    fit_log_error,
    load_bundled,
    plan_and_transfer,
    replace,
    run_grasp_pipeline_detailed,
    run_servo,
    setpoint_transfer_error,
    time_to_half_error,
)


def report(number: int, elapsed: float, limit: float, detail: str):
    print(f"ACCEPTANCE {number:2d} PASS ({elapsed:5.2f}s < {limit:g}s) {detail}")
    assert elapsed < limit


def test_criterion_1_jacobian_vs_finite_differences():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    h = 1e-6
    worst = 0.0
    checked = 0
    while checked < 1000:
        k = CameraIntrinsics(
            rng.uniform(400, 2000), rng.uniform(400, 2000),
            rng.uniform(100, 400), rng.uniform(100, 400),
        )
        cam_from_grip = RigidTransform(
            rotation_exp(0.5 * rng.normal(size=3)),
            np.array([rng.normal() * 0.2, rng.normal() * 0.2, rng.uniform(0.8, 2.0)]),
        )
        b_g = rng.normal(size=3) * 0.1
        if transform_point(cam_from_grip, b_g)[2] < 0.3:
            continue
        screw_g = VelocityScrew(rng.normal(size=3), rng.normal(size=3))
        theta = screw_transform(cam_from_grip)
        analytic = point_jacobian(
            interaction_matrix(k, transform_point(cam_from_grip, b_g)), theta
        ) @ screw_g.as_vector()

        back = VelocityScrew(-screw_g.linear, -screw_g.angular)
        pose_p = compose(cam_from_grip, integrate_screw(RigidTransform.identity(), screw_g, h))
        pose_m = compose(cam_from_grip, integrate_screw(RigidTransform.identity(), back, h))
        uv_p = project(k, transform_point(pose_p, b_g))
        uv_m = project(k, transform_point(pose_m, b_g))
        numeric = np.array([uv_p.u - uv_m.u, uv_p.v - uv_m.v]) / (2.0 * h)
        err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), 1e-9)
        worst = max(worst, err)
        checked += 1
    assert worst <= 1e-4
    report(1, time.perf_counter() - t0, 5.0,
           f"1000 configs, worst relative error {worst:.2e} <= 1e-4")


def test_criterion_2_exponential_convergence_small_scenario():
    scenario, _ = load_bundled("small_displacement")
    t0 = time.perf_counter()
    trace, result = run_servo(scenario)
    slope, r2 = fit_log_error(trace)
    assert result.converged
    assert r2 >= 0.99
    assert abs(slope + scenario.gains.g) / scenario.gains.g <= 0.05
    report(2, time.perf_counter() - t0, 5.0,
           f"R^2 {r2:.5f} >= 0.99, slope {slope:.4f} within 5% of -g")


def test_criterion_3_constant_vs_variable_degradation():
    scenario, _ = load_bundled("large_displacement")
    t0 = time.perf_counter()
    trace_var, res_var = run_servo(scenario)
    trace_con, res_con = run_servo(replace(scenario, jacobian_mode="constant"))
    _, r2_var = fit_log_error(trace_var)
    _, r2_con = fit_log_error(trace_con)
    half_var = time_to_half_error(trace_var)
    half_con = time_to_half_error(trace_con)
    assert res_var.converged and res_con.converged
    assert half_con > half_var
    assert r2_con < r2_var
    report(3, time.perf_counter() - t0, 10.0,
           f"t_half {half_con:.2f}s > {half_var:.2f}s, R^2 {r2_con:.4f} < {r2_var:.4f}")


def test_criterion_4_transfer_exactness():
    scenario, _ = load_bundled("grasp_pipeline")
    t0 = time.perf_counter()
    outcome = plan_and_transfer(scenario, noise_px=0.0)
    worst = max(outcome.rms_error_px("left"), outcome.rms_error_px("right"))
    assert worst <= 1e-6
    report(4, time.perf_counter() - t0, 1.0,
           f"noiseless set-point error {worst:.2e} px <= 1e-6")


def test_criterion_5_setpoint_accuracy_under_noise():
    scenario, _ = load_bundled("grasp_pipeline")
    t0 = time.perf_counter()
    errs = [
        setpoint_transfer_error(scenario, seed=s, n_object_points=18, noise_px=0.5)
        for s in range(100)
    ]
    median = float(np.median(errs))
    assert median <= 1.0
    report(5, time.perf_counter() - t0, 30.0,
           f"median set-point RMS {median:.3f} px <= 1.0 (100 seeds, 0.5 px noise)")


def test_criterion_6_sensitivity_formula():
    t0 = time.perf_counter()
    k = CameraIntrinsics(1000.0, 1000.0, 256.0, 256.0)
    du = pixel_sensitivity(k, (0.1, 0.0, 1.0), 5e-4, 5e-4)
    assert du == 0.45
    report(6, time.perf_counter() - t0, 1.0, "du(0.1 m, 1 m, 0.5 mm) = 0.45 px exactly")


def test_criterion_7_view_invariance():
    scenario, _ = load_bundled("grasp_pipeline")
    deep = replace(scenario, convergence_eps=1e-5, max_steps=1500, sensor_rect=None)
    t0 = time.perf_counter()
    _, res_a, _ = run_grasp_pipeline_detailed(deep)

    def modified(cam, nudge):
        k = cam.intrinsics
        return CameraPose(
            compose(nudge, cam.extrinsics),
            CameraIntrinsics(1.3 * k.alpha_u, 1.3 * k.alpha_v, k.u0, k.v0),
        )

    nudges = (
        RigidTransform(rotation_exp([0.02, -0.03, 0.01]), [0.03, -0.02, 0.04]),
        RigidTransform(rotation_exp([-0.015, 0.02, -0.01]), [-0.04, 0.03, 0.02]),
    )
    rig_b = tuple(modified(c, n) for c, n in zip(deep.runtime_rig, nudges))
    _, res_b, _ = run_grasp_pipeline_detailed(replace(deep, runtime_rig=rig_b))
    delta = abs(res_a.final_alignment_error_3d - res_b.final_alignment_error_3d)
    assert delta <= 1e-6
    report(7, time.perf_counter() - t0, 5.0,
           f"alignment error change {delta:.2e} m <= 1e-6 under x1.3 zoom + relocation")


def test_criterion_8_conjugation_identity():
    rng = np.random.default_rng(1008)
    t0 = time.perf_counter()
    for _ in range(100):
        h_go = ProjectiveHomography(rng.normal(size=(4, 4)))
        d = RigidTransform(rotation_exp(rng.normal(size=3)), rng.normal(size=3))
        h = euclidean_to_projective(h_go, d)
        p = rng.normal(size=3)
        lhs = h.apply(h_go.apply(ProjectivePoint.from_euclidean(p)))
        rhs = h_go.apply(ProjectivePoint.from_euclidean(transform_point(d, p)))
        assert np.max(np.abs(lhs.coords - rhs.coords)) <= 1e-9
    report(8, time.perf_counter() - t0, 1.0,
           "100 random (H_go, D): conjugate action matches within 1e-9 up to scale")


def test_criterion_9_pose_solver():
    rng = np.random.default_rng(1009)
    k = CameraIntrinsics(1000.0, 950.0, 256.0, 256.0)
    model = np.array(
        [
            [0.05, 0.05, 0.0], [-0.05, 0.05, 0.0], [-0.05, -0.05, 0.0],
            [0.05, -0.05, 0.04], [0.0, 0.02, 0.06], [0.02, -0.03, -0.03],
        ]
    )
    t0 = time.perf_counter()
    worst_rot, worst_trans, worst_iters = 0.0, 0.0, 0
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        truth = RigidTransform(
            rotation_exp(axis * rng.uniform(0.0, 0.6)),
            np.array([rng.normal() * 0.1, rng.normal() * 0.1, rng.uniform(0.8, 1.5)]),
        )
        uv = project_world_points(CameraPose(truth, k), model)  # truth as extrinsics
        d_axis = rng.normal(size=3)
        d_axis /= np.linalg.norm(d_axis)
        shift = rng.normal(size=3)
        shift *= 0.05 / np.linalg.norm(shift)
        init = RigidTransform(
            rotation_exp(d_axis * np.deg2rad(5.0)) @ truth.rotation,
            truth.translation + shift,
        )
        est = estimate_pose(make_correspondences(uv, model), k, init)
        assert est.converged and est.iterations <= 20
        rot_err = rotation_angle(est.pose.rotation.T @ truth.rotation)
        trans_err = float(np.linalg.norm(est.pose.translation - truth.translation))
        assert rot_err <= 1e-6 and trans_err <= 1e-6
        worst_rot = max(worst_rot, rot_err)
        worst_trans = max(worst_trans, trans_err)
        worst_iters = max(worst_iters, est.iterations)
    report(9, time.perf_counter() - t0, 5.0,
           f"100/100 recovered (worst {worst_rot:.1e} rad, {worst_trans:.1e} m, "
           f"{worst_iters} iters)")


def test_criterion_10_two_route_homography_equality():
    scenario, _ = load_bundled("grasp_pipeline")
    t0 = time.perf_counter()
    obj = scenario.object_points
    obj_run = transform_points(scenario.object_motion, obj)
    cam_xl, cam_xr = scenario.planning_rig
    cam_yl, cam_yr = scenario.runtime_rig
    pair_x = cameras_from_fundamental(
        estimate_fundamental(project_world_points(cam_xl, obj), project_world_points(cam_xr, obj))
    )
    pair_y = cameras_from_fundamental(
        estimate_fundamental(
            project_world_points(cam_yl, obj_run), project_world_points(cam_yr, obj_run)
        )
    )
    points_x = triangulate_points(
        pair_x, project_world_points(cam_xl, obj), project_world_points(cam_xr, obj)
    )
    points_y = triangulate_points(
        pair_y, project_world_points(cam_yl, obj_run), project_world_points(cam_yr, obj_run)
    )
    direct = estimate_homography_3d(points_x, points_y)
    idx = scenario.basis_indices
    h_xo = basis_homography([points_x[i] for i in idx])
    h_yo = basis_homography([points_y[i] for i in idx])
    composed = h_yo.inverse().after(h_xo)
    worst = float(np.max(np.abs(composed.matrix - direct.matrix)))
    assert worst <= 1e-8
    report(10, time.perf_counter() - t0, 1.0,
           f"(H_yo)^-1 H_xo vs direct estimate: max deviation {worst:.2e} <= 1e-8")
