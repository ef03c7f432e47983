import numpy as np
import pytest

from servograsp.camera import CameraIntrinsics, project_points
from servograsp.errors import BehindCamera, DivergedPose
from servograsp.geometry import (
    RigidTransform,
    compose,
    invert,
    rotation_angle,
    rotation_exp,
    transform_points,
)
from servograsp.pose import (
    PoseEstimate,
    estimate_pose,
    make_correspondences,
    pose_warm_start,
)

K = CameraIntrinsics(1000.0, 950.0, 256.0, 256.0)

MODEL = np.array(
    [
        [0.05, 0.05, 0.0],
        [-0.05, 0.05, 0.0],
        [-0.05, -0.05, 0.0],
        [0.05, -0.05, 0.04],
        [0.0, 0.02, 0.06],
        [0.02, -0.03, -0.03],
    ]
)


def random_pose(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return RigidTransform(
        rotation_exp(axis * rng.uniform(0.0, 0.6)),
        np.array([rng.normal() * 0.1, rng.normal() * 0.1, rng.uniform(0.8, 1.5)]),
    )


def perturb(pose, rng, angle_rad, dist_m):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    shift = rng.normal(size=3)
    shift *= dist_m / np.linalg.norm(shift)
    return RigidTransform(rotation_exp(axis * angle_rad) @ pose.rotation, pose.translation + shift)


def synth_matches(pose, model=MODEL, k=K):
    uv = project_points(k, transform_points(pose, model))
    return make_correspondences(uv, model)


def pose_distance(a, b):
    rot = rotation_angle(a.rotation.T @ b.rotation)
    trans = float(np.linalg.norm(a.translation - b.translation))
    return rot, trans


class TestEstimatePose:
    def test_recovers_ground_truth_from_perturbed_init(self):
        rng = np.random.default_rng(211)
        for _ in range(20):
            truth = random_pose(rng)
            init = perturb(truth, rng, np.deg2rad(5.0), 0.05)
            est = estimate_pose(synth_matches(truth), K, init)
            assert est.converged
            rot_err, trans_err = pose_distance(est.pose, truth)
            assert rot_err < 1e-6
            assert trans_err < 1e-6

    def test_exact_init_converges_immediately(self):
        rng = np.random.default_rng(223)
        truth = random_pose(rng)
        est = estimate_pose(synth_matches(truth), K, truth)
        assert est.converged
        assert est.iterations <= 1
        assert est.rms_reprojection <= 1e-10

    def test_noisy_rms_matches_noise_level(self):
        rng = np.random.default_rng(227)
        rms_values = []
        for _ in range(100):
            truth = random_pose(rng)
            uv = project_points(K, transform_points(truth, MODEL))
            uv = uv + rng.normal(0.0, 0.5, size=uv.shape)
            init = perturb(truth, rng, np.deg2rad(3.0), 0.03)
            est = estimate_pose(make_correspondences(uv, MODEL), K, init, tol=1e-8)
            assert est.converged
            rms_values.append(est.rms_reprojection)
        med = np.median(rms_values)
        assert 0.2 <= med <= 1.0

    def test_requires_four_matches(self):
        rng = np.random.default_rng(229)
        truth = random_pose(rng)
        with pytest.raises(ValueError):
            estimate_pose(synth_matches(truth)[:3], K, truth)

    def test_init_behind_camera_raises(self):
        rng = np.random.default_rng(233)
        truth = random_pose(rng)
        bad_init = RigidTransform(truth.rotation, [0.0, 0.0, -1.0])
        with pytest.raises(BehindCamera):
            estimate_pose(synth_matches(truth), K, bad_init)

    def test_gauge_invariance(self):
        # re-parameterizing model points and init by the same rigid map must
        # shift the estimate by exactly that map
        rng = np.random.default_rng(239)
        truth = random_pose(rng)
        init = perturb(truth, rng, np.deg2rad(4.0), 0.04)
        g = random_pose(rng)
        est_a = estimate_pose(synth_matches(truth), K, init)

        model_b = transform_points(invert(g), MODEL)
        uv = project_points(K, transform_points(truth, MODEL))
        est_b = estimate_pose(
            make_correspondences(uv, model_b), K, compose(init, g)
        )
        expected = compose(est_a.pose, g)
        rot_err, trans_err = pose_distance(est_b.pose, expected)
        assert rot_err < 1e-8
        assert trans_err < 1e-8

    def test_monotone_descent(self):
        # every accepted step reduces the rms; track it through tol=0 runs
        rng = np.random.default_rng(241)
        truth = random_pose(rng)
        uv = project_points(K, transform_points(truth, MODEL))
        uv = uv + rng.normal(0.0, 1.0, size=uv.shape)
        init = perturb(truth, rng, np.deg2rad(10.0), 0.1)
        rms_seq = []
        pose = init
        matches = make_correspondences(uv, MODEL)
        for _ in range(8):
            est = estimate_pose(matches, K, pose, tol=0.0, max_iter=1)
            rms_seq.append(est.rms_reprojection)
            if est.converged:
                break
            pose = est.pose
        assert all(b <= a + 1e-12 for a, b in zip(rms_seq, rms_seq[1:]))

    def test_diverged_pose_on_inconsistent_degenerate_data(self):
        # near-collinear model with wildly inconsistent measurements: the
        # minimum-norm Gauss-Newton step fails to descend
        model = np.array(
            [[0.0, 0.0, 0.0], [0.01, 0.0, 0.0], [0.02, 0.0, 0.0], [0.03, 0.0, 1e-9]]
        )
        uv = np.array([[0.0, 0.0], [500.0, 500.0], [-500.0, 250.0], [250.0, -500.0]])
        init = RigidTransform.from_rotvec([0, 0, 0], [0, 0, 1.0])
        with pytest.raises((DivergedPose, BehindCamera)):
            for _ in range(50):
                est = estimate_pose(make_correspondences(uv, model), K, init, tol=0.0)
                init = perturb(est.pose, np.random.default_rng(1), 0.5, 0.5)


class TestWarmStart:
    def test_identity_previous(self):
        est = PoseEstimate(RigidTransform.identity(), 0.0, 1, True)
        out = pose_warm_start(est)
        np.testing.assert_array_equal(out.rotation, np.eye(3))

    def test_requires_convergence(self):
        est = PoseEstimate(RigidTransform.identity(), 0.0, 5, False)
        with pytest.raises(ValueError):
            pose_warm_start(est)

    def test_cold_and_warm_agree_on_clean_data(self):
        rng = np.random.default_rng(251)
        truth = random_pose(rng)
        matches = synth_matches(truth)
        cold = estimate_pose(matches, K, perturb(truth, rng, np.deg2rad(5.0), 0.05))
        warm = estimate_pose(matches, K, pose_warm_start(cold))
        rot_err, trans_err = pose_distance(cold.pose, warm.pose)
        assert rot_err < 1e-8
        assert trans_err < 1e-8

    def test_warm_started_chain_iterates_quickly(self):
        # simulate a 10 Hz motion: gently moving target, warm-started each frame
        rng = np.random.default_rng(257)
        pose = random_pose(rng)
        est = estimate_pose(synth_matches(pose), K, perturb(pose, rng, 0.05, 0.05))
        for _ in range(20):
            drift = RigidTransform.from_rotvec(
                0.005 * rng.normal(size=3), 0.002 * rng.normal(size=3)
            )
            pose = compose(drift, pose)
            est = estimate_pose(synth_matches(pose), K, pose_warm_start(est))
            assert est.converged
            assert est.iterations <= 5
