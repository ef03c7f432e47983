import numpy as np
import pytest

from servograsp.camera import (
    CameraIntrinsics,
    CameraPose,
    ImagePoint,
    add_pixel_noise,
    add_pixel_noise_array,
    euclidean_projection_matrix,
    project,
    project_points,
    project_world,
    visible,
)
from servograsp.errors import NonPositiveDepth
from servograsp.geometry import RigidTransform, rotation_exp, transform_point

K_WIDE = CameraIntrinsics(1500.0, 1000.0, 256.0, 256.0)


def random_camera(rng):
    # camera looking roughly down +z with points kept in front of it
    return CameraPose(
        RigidTransform(rotation_exp(0.1 * rng.normal(size=3)), rng.normal(size=3) * 0.2),
        CameraIntrinsics(
            rng.uniform(500, 2000), rng.uniform(500, 2000), rng.uniform(200, 300), rng.uniform(200, 300)
        ),
    )


class TestProject:
    def test_on_axis_point_hits_principal_point(self):
        p = project(K_WIDE, (0.0, 0.0, 1.0))
        assert (p.u, p.v) == (256.0, 256.0)

    def test_direct_substitution(self):
        p = project(K_WIDE, (0.1, 0.1, 1.0))
        assert (p.u, p.v) == (406.0, 356.0)

    def test_zero_depth_raises(self):
        with pytest.raises(NonPositiveDepth):
            project(K_WIDE, (0.0, 0.0, 0.0))

    def test_negative_depth_raises(self):
        with pytest.raises(NonPositiveDepth):
            project(K_WIDE, (0.1, 0.1, -1.0))

    def test_scale_invariance_of_direction(self):
        # projection depends only on the ray direction
        a = project(K_WIDE, (0.2, -0.1, 2.0))
        b = project(K_WIDE, (0.5, -0.25, 5.0))
        np.testing.assert_allclose([a.u, a.v], [b.u, b.v], atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        pts = np.column_stack(
            [rng.normal(size=8) * 0.2, rng.normal(size=8) * 0.2, rng.uniform(0.5, 3.0, size=8)]
        )
        uv = project_points(K_WIDE, pts)
        for i in range(8):
            single = project(K_WIDE, pts[i])
            np.testing.assert_array_equal(uv[i], [single.u, single.v])

    def test_intrinsics_require_positive_focals(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(-1.0, 1000.0, 0.0, 0.0)


class TestProjectionMatrix:
    def test_identity_extrinsics_reproduces_principal_point(self):
        cam = CameraPose(RigidTransform.identity(), K_WIDE)
        m = euclidean_projection_matrix(cam)
        np.testing.assert_array_equal(m[:, 3], np.zeros(3))
        uvw = m @ np.array([0.0, 0.0, 1.0, 1.0])
        np.testing.assert_allclose(uvw[:2] / uvw[2], [256.0, 256.0])

    def test_two_route_consistency(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            cam = random_camera(rng)
            p_world = np.array([rng.normal() * 0.3, rng.normal() * 0.3, rng.uniform(0.8, 3.0)])
            uvw = euclidean_projection_matrix(cam) @ np.append(p_world, 1.0)
            direct = project_world(cam, p_world)
            np.testing.assert_allclose(uvw[:2] / uvw[2], [direct.u, direct.v], atol=1e-9)

    def test_matrix_scale_invariance(self):
        cam = CameraPose(RigidTransform.identity(), K_WIDE)
        m = euclidean_projection_matrix(cam)
        x = np.array([0.2, 0.1, 1.4, 1.0])
        a = (m @ x)[:2] / (m @ x)[2]
        b = (5.0 * m @ x)[:2] / (5.0 * m @ x)[2]
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_homogeneous_point_scale_invariance(self):
        cam = CameraPose(RigidTransform.identity(), K_WIDE)
        m = euclidean_projection_matrix(cam)
        x = np.array([0.2, 0.1, 1.4, 1.0])
        a = (m @ x)[:2] / (m @ x)[2]
        b = (m @ (3.0 * x))[:2] / (m @ (3.0 * x))[2]
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestPixelNoise:
    def test_zero_sigma_is_identity(self):
        p = ImagePoint(12.5, -3.0)
        q = add_pixel_noise(p, 0.0, 123)
        assert (q.u, q.v) == (p.u, p.v)

    def test_fixed_seed_is_bit_exact(self):
        p = ImagePoint(100.0, 200.0)
        a = add_pixel_noise(p, 0.5, 42)
        b = add_pixel_noise(p, 0.5, 42)
        assert (a.u, a.v) == (b.u, b.v)
        assert (a.u, a.v) != (p.u, p.v)

    def test_sample_std(self):
        rng = np.random.default_rng(99)
        uv = add_pixel_noise_array(np.zeros((100_000, 2)), 0.5, rng)
        std = uv.std(axis=0)
        assert np.all(std > 0.49) and np.all(std < 0.51)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            add_pixel_noise(ImagePoint(0, 0), -0.1, 0)


class TestVisibility:
    def test_inside_and_outside(self):
        rect = (0.0, 0.0, 512.0, 512.0)
        assert visible(ImagePoint(256, 256), rect)
        assert visible(ImagePoint(0, 512), rect)
        assert not visible(ImagePoint(-1, 256), rect)
        assert not visible(ImagePoint(256, 513), rect)

    def test_projection_not_clipped(self):
        # projection itself never enforces bounds
        p = project(K_WIDE, (10.0, 10.0, 1.0))
        assert p.u > 512.0 and p.v > 512.0


def test_image_point_requires_finite():
    with pytest.raises(ValueError):
        ImagePoint(float("nan"), 0.0)


def test_project_world_equals_manual_chain():
    rng = np.random.default_rng(21)
    cam = random_camera(rng)
    p = np.array([0.1, -0.05, 1.5])
    manual = project(cam.intrinsics, transform_point(cam.extrinsics, p))
    direct = project_world(cam, p)
    assert (manual.u, manual.v) == (direct.u, direct.v)
