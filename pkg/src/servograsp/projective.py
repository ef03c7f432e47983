"""Uncalibrated two-view machinery and cross-setup gripper-point transfer.

Fundamental matrix (normalized 8-point), canonical projective camera pairs,
DLT triangulation, 5-point basis changes, 4x4 homography estimation, and the
transfer that turns a learned gripper-object alignment into an image
set-point for a different, uncalibrated camera setup.

All homogeneous quantities are canonicalized (unit norm, first significant
component positive) so equality-up-to-scale can be asserted as plain
equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import ImagePoint
from .control import FeatureVector
from .errors import (
    DegenerateBasis,
    DegenerateConfiguration,
    IllConditionedTriangulation,
    InsufficientMatches,
    PointAtInfinity,
)
from .geometry import RigidTransform, skew

_SIGN_EPS = 1e-12


def _canonical(v: np.ndarray) -> np.ndarray:
    """Unit-norm vector/matrix with the first significant component positive."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot canonicalize a zero vector")
    v = v / norm
    flat = v.reshape(-1)
    for c in flat:
        if abs(c) > _SIGN_EPS:
            return -v if c < 0.0 else v
    return v


@dataclass(frozen=True)
class FundamentalMatrix:
    """3x3 rank-2 epipolar constraint matrix, unit Frobenius norm."""

    matrix: np.ndarray
    sampson_rms: float = 0.0

    def __post_init__(self):
        m = _canonical(np.asarray(self.matrix, dtype=float).reshape(3, 3))
        if abs(np.linalg.det(m)) > 1e-9:
            raise ValueError(f"fundamental matrix must be rank 2 (det {np.linalg.det(m):.3e})")
        object.__setattr__(self, "matrix", m)

    def left_epipole(self) -> np.ndarray:
        """Unit null direction of F^T (image of the first camera's center)."""
        _, _, vt = np.linalg.svd(self.matrix.T)
        return _canonical(vt[-1])


@dataclass(frozen=True)
class ProjectiveCameraPair:
    """Two 3x4 projection matrices sharing one projective reconstruction basis."""

    p_left: np.ndarray
    p_right: np.ndarray

    def __post_init__(self):
        for name in ("p_left", "p_right"):
            m = _canonical(np.asarray(getattr(self, name), dtype=float).reshape(3, 4))
            if np.linalg.svd(m, compute_uv=False)[2] < 1e-12:
                raise ValueError(f"{name} must have rank 3")
            object.__setattr__(self, name, m)


@dataclass(frozen=True)
class ProjectivePoint:
    """Homogeneous 4-vector in some projective basis, canonicalized."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _canonical(np.asarray(self.coords, dtype=float).reshape(4)))

    @classmethod
    def from_euclidean(cls, p) -> "ProjectivePoint":
        p = np.asarray(p, dtype=float).reshape(3)
        return cls(np.append(p, 1.0))


@dataclass(frozen=True)
class ProjectiveHomography:
    """Invertible 4x4 collineation of 3-D projective space, unit Frobenius norm."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _canonical(np.asarray(self.matrix, dtype=float).reshape(4, 4))
        if abs(np.linalg.det(m)) <= 1e-12:
            raise ValueError("homography must be invertible")
        object.__setattr__(self, "matrix", m)

    def apply(self, p: ProjectivePoint) -> ProjectivePoint:
        return ProjectivePoint(self.matrix @ p.coords)

    def inverse(self) -> "ProjectiveHomography":
        return ProjectiveHomography(np.linalg.inv(self.matrix))

    def after(self, other: "ProjectiveHomography") -> "ProjectiveHomography":
        return ProjectiveHomography(self.matrix @ other.matrix)


def _hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Isotropic normalization: centroid to origin, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = float(np.mean(np.linalg.norm(pts - centroid, axis=1)))
    scale = np.sqrt(2.0) / mean_dist if mean_dist > 0.0 else 1.0
    return np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )


def sampson_residuals(f: np.ndarray, left_px: np.ndarray, right_px: np.ndarray) -> np.ndarray:
    """First-order geometric (Sampson) epipolar distances in pixels."""
    left_h = np.hstack([left_px, np.ones((left_px.shape[0], 1))])
    right_h = np.hstack([right_px, np.ones((right_px.shape[0], 1))])
    fx = left_h @ f.T  # rows: F m
    ftx = right_h @ f  # rows: F^T m'
    num = np.sum(right_h * fx, axis=1)
    denom = fx[:, 0] ** 2 + fx[:, 1] ** 2 + ftx[:, 0] ** 2 + ftx[:, 1] ** 2
    return np.abs(num) / np.sqrt(np.maximum(denom, 1e-300))


def estimate_fundamental(left_px, right_px) -> FundamentalMatrix:
    """Normalized 8-point estimate with rank-2 enforcement.

    Inputs are matched (n, 2) pixel arrays; the epipolar constraint is
    m_right^T F m_left = 0.
    """
    left = np.asarray(left_px, dtype=float).reshape(-1, 2)
    right = np.asarray(right_px, dtype=float).reshape(-1, 2)
    if left.shape[0] != right.shape[0]:
        raise ValueError("match lists have different lengths")
    if left.shape[0] < 8:
        raise DegenerateConfiguration(f"need at least 8 matches, got {left.shape[0]}")
    t_left = _hartley_normalization(left)
    t_right = _hartley_normalization(right)
    ln = left @ t_left[:2, :2].T + t_left[:2, 2]
    rn = right @ t_right[:2, :2].T + t_right[:2, 2]

    a = np.empty((left.shape[0], 9))
    a[:, 0] = rn[:, 0] * ln[:, 0]
    a[:, 1] = rn[:, 0] * ln[:, 1]
    a[:, 2] = rn[:, 0]
    a[:, 3] = rn[:, 1] * ln[:, 0]
    a[:, 4] = rn[:, 1] * ln[:, 1]
    a[:, 5] = rn[:, 1]
    a[:, 6] = ln[:, 0]
    a[:, 7] = ln[:, 1]
    a[:, 8] = 1.0
    _, sv, vt = np.linalg.svd(a)
    if sv.size < 8 or sv[7] < 1e-10 * sv[0]:
        raise DegenerateConfiguration("matches do not span the epipolar constraint (rank < 8)")
    f_norm = vt[-1].reshape(3, 3)

    u, s, vt_f = np.linalg.svd(f_norm)
    f_rank2 = u @ np.diag([s[0], s[1], 0.0]) @ vt_f
    f = t_right.T @ f_rank2 @ t_left
    rms = float(np.sqrt(np.mean(sampson_residuals(f, left, right) ** 2)))
    return FundamentalMatrix(f, sampson_rms=rms)


def cameras_from_fundamental(f: FundamentalMatrix) -> ProjectiveCameraPair:
    """Canonical pair P = [I | 0], P' = [skew(e') F | e'] reproducing F up to scale."""
    e_prime = f.left_epipole()
    p_left = np.hstack([np.eye(3), np.zeros((3, 1))])
    p_right = np.hstack([skew(e_prime) @ f.matrix, e_prime.reshape(3, 1)])
    return ProjectiveCameraPair(p_left, p_right)


def fundamental_from_cameras(p_left: np.ndarray, p_right: np.ndarray) -> FundamentalMatrix:
    """F consistent with two projection matrices: [e']_x P' P^+."""
    p_left = np.asarray(p_left, dtype=float)
    p_right = np.asarray(p_right, dtype=float)
    _, _, vt = np.linalg.svd(p_left)
    center = vt[-1]
    e_prime = p_right @ center
    return FundamentalMatrix(skew(e_prime) @ p_right @ np.linalg.pinv(p_left))


def _triangulate_rows(p: np.ndarray, u: float, v: float) -> np.ndarray:
    return np.stack([u * p[2] - p[0], v * p[2] - p[1]])


def triangulate(pair: ProjectiveCameraPair, m: ImagePoint, m_prime: ImagePoint) -> ProjectivePoint:
    """Homogeneous DLT intersection of the two viewing rays."""
    design = np.vstack(
        [
            _triangulate_rows(pair.p_left, m.u, m.v),
            _triangulate_rows(pair.p_right, m_prime.u, m_prime.v),
        ]
    )
    # row scaling does not move the null space but keeps the check meaningful
    norms = np.linalg.norm(design, axis=1)
    design = design / np.maximum(norms, 1e-300)[:, None]
    _, sv, vt = np.linalg.svd(design)
    # a unique null direction needs sigma_3 >> sigma_4; otherwise the rays are
    # projectively parallel and any point of a pencil solves the system
    if sv[2] < 1e-12 * sv[0] or sv[3] > 0.99 * sv[2]:
        raise IllConditionedTriangulation(
            f"no unique null direction (singular values {sv})"
        )
    return ProjectivePoint(vt[-1])


def triangulate_points(pair: ProjectiveCameraPair, left_px, right_px) -> list[ProjectivePoint]:
    left = np.asarray(left_px, dtype=float).reshape(-1, 2)
    right = np.asarray(right_px, dtype=float).reshape(-1, 2)
    return [
        triangulate(pair, ImagePoint(*lp), ImagePoint(*rp)) for lp, rp in zip(left, right)
    ]


def basis_homography(basis) -> ProjectiveHomography:
    """Collineation sending 5 general-position points to the canonical basis.

    The canonical basis is e1..e4 plus (1,1,1,1); the i-th input maps to the
    i-th canonical point up to an individual scale.
    """
    basis = [p.coords if isinstance(p, ProjectivePoint) else _canonical(p) for p in basis]
    if len(basis) != 5:
        raise ValueError("a projective basis needs exactly 5 points")
    cols = np.stack(basis[:4], axis=1)
    if abs(np.linalg.det(cols)) < 1e-10:
        raise DegenerateBasis("the first four basis points are coplanar")
    lam = np.linalg.solve(cols, basis[4])
    if np.min(np.abs(lam)) < 1e-10:
        raise DegenerateBasis("the fifth point is coplanar with three of the others")
    try:
        return ProjectiveHomography(np.linalg.inv(cols * lam))
    except ValueError as exc:
        raise DegenerateBasis(f"basis collineation is numerically singular ({exc})") from exc


def _isotropize(pts: np.ndarray) -> np.ndarray:
    """Whitening map for unit-norm homogeneous 4-vectors (second moments -> I)."""
    m = pts.T @ pts / pts.shape[0]
    vals, vecs = np.linalg.eigh(m)
    return vecs @ np.diag(1.0 / np.sqrt(np.maximum(vals, 1e-12))) @ vecs.T


def estimate_homography_3d(source, target) -> ProjectiveHomography:
    """4x4 collineation H with target_i ~ H source_i.

    Exactly 5 generic pairs give the exact solution (one-dimensional null
    space); more pairs give the algebraic least-squares minimizer over
    unit-norm H. Both point sets are isotropically normalized before the
    DLT solve and the result is mapped back.
    """
    src = np.stack([p.coords if isinstance(p, ProjectivePoint) else _canonical(p) for p in source])
    tgt = np.stack([p.coords if isinstance(p, ProjectivePoint) else _canonical(p) for p in target])
    if src.shape[0] != tgt.shape[0]:
        raise ValueError("source and target lists have different lengths")
    n = src.shape[0]
    if n < 5:
        raise InsufficientMatches(f"need at least 5 point pairs, got {n}")
    n_src = _isotropize(src)
    n_tgt = _isotropize(tgt)
    src_n = src @ n_src.T
    tgt_n = tgt @ n_tgt.T
    # parallelism of H a and b: (H a)_i b_j - (H a)_j b_i = 0 for all i < j
    rows = []
    for a, b in zip(src_n, tgt_n):
        for i in range(4):
            for j in range(i + 1, 4):
                row = np.zeros(16)
                row[4 * i : 4 * i + 4] = b[j] * a
                row[4 * j : 4 * j + 4] = -b[i] * a
                rows.append(row)
    design = np.stack(rows)
    _, sv, vt = np.linalg.svd(design)
    if sv[14] < 1e-9 * sv[0]:
        raise DegenerateBasis("point pairs do not determine a unique collineation")
    h_norm = vt[-1].reshape(4, 4)
    try:
        return ProjectiveHomography(np.linalg.inv(n_tgt) @ h_norm @ n_src)
    except ValueError as exc:
        # 5 noisy pairs can interpolate to a numerically singular collineation
        raise DegenerateBasis(f"estimated collineation is numerically singular ({exc})") from exc


def refine_homography_3d(
    h: ProjectiveHomography,
    source_points,
    pair: ProjectiveCameraPair,
    observed_left_px,
    observed_right_px,
    max_iter: int = 10,
) -> ProjectiveHomography:
    """Least-squares refinement of a collineation against image observations.

    Gauss-Newton over vec(H) in a norm-fixed gauge, minimizing the pixel
    reprojection error of the mapped source points through both target
    cameras. A zero-residual input (noise-free data) is returned unchanged.
    """
    x = np.stack([p.coords if isinstance(p, ProjectivePoint) else _canonical(p) for p in source_points])
    cams = (pair.p_left, pair.p_right)
    obs = (
        np.asarray(observed_left_px, dtype=float).reshape(-1, 2),
        np.asarray(observed_right_px, dtype=float).reshape(-1, 2),
    )

    def residual(hvec: np.ndarray) -> np.ndarray | None:
        hm = hvec.reshape(4, 4)
        parts = []
        for p, o in zip(cams, obs):
            w = x @ hm.T @ p.T
            if np.any(np.abs(w[:, 2]) < 1e-12):
                return None  # mapped point at infinity: reject this iterate
            parts.append((w[:, :2] / w[:, 2:3] - o).reshape(-1))
        return np.concatenate(parts)

    hvec = h.matrix.reshape(-1).copy()
    res = residual(hvec)
    if res is None:
        raise PointAtInfinity("initial collineation maps a point to infinity")
    cost = float(res @ res)
    for _ in range(max_iter):
        hm = hvec.reshape(4, 4)
        rows = []
        for p, o in zip(cams, obs):
            w = x @ hm.T @ p.T
            for j in range(x.shape[0]):
                a, b, c = w[j]
                dproj = np.array([[1.0 / c, 0.0, -a / c**2], [0.0, 1.0 / c, -b / c**2]])
                rows.append(dproj @ np.kron(p, x[j]))
        jac = np.vstack(rows)
        # the overall scale of H is gauge: project it out of the step
        u = hvec / np.linalg.norm(hvec)
        jac = jac - np.outer(jac @ u, u)
        step, _, _, _ = np.linalg.lstsq(jac, -res, rcond=None)
        step = step - (step @ u) * u
        if np.linalg.norm(step) < 1e-14:
            break
        accepted = False
        scale = 1.0
        for _ in range(12):
            cand = hvec + scale * step
            cand_res = residual(cand)
            if cand_res is not None and float(cand_res @ cand_res) < cost:
                hvec, res, cost = cand, cand_res, float(cand_res @ cand_res)
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
    return ProjectiveHomography(hvec.reshape(4, 4))


def transfer_gripper_points(
    pair_x: ProjectiveCameraPair,
    gripper_left_px,
    gripper_right_px,
    h_xy: ProjectiveHomography,
    pair_y: ProjectiveCameraPair,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Carry gripper image points from setup x into setup y.

    Per gripper point: triangulate in the x reconstruction, map through the
    x->y collineation, project through both y matrices. Returns unit-norm
    homogeneous (3,) image vectors (left, right) in point order.
    """
    points_x = triangulate_points(pair_x, gripper_left_px, gripper_right_px)
    out = []
    for p in points_x:
        p_y = h_xy.apply(p)
        left_h = _canonical(pair_y.p_left @ p_y.coords)
        right_h = _canonical(pair_y.p_right @ p_y.coords)
        out.append((left_h, right_h))
    return out


def setpoint_from_transfer(points, which_camera: str) -> FeatureVector:
    """Dehomogenize transferred (left, right) image vectors into a set-point."""
    if which_camera not in ("left", "right"):
        raise ValueError("which_camera must be 'left' or 'right'")
    idx = 0 if which_camera == "left" else 1
    coords = []
    for pair in points:
        h = np.asarray(pair[idx], dtype=float).reshape(3)
        if abs(h[2]) < 1e-12:
            raise PointAtInfinity(f"homogeneous scale {h[2]:.3e} is too small")
        coords.extend([h[0] / h[2], h[1] / h[2]])
    return FeatureVector(np.array(coords))


def euclidean_to_projective(
    h_go: ProjectiveHomography, d: RigidTransform
) -> ProjectiveHomography:
    """Projective displacement conjugate to a Euclidean one: H_go D H_go^-1."""
    return ProjectiveHomography(
        h_go.matrix @ d.matrix() @ np.linalg.inv(h_go.matrix)
    )
