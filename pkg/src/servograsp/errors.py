"""Exception hierarchy shared by all modules."""


class ServograspError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveDepth(ServograspError):
    """A 3-D point lies behind or on the camera plane (z <= 1e-9 m)."""


class SingularJacobian(ServograspError):
    """The weighted normal matrix of the image Jacobian is numerically singular."""


class DivergedPose(ServograspError):
    """Pose refinement could not find a step that reduces the reprojection error."""


class BehindCamera(ServograspError):
    """A pose iterate places a model point at non-positive depth and backtracking failed."""


class DegenerateConfiguration(ServograspError):
    """Point matches do not constrain the epipolar geometry (design rank < 8)."""


class IllConditionedTriangulation(ServograspError):
    """The triangulation system has no unique null direction (projectively parallel rays)."""


class DegenerateBasis(ServograspError):
    """Five-point projective basis with a coplanar 4-subset, or an unconstrained homography fit."""


class InsufficientMatches(ServograspError):
    """Fewer correspondences than the estimator minimally requires."""


class PointAtInfinity(ServograspError):
    """A homogeneous image point has (near-)zero scale and cannot be dehomogenized."""


class FeatureLost(ServograspError):
    """A tracked gripper point left the sensor rectangle or moved behind the camera."""


class ScenarioError(ServograspError):
    """A scenario file or scenario object violates its invariants."""
