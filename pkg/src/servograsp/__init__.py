"""Visual servoing with an independent camera and projective grasp transfer.

Library layout:

- ``geometry``: rigid transforms, velocity screws, screw-frame changes
- ``camera``: pin-hole projection and synthetic observations
- ``control``: interaction matrix, image Jacobian, control law
- ``pose``: 2-D/3-D pose estimation (Gauss-Newton)
- ``projective``: uncalibrated two-view reconstruction and point transfer
- ``servo_sim``: scenarios, the closed-loop simulation, the grasp pipeline
- ``cli`` / ``report``: command-line front end, summaries, and figures
"""

__version__ = "0.1.0"
