"""Rigid-body geometry for 4-DOF tool-to-trajectory alignment.

Decomposes the mismatch between a tracked tool pose and a planned
trajectory into two translational errors on the entry plane (e_x, e_y,
millimeters) and two angular errors on the axial and sagittal projection
planes (e_phi, e_delta, degrees), plus the composite distances d and
theta that drive phase transitions. Also provides the pivot-calibration
and landmark-registration solvers that place tool and plan in a common
frame.

Conventions:
  * quaternions are (w, x, y, z), unit norm;
  * the tool's pointing axis is the tool-frame +Z axis rotated by the
    pose quaternion into world coordinates;
  * e_x is positive toward +X_a (lateral), e_y toward +Y_a (cranial);
    e_phi/e_delta are signed by the right-hand rule about the projection
    plane normals (Z_a and X_a respectively).

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9
# An axis within this angle (radians) of an entry-plane normal cannot be
# projected onto the plane to define a basis direction.
PARALLEL_TOL = 1e-6


class ProjectionDegenerateError(ValueError):
    """An axis projects to (numerically) zero length on a required plane."""


class IllConditionedError(ValueError):
    """Pivot system is rank deficient: not enough orientation variation."""


class CollinearPointsError(ValueError):
    """Landmark set spans fewer than two dimensions."""


# ---------------------------------------------------------------------------
# quaternion helpers
# ---------------------------------------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q (tool-frame -> world)."""
    w = q[0]
    u = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    # v' = v + 2w (u x v) + 2 u x (u x v)
    uv = np.cross(u, v)
    return v + 2.0 * w * uv + 2.0 * np.cross(u, uv)


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle_rad
    return np.concatenate(([math.cos(half)], math.sin(half) * axis / n))


def quat_from_rotvec(vec) -> np.ndarray:
    """Quaternion for a rotation vector (axis scaled by angle, radians)."""
    vec = np.asarray(vec, dtype=float)
    angle = np.linalg.norm(vec)
    if angle < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return quat_from_axis_angle(vec, angle)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m) -> np.ndarray:
    """Unit quaternion for a proper rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def quat_pointing(axis) -> np.ndarray:
    """Minimal rotation taking the tool +Z axis onto `axis` (unit input
    not required). Roll about the pointing axis is left at zero."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("pointing axis must be nonzero")
    axis = axis / n
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, axis))
    if c > 1.0 - 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if c < -1.0 + 1e-12:
        return np.array([0.0, 1.0, 0.0, 0.0])  # 180 deg about X
    return quat_from_axis_angle(np.cross(z, axis), math.acos(c))


def quat_slerp(a, b, u: float) -> np.ndarray:
    """Spherical interpolation between unit quaternions, u in [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(np.dot(a, b))
    if dot < 0.0:  # take the short arc
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        return quat_normalize(a + u * (b - a))
    omega = math.acos(min(dot, 1.0))
    so = math.sin(omega)
    return (math.sin((1.0 - u) * omega) * a + math.sin(u * omega) * b) / so


def _as_unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must be unit length (|v|-1 within {UNIT_TOL})")
    return v


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pose:
    """Tracked tool pose: tip position (mm) and orientation quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        ori = np.asarray(self.orientation, dtype=float)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError("position must be a finite 3-vector")
        if ori.shape != (4,):
            raise ValueError("orientation must be a quaternion (w, x, y, z)")
        if abs(np.linalg.norm(ori) - 1.0) > UNIT_TOL:
            raise ValueError("orientation quaternion must be unit norm")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ori)

    @property
    def axis(self) -> np.ndarray:
        """Pointing axis in world coordinates (tool-frame +Z rotated)."""
        return quat_rotate(self.orientation, np.array([0.0, 0.0, 1.0]))


@dataclass(frozen=True)
class PlannedTrajectory:
    """Planned screw axis: entry point (mm) and unit direction into the bone."""

    entry_point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        ep = np.asarray(self.entry_point, dtype=float)
        if ep.shape != (3,) or not np.all(np.isfinite(ep)):
            raise ValueError("entry_point must be a finite 3-vector")
        object.__setattr__(self, "entry_point", ep)
        object.__setattr__(self, "direction", _as_unit(self.direction, "direction"))


@dataclass(frozen=True)
class AnatomicalFrame:
    """Constant session frame: X lateral, Y cranial, Z anteroposterior."""

    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        if origin.shape != (3,) or not np.all(np.isfinite(origin)):
            raise ValueError("origin must be a finite 3-vector")
        x = _as_unit(self.x_axis, "x_axis")
        y = _as_unit(self.y_axis, "y_axis")
        z = _as_unit(self.z_axis, "z_axis")
        if (abs(np.dot(x, y)) > UNIT_TOL or abs(np.dot(y, z)) > UNIT_TOL
                or abs(np.dot(x, z)) > UNIT_TOL):
            raise ValueError("axes must be mutually orthogonal")
        if np.linalg.norm(np.cross(x, y) - z) > 1e-8:
            raise ValueError("axes must form a right-handed triad (x cross y = z)")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "x_axis", x)
        object.__setattr__(self, "y_axis", y)
        object.__setattr__(self, "z_axis", z)

    @classmethod
    def identity(cls) -> "AnatomicalFrame":
        return cls(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                   np.array([0, 0, 1.0]))


@dataclass(frozen=True)
class EntryPlane:
    """Entry-point plane: normal along the planned direction, centered on
    the planned entry point, with an in-plane basis keeping e_x lateral."""

    center: np.ndarray
    normal: np.ndarray
    in_plane_x: np.ndarray
    in_plane_y: np.ndarray
    fallback_axis: bool = False

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        n = _as_unit(self.normal, "normal")
        x = _as_unit(self.in_plane_x, "in_plane_x")
        y = _as_unit(self.in_plane_y, "in_plane_y")
        if (abs(np.dot(x, y)) > UNIT_TOL or abs(np.dot(x, n)) > UNIT_TOL
                or abs(np.dot(y, n)) > UNIT_TOL):
            raise ValueError("plane basis must be orthonormal")
        if np.linalg.norm(np.cross(x, y) - n) > 1e-8:
            raise ValueError("plane basis must be right-handed (x cross y = normal)")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "in_plane_x", x)
        object.__setattr__(self, "in_plane_y", y)


@dataclass(frozen=True)
class ErrorVector:
    """4-DOF error plus composites: d = hypot(e_x, e_y), theta = 3D angle.

    NaN components are representable (they mark an upstream fault and are
    rejected by the state machine); invariants are checked on finite values.
    """

    e_x: float
    e_y: float
    e_phi: float
    e_delta: float
    d: float
    theta: float

    def __post_init__(self):
        if all(math.isfinite(v) for v in (self.e_x, self.e_y, self.d)):
            if abs(self.d - math.hypot(self.e_x, self.e_y)) > UNIT_TOL:
                raise ValueError("d must equal hypot(e_x, e_y)")
            if self.d < 0:
                raise ValueError("d must be nonnegative")
        if math.isfinite(self.theta) and self.theta < 0:
            raise ValueError("theta must be nonnegative")

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in
                   (self.e_x, self.e_y, self.e_phi, self.e_delta, self.d, self.theta))


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (unit quaternion) followed by translation, in mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        tr = np.asarray(self.translation, dtype=float)
        if rot.shape != (4,) or abs(np.linalg.norm(rot) - 1.0) > UNIT_TOL:
            raise ValueError("rotation must be a unit quaternion")
        if tr.shape != (3,) or not np.all(np.isfinite(tr)):
            raise ValueError("translation must be a finite 3-vector")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.array([1.0, 0, 0, 0]), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        r = quat_to_matrix(self.rotation)
        return pts @ r.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self o other)(p) = self(other(p))."""
        rot = quat_normalize(quat_multiply(self.rotation, other.rotation))
        tr = quat_rotate(self.rotation, other.translation) + self.translation
        return RigidTransform(rot, tr)

    def inverse(self) -> "RigidTransform":
        inv = quat_conjugate(self.rotation)
        return RigidTransform(quat_normalize(inv), -quat_rotate(inv, self.translation))


# ---------------------------------------------------------------------------
# error decomposition
# ---------------------------------------------------------------------------

def make_entry_plane(target: PlannedTrajectory, frame: AnatomicalFrame) -> EntryPlane:
    """Build the entry plane for a planned trajectory.

    The plane normal is the planned direction and the center the planned
    entry point. in_plane_x is the anatomical X axis projected onto the
    plane so e_x stays mediolateral; when the direction is parallel to
    X_a within PARALLEL_TOL radians the Y axis is projected instead and
    the plane is flagged `fallback_axis`.
    """
    n = target.direction
    fallback = False
    proj = frame.x_axis - np.dot(frame.x_axis, n) * n
    if np.linalg.norm(proj) < PARALLEL_TOL:
        proj = frame.y_axis - np.dot(frame.y_axis, n) * n
        fallback = True
    x = proj / np.linalg.norm(proj)
    y = np.cross(n, x)
    return EntryPlane(target.entry_point, n, x, y, fallback_axis=fallback)


def entry_error(tool: Pose, plane: EntryPlane) -> tuple[float, float, float]:
    """In-plane offsets (e_x, e_y) of the projected tool tip plus d.

    Displacement of the tip along the plane normal does not affect the
    result: only the projection onto the plane is measured.
    """
    v = tool.position - plane.center
    e_x = float(np.dot(v, plane.in_plane_x))
    e_y = float(np.dot(v, plane.in_plane_y))
    return e_x, e_y, math.hypot(e_x, e_y)


def _signed_plane_angle(ref2, vec2) -> float:
    """Signed angle (deg) from ref2 to vec2 in a plane's 2D coordinates."""
    cross = ref2[0] * vec2[1] - ref2[1] * vec2[0]
    dot = ref2[0] * vec2[0] + ref2[1] * vec2[1]
    return math.degrees(math.atan2(cross, dot))


def angular_error(tool: Pose, target: PlannedTrajectory,
                  frame: AnatomicalFrame) -> tuple[float, float, float]:
    """Angular mismatch (e_phi, e_delta, theta) in degrees.

    e_phi is the signed angle between the projections of the tool and
    target axes on the plane spanned by (X_a, Y_a), right-hand rule about
    Z_a; e_delta likewise on (Y_a, Z_a) about X_a; theta is the full 3D
    angle between the axes.

    Raises ProjectionDegenerateError when either axis projects to less
    than 1e-6 length on a required plane.
    """
    a = tool.axis
    b = target.direction
    ac = np.array([np.dot(a, frame.x_axis), np.dot(a, frame.y_axis),
                   np.dot(a, frame.z_axis)])
    bc = np.array([np.dot(b, frame.x_axis), np.dot(b, frame.y_axis),
                   np.dot(b, frame.z_axis)])

    pa, pb = ac[:2], bc[:2]          # axial plane: (X_a, Y_a), normal Z_a
    qa, qb = ac[1:], bc[1:]          # sagittal plane: (Y_a, Z_a), normal X_a
    for name, v in (("axial/tool", pa), ("axial/target", pb),
                    ("sagittal/tool", qa), ("sagittal/target", qb)):
        if math.hypot(*v) < 1e-6:
            raise ProjectionDegenerateError(
                f"{name} axis projects to near-zero length on its plane")

    e_phi = _signed_plane_angle(pb, pa)
    e_delta = _signed_plane_angle(qb, qa)
    theta = math.degrees(math.acos(min(1.0, max(-1.0, float(np.dot(a, b))))))
    return e_phi, e_delta, theta


def error_vector(tool: Pose, target: PlannedTrajectory, frame: AnatomicalFrame,
                 plane: EntryPlane | None = None) -> ErrorVector:
    """Full 4-DOF error between a tool pose and a planned trajectory."""
    if plane is None:
        plane = make_entry_plane(target, frame)
    e_x, e_y, d = entry_error(tool, plane)
    e_phi, e_delta, theta = angular_error(tool, target, frame)
    return ErrorVector(e_x, e_y, e_phi, e_delta, d, theta)


# ---------------------------------------------------------------------------
# calibration and registration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PivotResult:
    tip_offset: np.ndarray      # tool-frame, mm
    pivot_point: np.ndarray     # world, mm
    rms_residual: float         # per-component RMS, mm


def pivot_calibrate(poses) -> PivotResult:
    """Least-squares tool-tip offset from poses pivoting about a fixed point.

    Solves R_i * t + p_i = pivot for all poses (stacked 3n x 6 system).
    Needs at least 10 poses with substantial orientation variation
    (>= ~30 degrees of spread keeps the system well conditioned).

    Raises IllConditionedError when the stacked system's condition number
    exceeds 1e6 (insufficient rotation).
    """
    poses = list(poses)
    if len(poses) < 10:
        raise ValueError(f"pivot calibration needs >= 10 poses, got {len(poses)}")
    n = len(poses)
    a = np.zeros((3 * n, 6))
    b = np.zeros(3 * n)
    for i, pose in enumerate(poses):
        a[3 * i:3 * i + 3, :3] = quat_to_matrix(pose.orientation)
        a[3 * i:3 * i + 3, 3:] = -np.eye(3)
        b[3 * i:3 * i + 3] = -pose.position
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e6:
        raise IllConditionedError(
            f"pivot system condition number {cond:.3g} > 1e6; "
            "poses have insufficient orientation variation")
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    rms = float(np.linalg.norm(a @ x - b) / math.sqrt(3 * n))
    return PivotResult(tip_offset=x[:3], pivot_point=x[3:], rms_residual=rms)


def register_landmarks(source, target) -> tuple[RigidTransform, float]:
    """Closed-form rigid registration (orthogonal Procrustes, no scale).

    Returns the transform minimizing sum |T(s_i) - t_i|^2 and the fiducial
    registration error as RMS over point residual norms.

    Raises CollinearPointsError when the centered source points span
    fewer than two dimensions.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.ndim != 2 or src.shape[1] != 3 or src.shape != tgt.shape:
        raise ValueError("source and target must be matching (n, 3) arrays")
    if src.shape[0] < 3:
        raise ValueError("registration needs at least 3 point pairs")

    c_src = src.mean(axis=0)
    c_tgt = tgt.mean(axis=0)
    s0 = src - c_src
    t0 = tgt - c_tgt

    sing = np.linalg.svd(s0, compute_uv=False)
    if sing[1] < 1e-9 * max(sing[0], 1.0):
        raise CollinearPointsError("source landmarks are collinear (rank < 2)")

    h = s0.T @ t0
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = c_tgt - r @ c_src

    transform = RigidTransform(quat_from_matrix(r), t)
    residuals = src @ r.T + t - tgt
    fre_rms = float(np.sqrt(np.mean(np.sum(residuals ** 2, axis=1))))
    return transform, fre_rms
