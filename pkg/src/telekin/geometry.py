"""Rotation and rigid-pose primitives shared across the engine.

Conventions, fixed once for the whole package:

* quaternions are scalar-first ``(w, x, y, z)``, unit norm, and sign-canonical
  (first nonzero component positive, so normally ``w >= 0``) after every
  producing operation — this keeps logged orientations reproducible bit for bit;
* rotation matrices are right-handed, orthonormal, ``det = +1``;
* angles are radians, lengths are meters.

Everything here is a pure function over small float64 arrays; there is no
shared state, so all of it is safe to call from any thread.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ROTATION_INPUT_TOL",
    "UNIT_NORM_TOL",
    "InvalidRotationError",
    "Pose",
    "vec3",
    "identity_quat",
    "quat_normalize",
    "quat_multiply",
    "quat_conjugate",
    "quat_about_y",
    "quat_about_z",
    "quat_from_axis_angle",
    "quat_from_matrix",
    "matrix_from_quat",
    "geodesic_distance",
    "slerp_step",
    "inplane_rotation",
    "pitch_rotation",
    "hadamard_scale",
]

# How far from orthonormal an input matrix may be before it is rejected.
ROTATION_INPUT_TOL = 1e-6
# Norm guarantee on every quaternion this module produces.
UNIT_NORM_TOL = 1e-9


class InvalidRotationError(ValueError):
    """A supposed rotation matrix is not orthonormal / right-handed."""


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([float(x), float(y), float(z)])


def identity_quat() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def _canonical_sign(q: np.ndarray) -> np.ndarray:
    # First nonzero component positive; q and -q are the same rotation.
    for c in q:
        if c > 0.0:
            return q
        if c < 0.0:
            return -q
    return q


def quat_normalize(q) -> np.ndarray:
    """Unit-norm, sign-canonical copy of ``q``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    n = float(np.linalg.norm(q))
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    return _canonical_sign(q / n)


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product a ⊗ b, renormalized and sign-canonical."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return quat_normalize(
        np.array(
            [
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            ]
        )
    )


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return _canonical_sign(np.array([q[0], -q[1], -q[2], -q[3]]))


def quat_about_z(angle: float) -> np.ndarray:
    """Rotation by ``angle`` about +z (the gripper approach axis)."""
    h = 0.5 * angle
    return _canonical_sign(np.array([math.cos(h), 0.0, 0.0, math.sin(h)]))


def quat_about_y(angle: float) -> np.ndarray:
    """Rotation by ``angle`` about +y (the gripper lateral axis)."""
    h = 0.5 * angle
    return _canonical_sign(np.array([math.cos(h), 0.0, math.sin(h), 0.0]))


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` about arbitrary ``axis`` (normalized here)."""
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("axis must be a nonzero finite vector")
    h = 0.5 * float(angle)
    s = math.sin(h) / n
    return quat_normalize(
        np.array([math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s]))


def _check_rotation(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise InvalidRotationError(f"rotation must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidRotationError("rotation contains non-finite entries")
    err = float(np.abs(m.T @ m - np.eye(3)).max())
    if err > ROTATION_INPUT_TOL:
        raise InvalidRotationError(f"matrix is not orthonormal (max error {err:.3e})")
    if float(np.linalg.det(m)) < 0.0:
        raise InvalidRotationError("matrix is left-handed (det < 0)")
    return m


def quat_from_matrix(m) -> np.ndarray:
    """Unit quaternion for rotation matrix ``m`` (validated on entry).

    Raises :class:`InvalidRotationError` if ``m`` is further than
    ``ROTATION_INPUT_TOL`` from a proper rotation.
    """
    m = _check_rotation(m)
    m00, m01, m02 = m[0]
    m10, m11, m12 = m[1]
    m20, m21, m22 = m[2]
    tr = m00 + m11 + m22
    # Shepperd's method: branch on the largest diagonal term for stability.
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m21 - m12) / s
        y = (m02 - m20) / s
        z = (m10 - m01) / s
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        w = (m21 - m12) / s
        x = 0.25 * s
        y = (m01 + m10) / s
        z = (m02 + m20) / s
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        w = (m02 - m20) / s
        x = (m01 + m10) / s
        y = 0.25 * s
        z = (m12 + m21) / s
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        w = (m10 - m01) / s
        x = (m02 + m20) / s
        y = (m12 + m21) / s
        z = 0.25 * s
    return quat_normalize(np.array([w, x, y, z]))


def matrix_from_quat(q) -> np.ndarray:
    """3x3 rotation matrix for unit quaternion ``q``."""
    w, x, y, z = quat_normalize(q)
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def geodesic_distance(a, b) -> float:
    """Minimal rotation angle taking orientation ``a`` to ``b``, in [0, pi].

    Symmetric, zero iff a = ±b.  Computed through atan2 of the relative
    quaternion, which stays accurate for tiny angles where acos of the dot
    product would lose ~1e-8.
    """
    rel = quat_multiply(quat_conjugate(quat_normalize(a)), quat_normalize(b))
    return 2.0 * math.atan2(float(np.linalg.norm(rel[1:])), abs(float(rel[0])))


def slerp_step(current, target, omega: float, dt: float) -> tuple[np.ndarray, bool]:
    """March from ``current`` toward ``target`` at angular speed ``omega``.

    Returns ``(next, done)``.  If the remaining geodesic distance fits in one
    step (``omega * dt``) the target itself is returned with ``done=True``;
    otherwise the point exactly ``omega * dt`` along the shortest-arc geodesic.
    Never overshoots; antipodal quaternion representations are sign-fixed.
    """
    if omega <= 0.0 or dt <= 0.0:
        raise ValueError("slerp_step requires omega > 0 and dt > 0")
    cur = quat_normalize(current)
    tgt = quat_normalize(target)
    d0 = geodesic_distance(cur, tgt)
    step = omega * dt
    if d0 <= step:
        return tgt, True
    dot = float(np.dot(cur, tgt))
    end = -tgt if dot < 0.0 else tgt
    t = step / d0
    half = 0.5 * d0  # angle between cur and end in quaternion space
    sh = math.sin(half)
    out = (math.sin((1.0 - t) * half) * cur + math.sin(t * half) * end) / sh
    return quat_normalize(out), False


def inplane_rotation(angle: float) -> np.ndarray:
    """Rotation by ``angle`` about the approach axis (+z), as a matrix."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pitch_rotation(angle: float) -> np.ndarray:
    """Rotation by ``angle`` about the lateral axis (+y), as a matrix."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def hadamard_scale(s, p) -> np.ndarray:
    """Componentwise product of two 3-vectors."""
    return np.asarray(s, dtype=float) * np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: position in meters plus a unit quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError("pose position must be a finite 3-vector")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", quat_normalize(self.orientation))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), identity_quat())
