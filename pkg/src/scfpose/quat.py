"""Quaternion arithmetic for rigid rotations.

Conventions used throughout the package:

* Quaternions are scalar-first length-4 numpy arrays ``[q1, q2, q3, q4]``
  with ``q1`` the scalar part and ``(q2, q3, q4)`` the vector part.
* ``q`` and ``-q`` encode the same rotation; every rotation-level
  operation here is invariant to that sign.
* 3-vectors handed to the product matrices are implicitly homogenized
  with a leading zero.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "omega1",
    "omega2",
    "qprod",
    "qconj",
    "normalize",
    "rotate",
    "from_axis_angle",
    "quat_to_rotmat",
    "rotmat_to_quat",
    "bilinear",
    "stereo_project",
    "sin_angle",
    "quat_angle",
    "random_unit_quaternion",
    "identity_quaternion",
]


def _homogenize(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape == (3,):
        return np.concatenate(([0.0], a))
    if a.shape == (4,):
        return a
    raise ValueError(f"expected a 3- or 4-vector, got shape {a.shape}")


def omega1(a) -> np.ndarray:
    """Left product matrix: qprod(a, b) == omega1(a) @ b."""
    a1, a2, a3, a4 = _homogenize(a)
    return np.array(
        [
            [a1, -a2, -a3, -a4],
            [a2, a1, -a4, a3],
            [a3, a4, a1, -a2],
            [a4, -a3, a2, a1],
        ]
    )


def omega2(a) -> np.ndarray:
    """Right product matrix: qprod(b, a) == omega2(a) @ b."""
    a1, a2, a3, a4 = _homogenize(a)
    return np.array(
        [
            [a1, -a2, -a3, -a4],
            [a2, a1, a4, -a3],
            [a3, -a4, a1, a2],
            [a4, a3, -a2, a1],
        ]
    )


def qprod(a, b) -> np.ndarray:
    """Hamilton product of two quaternions (3-vectors are homogenized)."""
    return omega1(a) @ _homogenize(b)


def qconj(q) -> np.ndarray:
    """Conjugate; equals the inverse for unit quaternions."""
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n


def identity_quaternion() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def rotate(q, y) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion via the sandwich product."""
    p = qprod(qprod(q, y), qconj(q))
    return p[1:]


def from_axis_angle(axis, angle: float) -> np.ndarray:
    """Unit quaternion for a rotation of `angle` radians about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError("rotation axis must be a unit vector")
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def quat_to_rotmat(q) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion (sign-invariant)."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotmat_to_quat(R) -> np.ndarray:
    """Unit quaternion of a rotation matrix (up to sign).

    Uses the largest of the four squared components to pick the division
    branch, which avoids cancellation near 180-degree rotations.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-6:
        raise ValueError("matrix is not orthonormal")
    if np.linalg.det(R) < 0:
        raise ValueError("matrix has negative determinant (reflection, not a rotation)")

    tr = np.trace(R)
    if tr > max(R[0, 0], R[1, 1], R[2, 2]):
        s = 2.0 * np.sqrt(1.0 + tr)
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array(
            [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
        )
    elif R[1, 1] >= R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array(
            [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
        )
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array(
            [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
        )
    return normalize(q)


def bilinear(x, q, y) -> float:
    """Inner product x' R(q) y expressed as a quaternion quadratic form."""
    q = np.asarray(q, dtype=float)
    return float(-(q @ omega1(x) @ omega2(y) @ q))


def stereo_project(q) -> np.ndarray:
    """Project a unit quaternion into the closed unit 3-ball.

    Returns -sign(q1) * vector_part, identifying q with -q. sign(0) is
    treated as +1 so the map is total.
    """
    q = np.asarray(q, dtype=float)
    s = 1.0 if q[0] >= 0.0 else -1.0
    return -s * q[1:]


def sin_angle(a, b) -> float:
    """Sine of the angle between two unit quaternions, sign-invariant.

    Equals sqrt(1 - <a, b>^2), but evaluated as the norm of the
    component of b orthogonal to a; the naive form bottoms out near
    sqrt(machine eps) and cannot resolve tolerances below ~1e-8.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = float(np.dot(a, b))
    return float(np.linalg.norm(b - d * a))


def quat_angle(a, b) -> float:
    """Rotation angle in radians between the rotations of two unit quaternions.

    Chord-based form, accurate down to angles of ~1e-8 rad where the
    arccos-of-dot form loses all precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = min(np.linalg.norm(a - b), np.linalg.norm(a + b))
    return float(4.0 * np.arcsin(min(1.0, 0.5 * d)))


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Uniform sample on the unit 3-sphere."""
    while True:
        v = rng.standard_normal(4)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n
