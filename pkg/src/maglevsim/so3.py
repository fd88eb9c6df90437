"""Rotation utilities: hat/vee maps, exponential/logarithm, Euler and quaternion conversions.

Euler angles follow the XYZ intrinsic convention (roll about x, pitch about
the rotated y, yaw about the twice-rotated z), i.e. R = Rx(roll) @ Ry(pitch) @ Rz(yaw).
"""

from __future__ import annotations

import numpy as np


class InvalidRotationError(ValueError):
    """Raised when a matrix is not a proper rotation within tolerance."""


def hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(w) @ v == np.cross(w, v)."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def vee(W: np.ndarray) -> np.ndarray:
    """Inverse of hat for a skew-symmetric matrix."""
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def check_rotation(R: np.ndarray, tol: float = 1e-9) -> None:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise InvalidRotationError(f"expected 3x3 matrix, got shape {R.shape}")
    err = np.linalg.norm(R.T @ R - np.eye(3))
    if err > tol:
        raise InvalidRotationError(f"R'R deviates from identity by {err:.3e}")
    if np.linalg.det(R) < 0.0:
        raise InvalidRotationError("det(R) < 0 (improper rotation)")


def exp_so3(w: np.ndarray) -> np.ndarray:
    """Rodrigues formula: rotation matrix for rotation vector w (angle = |w|)."""
    theta = np.linalg.norm(w)
    W = hat(w)
    if theta < 1e-12:
        # second-order series keeps orthogonality to machine precision here
        return np.eye(3) + W + 0.5 * (W @ W)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * W + b * (W @ W)


def log_so3(R: np.ndarray) -> np.ndarray:
    """Rotation vector of R; inverse of exp_so3 for angles in [0, pi]."""
    tr = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(tr)
    if theta < 1e-10:
        return vee(R - R.T) / 2.0
    if np.pi - theta < 1e-6:
        # near pi: axis from the symmetric part
        S = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(S), 0.0, None))
        # fix signs using off-diagonal terms
        k = int(np.argmax(axis))
        axis = S[:, k] / axis[k]
        axis /= np.linalg.norm(axis)
        return theta * axis
    return theta * vee(R - R.T) / (2.0 * np.sin(theta))


def project_so3(R: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar projection via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_xyz_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return rot_x(roll) @ rot_y(pitch) @ rot_z(yaw)


def matrix_to_euler_xyz(R: np.ndarray) -> tuple[float, float, float]:
    """XYZ intrinsic Euler angles (roll, pitch, yaw) of R."""
    pitch = np.arcsin(np.clip(R[0, 2], -1.0, 1.0))
    if abs(R[0, 2]) < 1.0 - 1e-12:
        roll = np.arctan2(-R[1, 2], R[2, 2])
        yaw = np.arctan2(-R[0, 1], R[0, 0])
    else:
        # gimbal lock: put all twist into roll
        roll = np.arctan2(R[2, 1], R[1, 1])
        yaw = 0.0
    return float(roll), float(pitch), float(yaw)


def matrix_to_quaternion(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0."""
    tr = np.trace(R)
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k]) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)
