import numpy as np
import pytest

from maglevsim.so3 import (InvalidRotationError, check_rotation,
                           euler_xyz_to_matrix, exp_so3, hat, log_so3,
                           matrix_to_euler_xyz, matrix_to_quaternion,
                           project_so3, rot_x, rot_y, rot_z, vee)

from conftest import random_rotation


def test_hat_vee_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = rng.standard_normal(3)
        W = hat(w)
        assert np.allclose(W + W.T, 0.0)
        assert np.array_equal(vee(W), w)
        v = rng.standard_normal(3)
        assert np.allclose(W @ v, np.cross(w, v))


def test_exp_log_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(200):
        w = rng.standard_normal(3)
        w *= rng.uniform(0.0, np.pi - 1e-3) / np.linalg.norm(w)
        assert np.allclose(log_so3(exp_so3(w)), w, atol=1e-9)


def test_log_near_pi():
    for axis in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                 np.array([0.6, 0.0, 0.8])):
        w = axis * (np.pi - 1e-8)
        R = exp_so3(w)
        w_back = log_so3(R)
        # near pi the axis sign is ambiguous; compare rotations
        assert np.allclose(exp_so3(w_back), R, atol=1e-6)


def test_exp_small_angle_orthonormal():
    R = exp_so3(np.array([1e-14, -2e-14, 3e-15]))
    assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-15


def test_check_rotation_rejects():
    with pytest.raises(InvalidRotationError):
        check_rotation(np.eye(3) * 1.001)
    with pytest.raises(InvalidRotationError):
        check_rotation(np.diag([1.0, 1.0, -1.0]))
    check_rotation(np.eye(3))  # no raise


def test_project_so3():
    rng = np.random.default_rng(2)
    R = random_rotation(rng)
    noisy = R + 1e-6 * rng.standard_normal((3, 3))
    P = project_so3(noisy)
    check_rotation(P)
    assert np.linalg.norm(P - R) < 1e-5


def test_euler_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(200):
        roll, yaw = rng.uniform(-np.pi, np.pi, 2)
        pitch = rng.uniform(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3)
        R = euler_xyz_to_matrix(roll, pitch, yaw)
        r2, p2, y2 = matrix_to_euler_xyz(R)
        assert np.allclose(euler_xyz_to_matrix(r2, p2, y2), R, atol=1e-12)
        assert abs(r2 - roll) < 1e-9
        assert abs(p2 - pitch) < 1e-9
        assert abs(y2 - yaw) < 1e-9


def test_elementary_rotations():
    a = 0.3
    assert np.allclose(rot_x(a), exp_so3(np.array([a, 0, 0])))
    assert np.allclose(rot_y(a), exp_so3(np.array([0, a, 0])))
    assert np.allclose(rot_z(a), exp_so3(np.array([0, 0, a])))


def test_quaternion_properties():
    rng = np.random.default_rng(4)
    for _ in range(200):
        R = random_rotation(rng)
        q = matrix_to_quaternion(R)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-12
        assert q[0] >= 0.0
        # rebuild R from q and compare
        w, x, y, z = q
        R_back = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)]])
        assert np.allclose(R_back, R, atol=1e-9)
