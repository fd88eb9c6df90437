"""Reduced attitude on the unit sphere and its nonlinear controller.

The reduced attitude is the world direction of the body z axis; rotations
about that axis are uncontrollable and ignored. The controller stabilizes
every setpoint except its antipode, where the torque legitimately vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .so3 import check_rotation


@dataclass(frozen=True)
class AttitudeGains:
    """Damping matrix Kd (SPD, 2x2), proportional kp, integral ki; all in the
    torque-per-inertia convention. torque_integral_limit clamps the integral
    torque contribution per axis [N*m] for anti-windup."""

    Kd: np.ndarray = field(default_factory=lambda: np.diag([108.0, 108.0]))
    kp: float = 472.5
    ki: float = 100.0
    torque_integral_limit: float = 5e-5

    def __post_init__(self):
        Kd = np.asarray(self.Kd, dtype=float).reshape(2, 2)
        object.__setattr__(self, "Kd", Kd)
        if np.linalg.norm(Kd - Kd.T) > 1e-12 or np.any(np.linalg.eigvalsh(Kd) <= 0.0):
            raise ValueError("Kd must be symmetric positive definite")
        if not self.kp > 0.0:
            raise ValueError("kp must be positive")
        if self.ki < 0.0:
            raise ValueError("ki must be non-negative")


def reduced_attitude(R: np.ndarray) -> np.ndarray:
    """World direction of the body z axis: the third column of R."""
    check_rotation(R)
    return np.asarray(R, dtype=float)[:, 2].copy()


def attitude_error(R: np.ndarray, gamma_des: np.ndarray) -> np.ndarray:
    """First two body-frame components of gamma x gamma_des; zero iff the
    reduced attitude is aligned or antipodal to the setpoint."""
    gamma = reduced_attitude(R)
    gamma_des = np.asarray(gamma_des, dtype=float).reshape(3)
    return (np.asarray(R).T @ np.cross(gamma, gamma_des))[:2]


def attitude_control(R, omega_xy, gamma_des, gains: AttitudeGains,
                     inertia_xy, integral_state, dt: float):
    """Torque command (tau_x, tau_y) in N*m and the advanced integral state.

    tau = (-Kd w + kp e + ki int(e)) elementwise-scaled by (Ixx, Iyy); the
    integral advances by e*dt (rectangle rule) and is clamped so its torque
    contribution stays within the anti-windup limit.
    """
    omega_xy = np.asarray(omega_xy, dtype=float).reshape(2)
    inertia_xy = np.asarray(inertia_xy, dtype=float).reshape(2)
    e = attitude_error(R, gamma_des)
    integral = np.asarray(integral_state, dtype=float).reshape(2) + e * dt
    if gains.ki > 0.0:
        lim = gains.torque_integral_limit / (gains.ki * inertia_xy)
        integral = np.clip(integral, -lim, lim)
    tau = (-(gains.Kd @ omega_xy) + gains.kp * e + gains.ki * integral) * inertia_xy
    return tau, integral
