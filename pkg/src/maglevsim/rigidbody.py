"""Levitator rigid-body dynamics with gravity, integrated at a fixed step.

Rotation stays on SO(3) by updating with the exponential map of the averaged
body rate; no per-step projection is needed unless drift is detected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .constants import GRAVITY
from .magnetics import LevitatorParams
from .so3 import hat, project_so3


@dataclass
class RigidBodyState:
    """Position/velocity in world frame, rotation body->world, body rates."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega_body: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.p = np.array(self.p, dtype=float).reshape(3)
        self.v = np.array(self.v, dtype=float).reshape(3)
        self.R = np.array(self.R, dtype=float).reshape(3, 3)
        self.omega_body = np.array(self.omega_body, dtype=float).reshape(3)

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.p.copy(), self.v.copy(), self.R.copy(),
                              self.omega_body.copy())


def dynamics_derivative(state: RigidBodyState, torque_body_xy, force_world,
                        params: LevitatorParams, gravity: float = GRAVITY):
    """Time derivative (pdot, vdot, Rdot, omegadot) of the free rigid body
    under the applied wrench; gravity enters here, the dipole-axis torque is
    structurally zero."""
    tau = np.asarray(torque_body_xy, dtype=float).reshape(2)
    f = np.asarray(force_world, dtype=float).reshape(3)
    Ixx, Iyy, Izz = params.inertia
    w = state.omega_body
    pdot = state.v.copy()
    vdot = f / params.mass - np.array([0.0, 0.0, gravity])
    Rdot = state.R @ hat(w)
    omegadot = np.array([
        (Iyy - Izz) / Ixx * w[1] * w[2] + tau[0] / Ixx,
        (Izz - Ixx) / Iyy * w[0] * w[2] + tau[1] / Iyy,
        (Ixx - Iyy) / Izz * w[0] * w[1],
    ])
    return pdot, vdot, Rdot, omegadot


def step(state: RigidBodyState, torque_body_xy, force_world,
         params: LevitatorParams, dt: float,
         gravity: float = GRAVITY) -> RigidBodyState:
    """Fixed-step RK4 update under a wrench held constant over dt."""
    if not (0.0 < dt <= 1e-2):
        raise ValueError(f"dt must be in (0, 1e-2] s, got {dt}")
    tau = np.asarray(torque_body_xy, dtype=float).reshape(2)
    f = np.asarray(force_world, dtype=float).reshape(3)
    out = state.copy()
    Ixx, Iyy, Izz = params.inertia
    _kernels.rk4_step(out.p, out.v, out.R, out.omega_body, tau[0], tau[1],
                      f, params.mass, Ixx, Iyy, Izz, gravity, dt)
    if _kernels.orthonormality_drift(out.R) > 1e-9:
        out.R = project_so3(out.R)
    return out
