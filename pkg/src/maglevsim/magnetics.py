"""Maps between fields/gradients and the wrench on the levitator's point dipole.

Torques are body-frame, forces world-frame. The reduced variants drop the
torque about the dipole axis, which no field can exert.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import MU0
from .fieldmodel import FieldModel, actuation_matrix
from .so3 import check_rotation, hat

# vendor-typical remanence for N52 NdFeB [T]
DEFAULT_REMANENCE = 1.45
# two axially magnetized discs, 5 mm diameter x 10 mm length each
DEFAULT_MAGNET_VOLUME = 2.0 * np.pi * 0.0025**2 * 0.01


def dipole_strength(remanence: float, volume: float) -> float:
    """Dipole moment magnitude [A*m^2] of a magnet volume: Br * V / mu0."""
    if remanence < 0.0 or volume < 0.0:
        raise ValueError("remanence and volume must be non-negative")
    return remanence * volume / MU0


def default_dipole_moment() -> float:
    return dipole_strength(DEFAULT_REMANENCE, DEFAULT_MAGNET_VOLUME)


@dataclass(frozen=True)
class LevitatorParams:
    """Mass/inertia/dipole description of the levitating body.

    Defaults: 32.4 g body, principal inertia (6.21, 5.63, 1.14)e-6 kg*m^2,
    dipole moment along -z in the body frame, +-4 A coil current limit.
    """

    mass: float = 0.0324
    inertia: np.ndarray = field(default_factory=lambda: np.array([6.21e-6, 5.63e-6, 1.14e-6]))
    dipole_body: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -default_dipole_moment()]))
    current_limit: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3))
        object.__setattr__(self, "dipole_body", np.asarray(self.dipole_body, dtype=float).reshape(3))
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        if not np.all(self.inertia > 0.0):
            raise ValueError("principal inertia components must be positive")
        if not self.current_limit > 0.0:
            raise ValueError("current limit must be positive")


@dataclass(frozen=True)
class ReducedWrench:
    """Controllable wrench: body-frame (tau_x, tau_y) and world-frame force."""

    torque_xy: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "torque_xy", np.asarray(self.torque_xy, dtype=float).reshape(2))
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.torque_xy, self.force])


def torque_map(R: np.ndarray, dipole_body: np.ndarray) -> np.ndarray:
    """3x3 map from world field to body torque: [m_body]x R^T."""
    check_rotation(R)
    return hat(np.asarray(dipole_body, dtype=float)) @ R.T


def force_map(dipole_world: np.ndarray) -> np.ndarray:
    """3x5 map from Gradient5 to world force on the dipole."""
    mx, my, mz = np.asarray(dipole_world, dtype=float).reshape(3)
    return np.array([[mx, my, mz, 0.0, 0.0],
                     [0.0, mx, 0.0, my, mz],
                     [-mz, 0.0, mx, -mz, my]])


def interaction_matrix(R: np.ndarray, dipole_body: np.ndarray) -> np.ndarray:
    """6x8 map from stacked (field; Gradient5) to (body torque; world force)."""
    M = np.zeros((6, 8))
    M[:3, :3] = torque_map(R, dipole_body)
    M[3:, 3:] = force_map(R @ np.asarray(dipole_body, dtype=float))
    return M


def allocation_matrix(model: FieldModel, R: np.ndarray, p: np.ndarray,
                      dipole_body: np.ndarray) -> np.ndarray:
    """6x8 map from coil currents to the full wrench at pose (R, p)."""
    return interaction_matrix(R, dipole_body) @ actuation_matrix(model, p)


def reduced_interaction_matrix(R: np.ndarray, dipole_body: np.ndarray) -> np.ndarray:
    """5x8 interaction matrix with the uncontrollable dipole-axis torque row removed.

    Requires the dipole to lie along body z; other directions are rejected
    because the reduced torque block hardcodes that structure.
    """
    dipole_body = np.asarray(dipole_body, dtype=float).reshape(3)
    if abs(dipole_body[0]) > 0.0 or abs(dipole_body[1]) > 0.0:
        raise ValueError("reduced maps require the dipole along the body z axis")
    check_rotation(R)
    M = np.zeros((5, 8))
    M[:2, :3] = (hat(dipole_body) @ R.T)[:2, :]
    M[2:, 3:] = force_map(R @ dipole_body)
    return M


def reduced_allocation_matrix(model: FieldModel, R: np.ndarray, p: np.ndarray,
                              dipole_body: np.ndarray) -> np.ndarray:
    """5x8 map from coil currents to (body tau_xy; world force) at pose (R, p)."""
    return reduced_interaction_matrix(R, dipole_body) @ actuation_matrix(model, p)
