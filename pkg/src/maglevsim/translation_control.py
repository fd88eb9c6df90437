"""Per-axis double-integrator LQR: ZOH discretization, normalized DARE design,
and the runtime force law with integral action and gravity feedforward."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import GRAVITY
from .magnetics import LevitatorParams


class DareConvergenceError(RuntimeError):
    """Fixed-point Riccati iteration failed to converge."""


@dataclass(frozen=True)
class AxisModel:
    """Exact zero-order-hold discretization of one translational axis."""

    A: np.ndarray
    B: np.ndarray
    Ts: float
    mass: float


@dataclass(frozen=True)
class LqrDesign:
    """Normalized-space LQR design for one axis, with the denormalized gain K."""

    Q: np.ndarray
    rho: float
    Tx: np.ndarray
    Tu: float
    K: np.ndarray
    model: AxisModel


def discretize_axis(mass: float, Ts: float) -> AxisModel:
    """ZOH discretization of pdot = v, vdot = f/m at sampling time Ts."""
    if not (mass > 0.0 and Ts > 0.0):
        raise ValueError("mass and Ts must be positive")
    A = np.array([[1.0, Ts], [0.0, 1.0]])
    B = np.array([Ts**2 / (2.0 * mass), Ts / mass])
    return AxisModel(A=A, B=B, Ts=Ts, mass=mass)


def solve_dare(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R_cost,
               tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """Discrete algebraic Riccati equation by fixed-point iteration from P0 = Q."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R_cost, dtype=float))
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        gain = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ gain
        P_next = (P_next + P_next.T) / 2.0
        if np.linalg.norm(P_next - P) <= tol * max(np.linalg.norm(P_next), 1e-300):
            return P_next
        P = P_next
    raise DareConvergenceError(f"DARE iteration did not converge in {max_iter} steps")


def dare_residual(A, B, Q, R_cost, P) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R_cost, dtype=float))
    BtP = B.T @ P
    rhs = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BtP @ B, BtP @ A)
    return float(np.linalg.norm(P - rhs))


def lqr_gain(A, B, Q, R_cost, P=None) -> np.ndarray:
    """State-feedback gain K = (R + B'PB)^-1 B'PA for u = -Kx."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    if P is None:
        P = solve_dare(A, B, Q, R_cost)
    R = np.atleast_2d(np.asarray(R_cost, dtype=float))
    BtP = B.T @ P
    return np.linalg.solve(R + BtP @ B, BtP @ A)


def design_axis_lqr(model: AxisModel, Q_bar: np.ndarray, rho: float,
                    xi: float = 5e-3) -> LqrDesign:
    """LQR design in a normalized state/input space.

    State scaled by Tx = diag(xi, 5*xi), input by Tu = 5*m*xi; the DARE is
    solved in the normalized coordinates and K is denormalized back as
    K = Tu * K_bar * Tx^-1.
    """
    if not (rho > 0.0 and xi > 0.0):
        raise ValueError("rho and xi must be positive")
    Q_bar = np.atleast_2d(np.asarray(Q_bar, dtype=float))
    Tx = np.diag([xi, 5.0 * xi])
    Tu = 5.0 * model.mass * xi
    Tx_inv = np.diag(1.0 / np.diag(Tx))
    A_bar = Tx_inv @ model.A @ Tx
    B_bar = (Tx_inv @ model.B) * Tu
    P_bar = solve_dare(A_bar, B_bar, Q_bar, rho)
    K_bar = lqr_gain(A_bar, B_bar, Q_bar, rho, P=P_bar)
    K = (Tu * K_bar @ Tx_inv).reshape(2)
    return LqrDesign(Q=Q_bar, rho=float(rho), Tx=Tx, Tu=float(Tu), K=K, model=model)


def closed_loop_spectral_radius(design: LqrDesign) -> float:
    A, B, K = design.model.A, design.model.B, design.K
    return float(np.max(np.abs(np.linalg.eigvals(A - np.outer(B, K)))))


@dataclass(frozen=True)
class TranslationGains:
    """Per-axis normalized LQR costs plus integral gains."""

    Q: np.ndarray = field(default_factory=lambda: np.array(
        [[22.0, 7.0], [15.0, 7.0], [30.0, 10.0]]))  # rows: diag(Q) per axis x, y, z
    rho: float = 0.1
    xi: float = 5e-3
    ki: np.ndarray = field(default_factory=lambda: np.array([10.0, 10.0, 10.0]))

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float).reshape(3, 2))
        object.__setattr__(self, "ki", np.asarray(self.ki, dtype=float).reshape(3))


def design_translation(gains: TranslationGains, mass: float, Ts: float) -> list:
    """Three per-axis LqrDesigns from the shared mass/Ts and per-axis costs."""
    model = discretize_axis(mass, Ts)
    return [design_axis_lqr(model, np.diag(gains.Q[a]), gains.rho, gains.xi)
            for a in range(3)]


def translation_control(pos, vel, pos_des, vel_des, designs, ki, integral_state,
                        params: LevitatorParams, dt: float, gravity: float = GRAVITY):
    """World-frame force command: per-axis LQR on (setpoint - state), integral
    action on position error, and gravity feedforward on z.

    The integral contribution is clamped per axis at +-0.5*m*g (anti-windup).
    Returns (force_world, new_integral_state).
    """
    pos = np.asarray(pos, dtype=float).reshape(3)
    vel = np.asarray(vel, dtype=float).reshape(3)
    pos_des = np.asarray(pos_des, dtype=float).reshape(3)
    vel_des = np.asarray(vel_des, dtype=float).reshape(3)
    ki = np.asarray(ki, dtype=float).reshape(3)
    integral = np.asarray(integral_state, dtype=float).reshape(3).copy()

    integral += (pos_des - pos) * dt
    clamp = 0.5 * params.mass * gravity
    for a in range(3):
        if ki[a] > 0.0:
            lim = clamp / ki[a]
            integral[a] = np.clip(integral[a], -lim, lim)

    force = np.empty(3)
    for a in range(3):
        err = np.array([pos_des[a] - pos[a], vel_des[a] - vel[a]])
        force[a] = designs[a].K @ err + ki[a] * integral[a]
    force[2] += params.mass * gravity
    return force, integral
