"""Closed-loop levitation simulation.

Pipeline per controller tick: delayed/noisy pose measurement -> backward
finite-difference velocity estimates -> reduced-attitude and translation
controllers -> current allocation at the estimated pose -> zero-order hold
while the physics substeps run the current-driver lag, the magnetic wrench at
the true pose, and the RK4 plant. Runs are deterministic for a given seed.

Also hosts the hover stiffness analyzer (the field acts as a position
stiffness with zero trace, so a levitated equilibrium at frozen currents
always has an unstable direction).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .allocation import saturate, solve_currents
from .attitude_control import AttitudeGains, attitude_control
from .constants import GRAVITY
from .fieldmodel import FieldModel, default_field_model, field_and_gradient
from .magnetics import LevitatorParams, force_map, reduced_allocation_matrix
from .so3 import (exp_so3, hat, log_so3, matrix_to_euler_xyz,
                  matrix_to_quaternion, project_so3, rot_x, rot_y)
from .translation_control import TranslationGains, design_translation, translation_control


class DivergenceError(RuntimeError):
    """Raised only by callers that treat a flagged log as fatal."""


# ---------------------------------------------------------------------------
# scenarios / trajectory generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Trajectory descriptor.

    kinds:
      hover          -- hold `hover_point`, level attitude
      attitude_steps -- hold position, piecewise-constant (roll, pitch) targets
      figure_eight   -- Lissajous x/y at constant z, level attitude
      position_steps -- piecewise-constant position targets, level attitude
    """

    kind: str = "hover"
    hover_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    amplitude_x: float = 0.010
    amplitude_y: float = 0.005
    period: float = 10.0
    # (start time [s], roll [rad], pitch [rad]) entries, sorted by time
    attitude_steps: tuple = ()
    # (start time [s], x, y, z [m]) entries, sorted by time
    position_steps: tuple = ()

    def __post_init__(self):
        if self.kind not in ("hover", "attitude_steps", "figure_eight", "position_steps"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        object.__setattr__(self, "hover_point",
                           np.asarray(self.hover_point, dtype=float).reshape(3))
        object.__setattr__(self, "attitude_steps",
                           tuple(tuple(map(float, s)) for s in self.attitude_steps))
        object.__setattr__(self, "position_steps",
                           tuple(tuple(map(float, s)) for s in self.position_steps))


def default_attitude_step_sequence(angle: float = np.deg2rad(45.0),
                                   hold: float = 2.0) -> tuple:
    """Level, +-roll, level, +-pitch, level; reaches +-`angle` on both axes."""
    seq = [(0.0, 0.0, 0.0)]
    t = hold
    for roll, pitch in ((angle, 0.0), (-angle, 0.0), (0.0, 0.0),
                        (0.0, angle), (0.0, -angle), (0.0, 0.0)):
        seq.append((t, roll, pitch))
        t += hold
    return tuple(seq)


def gamma_from_roll_pitch(roll: float, pitch: float) -> np.ndarray:
    """Reduced-attitude target of commanded XYZ-intrinsic roll/pitch angles."""
    return (rot_x(roll) @ rot_y(pitch))[:, 2]


def _piecewise(entries, t):
    current = entries[0]
    for entry in entries:
        if entry[0] <= t:
            current = entry
        else:
            break
    return current


def trajectory(t: float, scenario: Scenario):
    """Setpoints (p_des, v_des, gamma_des) at time t."""
    ez = np.array([0.0, 0.0, 1.0])
    if scenario.kind == "hover":
        return scenario.hover_point.copy(), np.zeros(3), ez
    if scenario.kind == "attitude_steps":
        steps = scenario.attitude_steps or ((0.0, 0.0, 0.0),)
        _, roll, pitch = _piecewise(steps, t)
        return scenario.hover_point.copy(), np.zeros(3), gamma_from_roll_pitch(roll, pitch)
    if scenario.kind == "figure_eight":
        wa = 2.0 * np.pi / scenario.period
        p = scenario.hover_point + np.array([
            scenario.amplitude_x * np.sin(wa * t),
            scenario.amplitude_y * np.sin(2.0 * wa * t),
            0.0])
        v = np.array([
            scenario.amplitude_x * wa * np.cos(wa * t),
            scenario.amplitude_y * 2.0 * wa * np.cos(2.0 * wa * t),
            0.0])
        return p, v, ez
    if scenario.kind == "position_steps":
        steps = scenario.position_steps or ((0.0, *scenario.hover_point),)
        _, px, py, pz = _piecewise(steps, t)
        return np.array([px, py, pz]), np.zeros(3), ez
    raise ValueError(f"unknown scenario kind {scenario.kind!r}")


# ---------------------------------------------------------------------------
# low-level loop components
# ---------------------------------------------------------------------------

def driver_step(i_actual, i_setpoint, fc: float, dt: float) -> np.ndarray:
    """Exact discrete first-order lag of the current drivers over dt."""
    if not fc > 0.0:
        raise ValueError("corner frequency must be positive")
    i_actual = np.asarray(i_actual, dtype=float)
    i_setpoint = np.asarray(i_setpoint, dtype=float)
    a = np.exp(-2.0 * np.pi * fc * dt)
    return i_setpoint + (i_actual - i_setpoint) * a


def estimate_velocity(p_k, p_km1, Ts: float) -> np.ndarray:
    """First-order backward difference of position samples."""
    if not Ts > 0.0:
        raise ValueError("Ts must be positive")
    return (np.asarray(p_k, dtype=float) - np.asarray(p_km1, dtype=float)) / Ts


def estimate_body_rate(R_k, R_km1, Ts: float) -> np.ndarray:
    """Body rate from the logarithm of the rotation increment over Ts."""
    if not Ts > 0.0:
        raise ValueError("Ts must be positive")
    return log_so3(np.asarray(R_km1).T @ np.asarray(R_k)) / Ts


class SensorModel:
    """Pose sensor with an integer-tick delay line and additive noise.

    Position noise is Gaussian per axis; attitude noise is a small random
    rotation applied on the right. Deterministic for a given rng.
    """

    def __init__(self, delay_ticks: int, pos_noise_std: float,
                 att_noise_std: float, rng: np.random.Generator):
        self.delay_ticks = int(delay_ticks)
        self.pos_noise_std = float(pos_noise_std)
        self.att_noise_std = float(att_noise_std)
        self.rng = rng
        self._buffer: list = []

    def measure(self, p_true: np.ndarray, R_true: np.ndarray):
        self._buffer.append((np.array(p_true), np.array(R_true)))
        idx = max(len(self._buffer) - 1 - self.delay_ticks, 0)
        p, R = self._buffer[idx]
        if self.pos_noise_std > 0.0:
            p = p + self.rng.normal(0.0, self.pos_noise_std, 3)
        if self.att_noise_std > 0.0:
            R = R @ exp_so3(self.rng.normal(0.0, self.att_noise_std, 3))
        return p, R


# ---------------------------------------------------------------------------
# configuration and log
# ---------------------------------------------------------------------------

@dataclass
class SimConfig:
    Ts: float = 1e-3
    physics_step: float = 1e-4
    duration: float = 5.0
    corner_frequency: float = 26.4
    loop_delay: float = 4e-3
    pos_noise_std: float = 5e-5
    att_noise_std: float = 1e-3
    seed: int = 0
    scenario: Scenario = field(default_factory=Scenario)
    attitude_gains: AttitudeGains = field(default_factory=AttitudeGains)
    translation_gains: TranslationGains = field(default_factory=TranslationGains)
    levitator: LevitatorParams = field(default_factory=LevitatorParams)
    field_model: FieldModel = field(default_factory=default_field_model)
    gravity: float = GRAVITY
    disturbance_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initial_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.disturbance_force = np.asarray(self.disturbance_force, dtype=float).reshape(3)
        self.initial_offset = np.asarray(self.initial_offset, dtype=float).reshape(3)
        if not (self.Ts > 0.0 and self.physics_step > 0.0 and self.duration > 0.0):
            raise ValueError("Ts, physics_step and duration must be positive")
        n_sub = self.Ts / self.physics_step
        if abs(n_sub - round(n_sub)) > 1e-9:
            raise ValueError("physics_step must divide Ts")
        delay = self.loop_delay / self.Ts
        if abs(delay - round(delay)) > 1e-9:
            raise ValueError("loop_delay must be an integer multiple of Ts")

    @property
    def n_sub(self) -> int:
        return int(round(self.Ts / self.physics_step))

    @property
    def delay_ticks(self) -> int:
        return int(round(self.loop_delay / self.Ts))


SIMLOG_CSV_HEADER = (
    ["t", "px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz",
     "roll", "pitch", "yaw", "wx", "wy", "wz",
     "px_des", "py_des", "pz_des", "gx_des", "gy_des", "gz_des",
     "tau_x", "tau_y", "fx", "fy", "fz"]
    + [f"i{k}" for k in range(1, 9)] + ["sat_flags"]
)


@dataclass
class SimLog:
    """Fixed-rate record of a closed-loop run, one entry per controller tick."""

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    quat: np.ndarray
    euler: np.ndarray
    omega: np.ndarray
    p_est: np.ndarray
    v_est: np.ndarray
    omega_est: np.ndarray
    p_des: np.ndarray
    gamma_des: np.ndarray
    gamma: np.ndarray
    tau_cmd: np.ndarray
    f_cmd: np.ndarray
    i_cmd: np.ndarray
    i_actual: np.ndarray
    sat_flags: np.ndarray  # bitmask, bit j set when coil j saturated
    diverged: bool = False
    divergence_time: float | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(SIMLOG_CSV_HEADER)
            for k in range(self.t.size):
                row = ([self.t[k]] + list(self.p[k]) + list(self.v[k])
                       + list(self.quat[k]) + list(self.euler[k]) + list(self.omega[k])
                       + list(self.p_des[k]) + list(self.gamma_des[k])
                       + list(self.tau_cmd[k]) + list(self.f_cmd[k])
                       + list(self.i_cmd[k]) + [int(self.sat_flags[k])])
                w.writerow([repr(float(x)) if not isinstance(x, int) else x for x in row])

    def summary(self) -> dict:
        pos_err = self.p_des - self.p
        dots = np.clip(np.sum(self.gamma * self.gamma_des, axis=1), -1.0, 1.0)
        angle_err = np.arccos(dots)
        return {
            "diverged": bool(self.diverged),
            "divergence_time": self.divergence_time,
            "duration": float(self.t[-1]) if self.t.size else 0.0,
            "rms_position_error_m": [float(x) for x in np.sqrt(np.mean(pos_err**2, axis=0))],
            "rms_attitude_error_rad": float(np.sqrt(np.mean(angle_err**2))),
            "final_position_error_m": [float(x) for x in pos_err[-1]] if self.t.size else None,
            "max_abs_current_A": float(np.max(np.abs(self.i_cmd))) if self.t.size else 0.0,
            "saturation_fraction": float(np.mean(self.sat_flags > 0)) if self.t.size else 0.0,
        }


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------

def initial_rotation(scenario: Scenario) -> np.ndarray:
    if scenario.kind == "attitude_steps" and scenario.attitude_steps:
        _, roll, pitch = scenario.attitude_steps[0]
        return rot_x(roll) @ rot_y(pitch)
    return np.eye(3)


def run_closed_loop(config: SimConfig) -> SimLog:
    """Simulate the full pipeline; returns the tick-rate SimLog.

    Logged state is the plant state at the start of each tick; logged actual
    currents are the driver currents at the end of the tick. Aborts with a
    flagged log if |p| exceeds 0.2 m or |omega| exceeds 500 rad/s.
    """
    rng = np.random.default_rng(config.seed)
    params = config.levitator
    model = config.field_model
    designs = design_translation(config.translation_gains, params.mass, config.Ts)

    p_des0, _, _ = trajectory(0.0, config.scenario)
    p = p_des0 + config.initial_offset
    v = np.zeros(3)
    R = initial_rotation(config.scenario).copy()
    w = np.zeros(3)
    i_actual = np.zeros(8)

    centers = np.ascontiguousarray(model.centers)
    axes = np.ascontiguousarray(model.axes)
    strengths = np.ascontiguousarray(model.strengths)
    mbz = float(params.dipole_body[2])
    Ixx, Iyy, Izz = params.inertia
    lag = float(np.exp(-2.0 * np.pi * config.corner_frequency * config.physics_step))
    f_ext = np.ascontiguousarray(config.disturbance_force)

    sensor = SensorModel(config.delay_ticks, config.pos_noise_std,
                         config.att_noise_std, rng)
    p_meas_prev = None
    R_meas_prev = None
    att_integral = np.zeros(2)
    trans_integral = np.zeros(3)

    n_ticks = int(round(config.duration / config.Ts))
    log = {name: [] for name in
           ("t", "p", "v", "quat", "euler", "omega", "p_est", "v_est", "omega_est",
            "p_des", "gamma_des", "gamma", "tau_cmd", "f_cmd", "i_cmd", "i_actual",
            "sat_flags")}
    diverged = False
    divergence_time = None

    for k in range(n_ticks):
        t = k * config.Ts
        p_meas, R_meas = sensor.measure(p, R)
        if p_meas_prev is None:
            v_est = np.zeros(3)
            w_est = np.zeros(3)
        else:
            v_est = estimate_velocity(p_meas, p_meas_prev, config.Ts)
            w_est = estimate_body_rate(R_meas, R_meas_prev, config.Ts)
        p_meas_prev, R_meas_prev = p_meas, R_meas

        p_des, v_des, gamma_des = trajectory(t, config.scenario)

        tau_xy, att_integral = attitude_control(
            R_meas, w_est[:2], gamma_des, config.attitude_gains,
            params.inertia[:2], att_integral, config.Ts)
        force, trans_integral = translation_control(
            p_meas, v_est, p_des, v_des, designs, config.translation_gains.ki,
            trans_integral, params, config.Ts, gravity=config.gravity)

        wrench = np.concatenate([tau_xy, force])
        N_tilde = reduced_allocation_matrix(model, R_meas, p_meas, params.dipole_body)
        i_unsat = solve_currents(N_tilde, wrench)
        i_cmd, flags = saturate(i_unsat, params.current_limit)

        roll, pitch, yaw = matrix_to_euler_xyz(R)
        log["t"].append(t)
        log["p"].append(p.copy())
        log["v"].append(v.copy())
        log["quat"].append(matrix_to_quaternion(R))
        log["euler"].append(np.array([roll, pitch, yaw]))
        log["omega"].append(w.copy())
        log["p_est"].append(p_meas.copy())
        log["v_est"].append(v_est.copy())
        log["omega_est"].append(w_est.copy())
        log["p_des"].append(p_des.copy())
        log["gamma_des"].append(gamma_des.copy())
        log["gamma"].append(R[:, 2].copy())
        log["tau_cmd"].append(tau_xy.copy())
        log["f_cmd"].append(force.copy())
        log["i_cmd"].append(i_cmd.copy())
        log["sat_flags"].append(int(np.sum(1 << np.nonzero(flags)[0])))

        _kernels.physics_tick(p, v, R, w, i_actual, i_cmd, centers, axes,
                              strengths, mbz, params.mass, Ixx, Iyy, Izz,
                              config.gravity, lag, config.physics_step,
                              config.n_sub, f_ext)
        if _kernels.orthonormality_drift(R) > 1e-9:
            R[:] = project_so3(R)
        log["i_actual"].append(i_actual.copy())

        if np.linalg.norm(p) > 0.2 or np.linalg.norm(w) > 500.0:
            diverged = True
            divergence_time = t + config.Ts
            break

    return SimLog(
        t=np.array(log["t"]),
        p=np.array(log["p"]).reshape(-1, 3),
        v=np.array(log["v"]).reshape(-1, 3),
        quat=np.array(log["quat"]).reshape(-1, 4),
        euler=np.array(log["euler"]).reshape(-1, 3),
        omega=np.array(log["omega"]).reshape(-1, 3),
        p_est=np.array(log["p_est"]).reshape(-1, 3),
        v_est=np.array(log["v_est"]).reshape(-1, 3),
        omega_est=np.array(log["omega_est"]).reshape(-1, 3),
        p_des=np.array(log["p_des"]).reshape(-1, 3),
        gamma_des=np.array(log["gamma_des"]).reshape(-1, 3),
        gamma=np.array(log["gamma"]).reshape(-1, 3),
        tau_cmd=np.array(log["tau_cmd"]).reshape(-1, 2),
        f_cmd=np.array(log["f_cmd"]).reshape(-1, 3),
        i_cmd=np.array(log["i_cmd"]).reshape(-1, 8),
        i_actual=np.array(log["i_actual"]).reshape(-1, 8),
        sat_flags=np.array(log["sat_flags"], dtype=np.int64),
        diverged=diverged,
        divergence_time=divergence_time,
    )


def run_attitude_only(R0, w0, gamma_des, gains: AttitudeGains,
                      params: LevitatorParams, Ts: float, duration: float,
                      tau_max: float = 2e-2) -> np.ndarray:
    """Rotational subsystem in closed loop with ideal (clamped) torque
    delivery; returns the reduced-attitude angle error per tick [rad]."""
    R = np.array(R0, dtype=float)
    w = np.array(w0, dtype=float)
    gamma_des = np.asarray(gamma_des, dtype=float).reshape(3)
    n_ticks = int(round(duration / Ts))
    angles = np.empty(n_ticks)
    Kd = gains.Kd
    _kernels.attitude_run(R, w, gamma_des,
                          Kd[0, 0], Kd[0, 1], Kd[1, 0], Kd[1, 1],
                          gains.kp, gains.ki, params.inertia[0], params.inertia[1],
                          params.inertia[2], tau_max, Ts, n_ticks, angles)
    return angles


# ---------------------------------------------------------------------------
# hover solve and stiffness analyzer
# ---------------------------------------------------------------------------

def hover_currents(model: FieldModel, params: LevitatorParams, R, p,
                   gravity: float = GRAVITY) -> np.ndarray:
    """Minimum-norm currents producing zero tau_xy and weight-cancelling force."""
    N_tilde = reduced_allocation_matrix(model, R, p, params.dipole_body)
    wrench = np.array([0.0, 0.0, 0.0, 0.0, params.mass * gravity])
    return solve_currents(N_tilde, wrench)


def magnetic_force(model: FieldModel, params: LevitatorParams, R, p, currents) -> np.ndarray:
    _, g = field_and_gradient(model, p, currents)
    return force_map(R @ params.dipole_body) @ g


@dataclass(frozen=True)
class StiffnessReport:
    K: np.ndarray                  # 3x3 dF/dp at fixed currents and attitude [N/m]
    eigenvalues: np.ndarray        # ascending, of the symmetrized K
    max_eigenvalue: float
    divergence_time_constant: float | None  # sqrt(m/k_max) when k_max > 0 [s]
    trace: float


def stiffness_analysis(model: FieldModel, params: LevitatorParams, R, p,
                       currents, gravity: float = GRAVITY,
                       step: float = 1e-5) -> StiffnessReport:
    """Position stiffness of the magnetic force at a force-balanced hover.

    Central differences (fourth-order five-point stencil at the given step)
    of the force at frozen currents and attitude. The trace vanishes for a
    dipole in a source-free field, so any levitated equilibrium has at least
    one positive (unstable) eigenvalue.
    """
    p = np.asarray(p, dtype=float).reshape(3)
    currents = np.asarray(currents, dtype=float).reshape(8)
    f0 = magnetic_force(model, params, R, p, currents)
    residual = f0 - np.array([0.0, 0.0, params.mass * gravity])
    if np.linalg.norm(residual) > 1e-6:
        raise ValueError(
            f"currents do not balance gravity at this pose (residual {np.linalg.norm(residual):.3e} N)")

    K = np.empty((3, 3))
    for a in range(3):
        delta = np.zeros(3)
        delta[a] = step
        fp1 = magnetic_force(model, params, R, p + delta, currents)
        fm1 = magnetic_force(model, params, R, p - delta, currents)
        fp2 = magnetic_force(model, params, R, p + 2.0 * delta, currents)
        fm2 = magnetic_force(model, params, R, p - 2.0 * delta, currents)
        K[:, a] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step)

    eig = np.linalg.eigvalsh((K + K.T) / 2.0)
    k_max = float(eig[-1])
    tau = float(np.sqrt(params.mass / k_max)) if k_max > 0.0 else None
    return StiffnessReport(K=K, eigenvalues=eig, max_eigenvalue=k_max,
                           divergence_time_constant=tau, trace=float(np.trace(K)))
