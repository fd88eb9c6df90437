"""Hot numeric kernels for the closed-loop simulation.

Everything in this module is written in a numba-compilable subset of numpy
(explicit loops, fixed-size arrays, no Python objects). When the numba
backend is enabled the public kernels are rebound to their @njit-compiled
versions at import time; the original pure-numpy functions stay available
with a `_py` suffix for benchmarking and cross-checking.
"""

import numpy as np

from .backend import USE_NUMBA

_MU0_OVER_4PI = 1.0e-7


def field_gradient_at(centers, axes, strengths, currents, p, b_out, g_out):
    """Accumulate total field (3,) and Gradient5 (5,) at p over all coils."""
    for k in range(3):
        b_out[k] = 0.0
    for k in range(5):
        g_out[k] = 0.0
    n = centers.shape[0]
    for j in range(n):
        rx = p[0] - centers[j, 0]
        ry = p[1] - centers[j, 1]
        rz = p[2] - centers[j, 2]
        r2 = rx * rx + ry * ry + rz * rz
        rn = np.sqrt(r2)
        ax = axes[j, 0]
        ay = axes[j, 1]
        az = axes[j, 2]
        mr = ax * rx + ay * ry + az * rz
        c = _MU0_OVER_4PI * strengths[j] * currents[j]
        # field: c/r^3 * (3 (m.rhat) rhat - m)
        cb = c / (r2 * rn)
        s = 3.0 * mr / r2
        b_out[0] += cb * (s * rx - ax)
        b_out[1] += cb * (s * ry - ay)
        b_out[2] += cb * (s * rz - az)
        # gradient: 3c/r^5 * (m r' + r m' + (m.r) I - 5 (m.r) r r'/r^2)
        cg = 3.0 * c / (r2 * r2 * rn)
        q = 5.0 * mr / r2
        g_out[0] += cg * (2.0 * ax * rx + mr - q * rx * rx)       # dbx/dx
        g_out[1] += cg * (ax * ry + ay * rx - q * rx * ry)        # dbx/dy
        g_out[2] += cg * (ax * rz + az * rx - q * rx * rz)        # dbx/dz
        g_out[3] += cg * (2.0 * ay * ry + mr - q * ry * ry)       # dby/dy
        g_out[4] += cg * (ay * rz + az * ry - q * ry * rz)        # dby/dz


def _omega_dot(wx, wy, wz, tau_x, tau_y, Ixx, Iyy, Izz):
    dx = (Iyy - Izz) / Ixx * wy * wz + tau_x / Ixx
    dy = (Izz - Ixx) / Iyy * wx * wz + tau_y / Iyy
    dz = (Ixx - Iyy) / Izz * wx * wy
    return dx, dy, dz


def rk4_step(p, v, R, w, tau_x, tau_y, f, mass, Ixx, Iyy, Izz, g_const, dt):
    """One fixed-step update of the rigid-body state under a constant wrench.

    Translation is integrated exactly (the RK4 result for a constant force);
    body rates use classical RK4 including the gyroscopic terms; the rotation
    matrix is advanced by the exponential of the RK4-averaged body rate.
    Arrays are updated in place.
    """
    ax = f[0] / mass
    ay = f[1] / mass
    az = f[2] / mass - g_const

    p[0] += v[0] * dt + 0.5 * ax * dt * dt
    p[1] += v[1] * dt + 0.5 * ay * dt * dt
    p[2] += v[2] * dt + 0.5 * az * dt * dt
    v[0] += ax * dt
    v[1] += ay * dt
    v[2] += az * dt

    w1x, w1y, w1z = w[0], w[1], w[2]
    k1x, k1y, k1z = _omega_dot(w1x, w1y, w1z, tau_x, tau_y, Ixx, Iyy, Izz)
    w2x = w1x + 0.5 * dt * k1x
    w2y = w1y + 0.5 * dt * k1y
    w2z = w1z + 0.5 * dt * k1z
    k2x, k2y, k2z = _omega_dot(w2x, w2y, w2z, tau_x, tau_y, Ixx, Iyy, Izz)
    w3x = w1x + 0.5 * dt * k2x
    w3y = w1y + 0.5 * dt * k2y
    w3z = w1z + 0.5 * dt * k2z
    k3x, k3y, k3z = _omega_dot(w3x, w3y, w3z, tau_x, tau_y, Ixx, Iyy, Izz)
    w4x = w1x + dt * k3x
    w4y = w1y + dt * k3y
    w4z = w1z + dt * k3z
    k4x, k4y, k4z = _omega_dot(w4x, w4y, w4z, tau_x, tau_y, Ixx, Iyy, Izz)

    w[0] = w1x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    w[1] = w1y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    w[2] = w1z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)

    # averaged body rate over the step, weighted like the RK4 stages
    wbx = (w1x + 2.0 * w2x + 2.0 * w3x + w4x) / 6.0 * dt
    wby = (w1y + 2.0 * w2y + 2.0 * w3y + w4y) / 6.0 * dt
    wbz = (w1z + 2.0 * w2z + 2.0 * w3z + w4z) / 6.0 * dt

    # Rodrigues: E = I + a*[u]x + b*[u]x^2
    th2 = wbx * wbx + wby * wby + wbz * wbz
    th = np.sqrt(th2)
    if th < 1e-12:
        sa = 1.0 - th2 / 6.0
        sb = 0.5 - th2 / 24.0
    else:
        sa = np.sin(th) / th
        sb = (1.0 - np.cos(th)) / th2
    e00 = 1.0 + sb * (-wby * wby - wbz * wbz)
    e01 = -sa * wbz + sb * wbx * wby
    e02 = sa * wby + sb * wbx * wbz
    e10 = sa * wbz + sb * wbx * wby
    e11 = 1.0 + sb * (-wbx * wbx - wbz * wbz)
    e12 = -sa * wbx + sb * wby * wbz
    e20 = -sa * wby + sb * wbx * wbz
    e21 = sa * wbx + sb * wby * wbz
    e22 = 1.0 + sb * (-wbx * wbx - wby * wby)

    for i in range(3):
        r0 = R[i, 0]
        r1 = R[i, 1]
        r2 = R[i, 2]
        R[i, 0] = r0 * e00 + r1 * e10 + r2 * e20
        R[i, 1] = r0 * e01 + r1 * e11 + r2 * e21
        R[i, 2] = r0 * e02 + r1 * e12 + r2 * e22


def orthonormality_drift(R):
    """Frobenius norm of R'R - I."""
    s = 0.0
    for i in range(3):
        for j in range(3):
            d = R[0, i] * R[0, j] + R[1, i] * R[1, j] + R[2, i] * R[2, j]
            if i == j:
                d -= 1.0
            s += d * d
    return np.sqrt(s)


def physics_tick(p, v, R, w, i_actual, i_cmd, centers, axes, strengths, mbz,
                 mass, Ixx, Iyy, Izz, g_const, lag_factor, dt, n_sub, f_ext):
    """Advance the plant over one controller period (n_sub physics substeps).

    Per substep: first-order current-driver lag toward the held setpoints,
    magnetic wrench evaluated at the true pose, then one rk4_step. f_ext is
    a constant world-frame disturbance force. Arrays updated in place.
    """
    b = np.empty(3)
    g = np.empty(5)
    f = np.empty(3)
    for _ in range(n_sub):
        for j in range(i_actual.shape[0]):
            i_actual[j] = i_cmd[j] + (i_actual[j] - i_cmd[j]) * lag_factor
        field_gradient_at(centers, axes, strengths, i_actual, p, b, g)
        # body torque of the axial dipole (0, 0, mbz): tau = m x (R' b)
        bbx = R[0, 0] * b[0] + R[1, 0] * b[1] + R[2, 0] * b[2]
        bby = R[0, 1] * b[0] + R[1, 1] * b[1] + R[2, 1] * b[2]
        tau_x = -mbz * bby
        tau_y = mbz * bbx
        # world force on the dipole m_world = mbz * R[:, 2]
        mx = mbz * R[0, 2]
        my = mbz * R[1, 2]
        mz = mbz * R[2, 2]
        f[0] = mx * g[0] + my * g[1] + mz * g[2] + f_ext[0]
        f[1] = mx * g[1] + my * g[3] + mz * g[4] + f_ext[1]
        f[2] = mx * g[2] + my * g[4] - mz * (g[0] + g[3]) + f_ext[2]
        rk4_step(p, v, R, w, tau_x, tau_y, f, mass, Ixx, Iyy, Izz, g_const, dt)


def attitude_run(R, w, gamma_des, kd00, kd01, kd10, kd11, kp, ki,
                 Ixx, Iyy, Izz, tau_max, Ts, n_ticks, angle_out):
    """Closed-loop rotational subsystem only: the reduced-attitude controller
    at the tick rate with ideal torque delivery (clamped at tau_max), RK4
    plant at the same step. Records the angle to gamma_des per tick.
    Used for region-of-attraction sweeps. Arrays updated in place."""
    int_x = 0.0
    int_y = 0.0
    zero_f = np.zeros(3)
    for k in range(n_ticks):
        gx = R[0, 2]
        gy = R[1, 2]
        gz = R[2, 2]
        dot = gx * gamma_des[0] + gy * gamma_des[1] + gz * gamma_des[2]
        if dot > 1.0:
            dot = 1.0
        if dot < -1.0:
            dot = -1.0
        angle_out[k] = np.arccos(dot)
        # e = E R' (gamma x gamma_des)
        cx = gy * gamma_des[2] - gz * gamma_des[1]
        cy = gz * gamma_des[0] - gx * gamma_des[2]
        cz = gx * gamma_des[1] - gy * gamma_des[0]
        ex = R[0, 0] * cx + R[1, 0] * cy + R[2, 0] * cz
        ey = R[0, 1] * cx + R[1, 1] * cy + R[2, 1] * cz
        int_x += ex * Ts
        int_y += ey * Ts
        tau_x = (-(kd00 * w[0] + kd01 * w[1]) + kp * ex + ki * int_x) * Ixx
        tau_y = (-(kd10 * w[0] + kd11 * w[1]) + kp * ey + ki * int_y) * Iyy
        if tau_x > tau_max:
            tau_x = tau_max
        if tau_x < -tau_max:
            tau_x = -tau_max
        if tau_y > tau_max:
            tau_y = tau_max
        if tau_y < -tau_max:
            tau_y = -tau_max
        p_dummy = zero_f.copy()
        v_dummy = zero_f.copy()
        rk4_step(p_dummy, v_dummy, R, w, tau_x, tau_y, zero_f,
                 1.0, Ixx, Iyy, Izz, 0.0, Ts)


# keep the pure-numpy versions importable regardless of backend
field_gradient_at_py = field_gradient_at
rk4_step_py = rk4_step
orthonormality_drift_py = orthonormality_drift
physics_tick_py = physics_tick
attitude_run_py = attitude_run

if USE_NUMBA:
    from numba import njit

    _opts = dict(cache=True, fastmath=False)
    # compile bottom-up so callers resolve the compiled callees
    field_gradient_at = njit(**_opts)(field_gradient_at)
    _omega_dot = njit(**_opts)(_omega_dot)
    rk4_step = njit(**_opts)(rk4_step)
    orthonormality_drift = njit(**_opts)(orthonormality_drift)
    physics_tick = njit(**_opts)(physics_tick)
    attitude_run = njit(**_opts)(attitude_run)
