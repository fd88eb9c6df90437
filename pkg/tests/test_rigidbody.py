import numpy as np
import pytest

from maglevsim.magnetics import LevitatorParams
from maglevsim.rigidbody import RigidBodyState, dynamics_derivative, step
from maglevsim.so3 import check_rotation, hat

from conftest import random_rotation

ZERO_TAU = np.zeros(2)
ZERO_F = np.zeros(3)


def run(state, tau, f, params, dt, n, gravity=9.81):
    for _ in range(n):
        state = step(state, tau, f, params, dt, gravity=gravity)
    return state


def test_free_fall(params):
    state = run(RigidBodyState(), ZERO_TAU, ZERO_F, params, 1e-3, 100)
    assert abs(state.p[2] - (-0.5 * 9.81 * 0.1**2)) < 1e-9
    assert abs(state.v[2] - (-9.81 * 0.1)) < 1e-12
    assert np.allclose(state.R, np.eye(3))
    assert np.all(state.omega_body == 0.0)


def test_constant_force_trajectory(params):
    # force + gravity gives a known parabola on each axis
    f = np.array([0.01, -0.02, params.mass * 9.81 + 0.005])
    state = run(RigidBodyState(), ZERO_TAU, f, params, 1e-3, 500)
    a = f / params.mass - np.array([0.0, 0.0, 9.81])
    t = 0.5
    assert np.allclose(state.p, 0.5 * a * t**2, atol=1e-9)
    assert np.allclose(state.v, a * t, atol=1e-9)


def test_symmetric_top_invariants():
    # symmetric inertia: |omega| and the axial rate are exactly conserved
    params = LevitatorParams(inertia=[5.9e-6, 5.9e-6, 1.14e-6])
    w0 = np.array([1.0, -0.5, 8.0])
    state = RigidBodyState(omega_body=w0)
    state = run(state, ZERO_TAU, ZERO_F, params, 1e-3, 10_000, gravity=0.0)
    assert abs(np.linalg.norm(state.omega_body) - np.linalg.norm(w0)) < 1e-9
    assert abs(state.omega_body[2] - w0[2]) < 1e-9


def test_torque_free_energy_and_momentum():
    params = LevitatorParams(inertia=[6.21e-6, 5.63e-6, 1.14e-6])
    rng = np.random.default_rng(10)
    I = params.inertia
    for _ in range(5):
        w0 = rng.uniform(-5.0, 5.0, 3)
        state = RigidBodyState(R=random_rotation(rng), omega_body=w0)
        E0 = 0.5 * np.sum(I * w0**2)
        L0 = state.R @ (I * w0)
        state = run(state, ZERO_TAU, ZERO_F, params, 1e-4, 10_000, gravity=0.0)
        E1 = 0.5 * np.sum(I * state.omega_body**2)
        L1 = state.R @ (I * state.omega_body)
        assert abs(E1 - E0) / E0 < 1e-8
        assert np.linalg.norm(L1 - L0) / np.linalg.norm(L0) < 1e-6


def test_orthonormality_long_run(params):
    state = RigidBodyState(omega_body=[2.0, -3.0, 10.0])
    state = run(state, ZERO_TAU, ZERO_F, params, 1e-4, 100_000, gravity=0.0)
    assert np.linalg.norm(state.R.T @ state.R - np.eye(3)) < 1e-9
    check_rotation(state.R)


def test_rk4_convergence_order():
    # asymmetric torque-free tumble; halving the step should shrink the
    # endpoint error by ~2^4
    params = LevitatorParams(inertia=[6.21e-6, 5.63e-6, 1.14e-6])
    w0 = np.array([8.0, 1.0, 6.0])
    T = 0.4

    def endpoint(dt):
        state = RigidBodyState(omega_body=w0)
        return run(state, ZERO_TAU, ZERO_F, params, dt, int(round(T / dt)),
                   gravity=0.0).omega_body

    ref = endpoint(3.125e-5)
    e1 = np.linalg.norm(endpoint(1e-3) - ref)
    e2 = np.linalg.norm(endpoint(5e-4) - ref)
    assert 10.0 < e1 / e2 < 22.0


def test_torque_spins_up(params):
    Ixx = params.inertia[0]
    tau = np.array([1e-5, 0.0])
    state = run(RigidBodyState(), tau, ZERO_F, params, 1e-4, 1000, gravity=0.0)
    # for small total angle the gyroscopic coupling is negligible
    assert abs(state.omega_body[0] - tau[0] / Ixx * 0.1) < 1e-4


def test_dynamics_derivative_matches_step(params):
    rng = np.random.default_rng(11)
    state = RigidBodyState(p=rng.standard_normal(3) * 0.01,
                           v=rng.standard_normal(3) * 0.1,
                           R=random_rotation(rng),
                           omega_body=rng.standard_normal(3))
    tau = rng.standard_normal(2) * 1e-4
    f = rng.standard_normal(3) * 0.1
    pdot, vdot, Rdot, omegadot = dynamics_derivative(state, tau, f, params)
    assert np.array_equal(pdot, state.v)
    assert np.allclose(vdot, f / params.mass - [0, 0, 9.81])
    assert np.allclose(Rdot, state.R @ hat(state.omega_body))
    # a tiny Euler step from the derivative should agree with step() to O(dt^2)
    dt = 1e-7
    nxt = step(state, tau, f, params, dt)
    assert np.allclose(nxt.v, state.v + vdot * dt, atol=1e-12)
    assert np.allclose(nxt.omega_body, state.omega_body + omegadot * dt, atol=1e-11)
    assert np.allclose(nxt.R, state.R + Rdot * dt, atol=1e-12)


def test_step_validates_dt(params):
    with pytest.raises(ValueError):
        step(RigidBodyState(), ZERO_TAU, ZERO_F, params, 0.0)
    with pytest.raises(ValueError):
        step(RigidBodyState(), ZERO_TAU, ZERO_F, params, 0.02)


def test_step_does_not_mutate_input(params):
    state = RigidBodyState(omega_body=[1.0, 2.0, 3.0])
    before = state.copy()
    step(state, ZERO_TAU, ZERO_F, params, 1e-3)
    assert np.array_equal(state.p, before.p)
    assert np.array_equal(state.R, before.R)
    assert np.array_equal(state.omega_body, before.omega_body)
