import numpy as np
import pytest

from maglevsim.magnetics import reduced_allocation_matrix
from maglevsim.sim_harness import (Scenario, SensorModel, SimConfig, SimLog,
                                   SIMLOG_CSV_HEADER,
                                   default_attitude_step_sequence, driver_step,
                                   estimate_body_rate, estimate_velocity,
                                   gamma_from_roll_pitch, initial_rotation,
                                   run_closed_loop, trajectory)
from maglevsim.so3 import euler_xyz_to_matrix, exp_so3

from conftest import random_rotation


class TestDriver:
    def test_one_time_constant(self):
        # 2*pi*fc*dt = 1 gives the classic 63.2% first-order step response
        i = driver_step(np.zeros(1), np.ones(1), fc=1.0 / (2.0 * np.pi), dt=1.0)
        assert abs(i[0] - (1.0 - np.exp(-1.0))) < 1e-12

    def test_composition(self):
        # two half-steps equal one full step (exact discretization)
        i0 = np.array([0.3, -1.2])
        tgt = np.array([1.0, 2.0])
        one = driver_step(i0, tgt, 26.4, 1e-3)
        two = driver_step(driver_step(i0, tgt, 26.4, 5e-4), tgt, 26.4, 5e-4)
        assert np.allclose(one, two, rtol=1e-14)

    def test_fixed_point(self):
        tgt = np.array([1.5])
        assert np.allclose(driver_step(tgt, tgt, 26.4, 1e-3), tgt)

    def test_validation(self):
        with pytest.raises(ValueError):
            driver_step(np.zeros(1), np.ones(1), 0.0, 1e-3)


class TestEstimators:
    def test_velocity_exact_on_ramp(self):
        v = np.array([0.1, -0.2, 0.05])
        p0 = np.array([0.01, 0.0, -0.01])
        assert np.allclose(estimate_velocity(p0 + v * 1e-3, p0, 1e-3), v)

    def test_body_rate_exact_on_constant_rate(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            R0 = random_rotation(rng)
            w = rng.standard_normal(3) * 3.0
            R1 = R0 @ exp_so3(w * 1e-3)
            assert np.allclose(estimate_body_rate(R1, R0, 1e-3), w, atol=1e-9)


class TestSensor:
    def test_delay_line(self):
        rng = np.random.default_rng(0)
        sensor = SensorModel(delay_ticks=4, pos_noise_std=0.0,
                             att_noise_std=0.0, rng=rng)
        R = np.eye(3)
        outputs = []
        for k in range(10):
            p, _ = sensor.measure(np.array([float(k), 0.0, 0.0]), R)
            outputs.append(p[0])
        # first samples repeat the oldest entry, then a clean 4-tick lag
        assert outputs[:5] == [0.0] * 5
        assert outputs[5:] == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_noise_statistics(self):
        rng = np.random.default_rng(1)
        sensor = SensorModel(0, 5e-5, 1e-3, rng)
        ps = np.array([sensor.measure(np.zeros(3), np.eye(3))[0] for _ in range(4000)])
        assert abs(np.std(ps) - 5e-5) < 5e-6
        assert abs(np.mean(ps)) < 5e-6


class TestTrajectory:
    def test_hover(self):
        scen = Scenario(kind="hover", hover_point=[0.0, 0.0, 0.01])
        p, v, g = trajectory(3.0, scen)
        assert np.array_equal(p, [0.0, 0.0, 0.01])
        assert np.array_equal(v, np.zeros(3))
        assert np.array_equal(g, [0.0, 0.0, 1.0])

    def test_attitude_steps_selection(self):
        scen = Scenario(kind="attitude_steps",
                        attitude_steps=default_attitude_step_sequence())
        _, _, g0 = trajectory(0.5, scen)
        assert np.array_equal(g0, [0.0, 0.0, 1.0])
        _, _, g1 = trajectory(2.5, scen)
        assert np.allclose(g1, gamma_from_roll_pitch(np.pi / 4, 0.0))
        # roll +45 deg tilts body z toward -y in the world
        assert np.allclose(g1, [0.0, -np.sqrt(0.5), np.sqrt(0.5)])

    def test_figure_eight_consistency(self):
        scen = Scenario(kind="figure_eight", amplitude_x=0.01,
                        amplitude_y=0.005, period=10.0)
        h = 1e-7
        for t in (0.0, 1.3, 4.9, 7.2):
            p0, v0, _ = trajectory(t, scen)
            pp, _, _ = trajectory(t + h, scen)
            pm, _, _ = trajectory(t - h, scen)
            assert np.allclose((pp - pm) / (2 * h), v0, atol=1e-6)

    def test_position_steps(self):
        scen = Scenario(kind="position_steps",
                        position_steps=[(0.0, 0, 0, 0), (1.0, 0.01, 0, 0)])
        p, _, _ = trajectory(0.999, scen)
        assert p[0] == 0.0
        p, _, _ = trajectory(1.0, scen)
        assert p[0] == 0.01

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            Scenario(kind="spiral")

    def test_initial_rotation_matches_first_step(self):
        scen = Scenario(kind="attitude_steps",
                        attitude_steps=[(0.0, 0.2, -0.1), (2.0, 0.0, 0.0)])
        R0 = initial_rotation(scen)
        assert np.allclose(R0[:, 2], gamma_from_roll_pitch(0.2, -0.1))


class TestSimConfig:
    def test_divisibility_validation(self):
        with pytest.raises(ValueError):
            SimConfig(Ts=1e-3, physics_step=3e-4)
        with pytest.raises(ValueError):
            SimConfig(loop_delay=1.5e-3)
        cfg = SimConfig()
        assert cfg.n_sub == 10
        assert cfg.delay_ticks == 4


class TestClosedLoop:
    def test_determinism(self):
        cfg = SimConfig(duration=0.5, seed=42,
                        initial_offset=[0.0, 0.0, 0.002])
        a = run_closed_loop(cfg)
        b = run_closed_loop(cfg)
        assert np.array_equal(a.p, b.p)
        assert np.array_equal(a.i_cmd, b.i_cmd)
        assert np.array_equal(a.quat, b.quat)

    def test_seed_changes_noise(self):
        cfg = SimConfig(duration=0.3, seed=0)
        a = run_closed_loop(cfg)
        cfg.seed = 1
        b = run_closed_loop(cfg)
        assert not np.array_equal(a.p_est, b.p_est)

    def test_zero_gravity_equilibrium(self):
        # nothing to do: no gravity, no offset, no noise -> exactly at rest
        cfg = SimConfig(duration=0.2, gravity=0.0, pos_noise_std=0.0,
                        att_noise_std=0.0)
        log = run_closed_loop(cfg)
        assert not log.diverged
        assert np.max(np.abs(log.p)) == 0.0
        assert np.max(np.abs(log.i_cmd)) == 0.0

    def test_logged_commands_consistent_with_allocation(self, model, params):
        # with zero noise and zero delay the measurement equals the logged
        # state, so the logged currents must reproduce the logged wrench
        cfg = SimConfig(duration=0.3, pos_noise_std=0.0, att_noise_std=0.0,
                        loop_delay=0.0, initial_offset=[0.001, 0.0, 0.002])
        log = run_closed_loop(cfg)
        assert not log.diverged
        assert np.all(log.sat_flags == 0)
        for k in range(0, log.t.size, 37):
            R = euler_xyz_to_matrix(*log.euler[k])
            N = reduced_allocation_matrix(model, R, log.p[k], params.dipole_body)
            wrench = np.concatenate([log.tau_cmd[k], log.f_cmd[k]])
            assert np.allclose(N @ log.i_cmd[k], wrench, atol=1e-10)

    def test_divergence_flagged_at_large_sample_time(self):
        cfg = SimConfig(Ts=0.02, physics_step=2e-3, loop_delay=0.0,
                        duration=5.0, initial_offset=[0.0, 0.0, 0.003])
        log = run_closed_loop(cfg)
        assert log.diverged
        assert log.divergence_time is not None
        assert log.divergence_time < 5.0

    def test_log_shapes_and_csv(self, tmp_path):
        cfg = SimConfig(duration=0.1)
        log = run_closed_loop(cfg)
        n = log.t.size
        assert n == 100
        assert log.p.shape == (n, 3)
        assert log.quat.shape == (n, 4)
        assert log.i_cmd.shape == (n, 8)
        path = tmp_path / "log.csv"
        log.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].split(",") == SIMLOG_CSV_HEADER
        assert len(lines) == n + 1
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert np.allclose(data["pz"], log.p[:, 2])
        assert np.allclose(data["i3"], log.i_cmd[:, 2])

    def test_summary_fields(self):
        cfg = SimConfig(duration=0.2)
        summary = run_closed_loop(cfg).summary()
        assert summary["diverged"] is False
        assert len(summary["rms_position_error_m"]) == 3
        assert summary["max_abs_current_A"] < 4.0
