#!/usr/bin/env python3
"""Benchmark the physics inner loop on both backends.

Runs itself twice in subprocesses, once with MAGLEVSIM_NUMBA=1 (jit) and once
with MAGLEVSIM_NUMBA=0 (pure numpy), and reports the per-tick cost of the
plant kernel plus the wall time of a full closed-loop hover run.

    python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def run_one_backend():
    from maglevsim import _kernels
    from maglevsim.backend import backend_name
    from maglevsim.fieldmodel import default_field_model
    from maglevsim.magnetics import LevitatorParams
    from maglevsim.sim_harness import SimConfig, run_closed_loop

    model = default_field_model()
    params = LevitatorParams()
    centers = np.ascontiguousarray(model.centers)
    axes = np.ascontiguousarray(model.axes)
    strengths = np.ascontiguousarray(model.strengths)
    Ixx, Iyy, Izz = params.inertia

    p = np.array([0.0, 0.0, 0.001])
    v = np.zeros(3)
    R = np.eye(3)
    w = np.zeros(3)
    i_act = np.zeros(8)
    i_cmd = np.full(8, 0.5)
    f_ext = np.zeros(3)
    lag = float(np.exp(-2.0 * np.pi * 26.4 * 1e-4))

    def tick():
        _kernels.physics_tick(p, v, R, w, i_act, i_cmd, centers, axes,
                              strengths, params.dipole_body[2], params.mass,
                              Ixx, Iyy, Izz, 9.81, lag, 1e-4, 10, f_ext)

    tick()  # trigger compilation / warm caches
    n = 2000
    t0 = time.perf_counter()
    for _ in range(n):
        tick()
    per_tick = (time.perf_counter() - t0) / n
    print(f"[{backend_name():>5}] physics_tick (10 substeps): "
          f"{per_tick * 1e6:8.1f} us/tick")

    cfg = SimConfig(duration=2.0, seed=0)
    run_closed_loop(cfg)  # warm
    t0 = time.perf_counter()
    run_closed_loop(cfg)
    wall = time.perf_counter() - t0
    print(f"[{backend_name():>5}] closed-loop hover:          "
          f"{wall / cfg.duration:8.2f} s wall per simulated second")


def main():
    if os.environ.get("_MAGLEVSIM_BENCH_CHILD"):
        run_one_backend()
        return
    here = os.path.abspath(__file__)
    for flag in ("1", "0"):
        env = dict(os.environ, MAGLEVSIM_NUMBA=flag, _MAGLEVSIM_BENCH_CHILD="1")
        subprocess.run([sys.executable, here], env=env, check=True)


if __name__ == "__main__":
    main()
