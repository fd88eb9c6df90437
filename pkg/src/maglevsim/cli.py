"""Command-line front end: closed-loop simulation runs, field-model
calibration, LQR design reports, and hover stiffness analysis.

Scenario files are strict JSON: unknown keys are rejected by name; keys
called "comment" or starting with "_" are ignored everywhere so values can
be annotated in place.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .allocation import RankDeficiencyError
from .attitude_control import AttitudeGains
from .calibration import fit_mpem
from .fieldmodel import FieldModel, default_field_model, load_samples_csv, predict_fields
from .magnetics import LevitatorParams
from .sim_harness import (Scenario, SimConfig, hover_currents, run_closed_loop,
                          stiffness_analysis)
from .translation_control import (DareConvergenceError, TranslationGains,
                                  closed_loop_spectral_radius, dare_residual,
                                  design_translation, solve_dare)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_SOLVER = 3


class ScenarioError(ValueError):
    pass


def _check_keys(doc: dict, allowed, context: str) -> dict:
    out = {}
    for key, value in doc.items():
        if key == "comment" or key.startswith("_"):
            continue
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r} in {context}")
        out[key] = value
    return out


def _load_field_model(entry, base_dir: Path) -> FieldModel:
    if entry is None:
        return default_field_model()
    if isinstance(entry, str):
        path = Path(entry)
        if not path.is_absolute():
            path = base_dir / path
        return FieldModel.load(path)
    if isinstance(entry, dict):
        return FieldModel.from_json(json.dumps(entry))
    raise ScenarioError("field_model must be a path or an inline coil object")


def _levitator(doc: dict) -> LevitatorParams:
    doc = _check_keys(doc, {"mass", "inertia", "dipole_body", "current_limit"}, "levitator")
    return LevitatorParams(**doc)


def _gains(doc: dict):
    doc = _check_keys(doc, {"attitude", "translation"}, "gains")
    att = _check_keys(doc.get("attitude", {}),
                      {"Kd", "kp", "ki", "torque_integral_limit"}, "gains.attitude")
    if "Kd" in att:
        Kd = np.asarray(att["Kd"], dtype=float)
        att["Kd"] = np.diag(Kd) if Kd.ndim == 1 else Kd
    trans = _check_keys(doc.get("translation", {}),
                        {"Q", "rho", "xi", "ki"}, "gains.translation")
    return AttitudeGains(**att), TranslationGains(**trans)


def _scenario(doc: dict) -> Scenario:
    doc = _check_keys(doc, {"kind", "hover_point", "amplitude_x", "amplitude_y",
                            "period", "attitude_steps", "position_steps"}, "trajectory")
    try:
        return Scenario(**doc)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


_SIM_KEYS = {"Ts", "physics_step", "duration", "corner_frequency", "loop_delay",
             "pos_noise_std", "att_noise_std", "seed", "gravity",
             "disturbance_force", "initial_offset"}


def load_scenario(path) -> SimConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: {exc}") from exc
    doc = _check_keys(doc, {"field_model", "levitator", "gains", "sim", "trajectory"},
                      "scenario")
    model = _load_field_model(doc.get("field_model"), path.parent)
    levitator = _levitator(doc.get("levitator", {}))
    att_gains, trans_gains = _gains(doc.get("gains", {}))
    sim = _check_keys(doc.get("sim", {}), _SIM_KEYS, "sim")
    scenario = _scenario(doc.get("trajectory", {"kind": "hover"}))
    try:
        return SimConfig(scenario=scenario, attitude_gains=att_gains,
                         translation_gains=trans_gains, levitator=levitator,
                         field_model=model, **sim)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc


PLOT_HELPER = '''\
#!/usr/bin/env python3
"""Plot a simulation log CSV: positions, attitude, and coil currents."""
import sys
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "log.csv"
data = np.genfromtxt(path, delimiter=",", names=True)
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 9))
for axis, des in (("px", "px_des"), ("py", "py_des"), ("pz", "pz_des")):
    axes[0].plot(data["t"], data[axis], label=axis)
    axes[0].plot(data["t"], data[des], "--", label=des)
axes[0].set_ylabel("position [m]"); axes[0].legend(ncol=3, fontsize=8)
for ang in ("roll", "pitch", "yaw"):
    axes[1].plot(data["t"], np.degrees(data[ang]), label=ang)
axes[1].set_ylabel("attitude [deg]"); axes[1].legend()
for k in range(1, 9):
    axes[2].plot(data["t"], data[f"i{k}"], label=f"i{k}", lw=0.8)
axes[2].set_ylabel("current [A]"); axes[2].set_xlabel("t [s]"); axes[2].legend(ncol=4, fontsize=8)
fig.tight_layout()
plt.show()
'''


def cmd_simulate(args) -> int:
    try:
        config = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    seeds = range(config.seed, config.seed + args.seeds)
    summaries = []
    any_diverged = False
    for n, seed in enumerate(seeds):
        config.seed = seed
        log = run_closed_loop(config)
        csv_path = out if args.seeds == 1 else out.with_suffix(f".seed{seed}{out.suffix}")
        log.to_csv(csv_path)
        summary = log.summary()
        summary["seed"] = seed
        summary["log"] = str(csv_path)
        summaries.append(summary)
        any_diverged = any_diverged or log.diverged
        if not args.quiet:
            status = "DIVERGED" if log.diverged else "ok"
            print(f"seed {seed}: {status}, rms position error "
                  f"{summary['rms_position_error_m']} m -> {csv_path}")
    summary_path = out.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(
        summaries[0] if args.seeds == 1 else summaries, indent=2))
    (out.parent / "plot_log.py").write_text(PLOT_HELPER)
    if not args.quiet:
        print(f"summary: {summary_path}")
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        samples = load_samples_csv(args.data)
        init = FieldModel.load(args.init) if args.init else default_field_model()
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    # hold out every fifth sample for an independent prediction check
    held_out = samples[::5]
    train = [s for k, s in enumerate(samples) if k % 5 != 0]
    try:
        model, report = fit_mpem(train, init)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    model.save(args.out)
    positions = np.array([s.position for s in held_out])
    currents = np.array([s.coil_currents for s in held_out])
    measured = np.array([s.measured_field for s in held_out])
    predicted = predict_fields(model, positions, currents)
    held_rms = float(np.sqrt(np.mean((predicted - measured) ** 2)))
    field_rms = float(np.sqrt(np.mean(measured**2)))
    if not args.quiet:
        print(f"fit: residual RMS {report.residual_rms:.3e} T in "
              f"{report.iterations} iterations, converged={report.converged}")
        if report.condition_warning:
            print("warning: Jacobian condition number exceeded 1e12", file=sys.stderr)
        print(f"held-out field prediction RMS: {held_rms:.3e} T "
              f"({100.0 * held_rms / field_rms:.3f}% of field RMS)")
        print(f"model written to {args.out}")
    return EXIT_OK if report.converged else EXIT_SOLVER


def cmd_design_lqr(args) -> int:
    try:
        config = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        designs = design_translation(config.translation_gains,
                                     config.levitator.mass, config.Ts)
    except DareConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for name, d in zip("xyz", designs):
        A, B = d.model.A, d.model.B
        Tx_inv = np.diag(1.0 / np.diag(d.Tx))
        A_bar = Tx_inv @ A @ d.Tx
        B_bar = (Tx_inv @ B) * d.Tu
        P_bar = solve_dare(A_bar, B_bar, d.Q, d.rho)
        residual = dare_residual(A_bar, B_bar, d.Q, d.rho, P_bar)
        eigs = np.linalg.eigvals(A - np.outer(B, d.K))
        print(f"axis {name}: K = [{d.K[0]:.6f}, {d.K[1]:.6f}]  "
              f"closed-loop eigenvalues {np.round(eigs, 6)}  "
              f"spectral radius {closed_loop_spectral_radius(d):.6f}  "
              f"DARE residual {residual:.3e}")
    return EXIT_OK


def cmd_analyze_stiffness(args) -> int:
    try:
        config = load_scenario(args.scenario)
        pose = np.array([float(x) for x in args.pose.split(",")])
        if pose.size != 3:
            raise ScenarioError("--pose must be x,y,z")
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    R = np.eye(3)
    try:
        currents = hover_currents(config.field_model, config.levitator, R, pose,
                                  config.gravity)
        report = stiffness_analysis(config.field_model, config.levitator, R,
                                    pose, currents, config.gravity)
    except (RankDeficiencyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"hover currents [A]: {np.round(currents, 4)}")
    print(f"stiffness matrix [N/m]:\n{np.round(report.K, 4)}")
    print(f"eigenvalues [N/m]: {np.round(report.eigenvalues, 6)}")
    print(f"trace [N/m]: {report.trace:.3e}")
    print(f"most unstable stiffness: {report.max_eigenvalue:.4f} N/m")
    if report.divergence_time_constant is not None:
        print(f"divergence time constant: {report.divergence_time_constant * 1e3:.2f} ms")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maglevsim",
        description="Magnetic levitation simulation and design tools")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a closed-loop scenario")
    sim.add_argument("--scenario", required=True, help="scenario JSON path")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seeds", type=int, default=1,
                     help="number of consecutive seeds to run")
    sim.add_argument("--quiet", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    cal = sub.add_parser("calibrate", help="fit a field model to measurements")
    cal.add_argument("--data", required=True, help="calibration CSV path")
    cal.add_argument("--init", default=None,
                     help="initial model JSON (default: built-in layout)")
    cal.add_argument("--out", required=True, help="fitted model JSON path")
    cal.add_argument("--quiet", action="store_true")
    cal.set_defaults(func=cmd_calibrate)

    lqr = sub.add_parser("design-lqr", help="print the per-axis LQR designs")
    lqr.add_argument("--scenario", required=True)
    lqr.set_defaults(func=cmd_design_lqr)

    stiff = sub.add_parser("analyze-stiffness",
                           help="hover stiffness / instability analysis")
    stiff.add_argument("--scenario", required=True)
    stiff.add_argument("--pose", default="0,0,0", help="position x,y,z [m]")
    stiff.set_defaults(func=cmd_analyze_stiffness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
