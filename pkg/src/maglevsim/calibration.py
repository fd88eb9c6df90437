"""Least-squares calibration of the per-coil dipole parameters from field
measurements (Levenberg-Marquardt over center, axis, and strength).

The axis is updated through two tangent-plane coordinates that are re-anchored
and renormalized after every accepted step, so the unit-norm invariant holds
exactly throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import NUM_COILS
from .fieldmodel import CoilSource, FieldModel, FieldSample, predict_fields

PARAMS_PER_COIL = 6  # center (3) + axis tangent coords (2) + strength (1)


@dataclass(frozen=True)
class FitReport:
    residual_rms: float      # RMS of the per-axis field residuals [T]
    iterations: int
    converged: bool
    condition_warning: bool  # Jacobian condition number exceeded 1e12
    final_cost: float


def _tangent_basis(axis: np.ndarray):
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(axis, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(axis, t1)
    return t1, t2


class _Parameterization:
    """Flat parameter vector <-> FieldModel, with per-coil axis anchors."""

    def __init__(self, model: FieldModel):
        self.anchor_axes = [c.axis.copy() for c in model.coils]
        self.bases = [_tangent_basis(a) for a in self.anchor_axes]
        x = []
        for c in model.coils:
            x.extend(c.center)
            x.extend([0.0, 0.0])
            x.append(c.strength)
        self.x0 = np.array(x)

    def unpack(self, x: np.ndarray) -> FieldModel:
        coils = []
        for j in range(NUM_COILS):
            seg = x[j * PARAMS_PER_COIL:(j + 1) * PARAMS_PER_COIL]
            t1, t2 = self.bases[j]
            axis = self.anchor_axes[j] + seg[3] * t1 + seg[4] * t2
            axis /= np.linalg.norm(axis)
            coils.append(CoilSource(seg[:3].copy(), axis, seg[5]))
        return FieldModel(tuple(coils))

    def scales(self) -> np.ndarray:
        s = np.empty(NUM_COILS * PARAMS_PER_COIL)
        for j in range(NUM_COILS):
            base = j * PARAMS_PER_COIL
            s[base:base + 3] = 0.1            # centers live at ~0.1 m
            s[base + 3:base + 5] = 1.0        # tangent coords are O(1)
            s[base + 5] = max(abs(self.x0[base + 5]), 1.0)
        return s


def _residuals(param: _Parameterization, x, positions, currents, fields) -> np.ndarray:
    model = param.unpack(x)
    return (predict_fields(model, positions, currents) - fields).ravel()


def _jacobian(param: _Parameterization, x, positions, currents, fields) -> np.ndarray:
    n = x.size
    J = np.empty((positions.shape[0] * 3, n))
    h = 6e-6 * param.scales()
    for k in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h[k]
        xm[k] -= h[k]
        rp = _residuals(param, xp, positions, currents, fields)
        rm = _residuals(param, xm, positions, currents, fields)
        J[:, k] = (rp - rm) / (2.0 * h[k])
    return J


def fit_mpem(samples, initial_guess: FieldModel, max_iter: int = 200,
             cost_tol: float = 1e-12):
    """Fit the 8-coil dipole model to field samples.

    Damped Gauss-Newton (Levenberg-Marquardt, lambda starting at 1e-3 with a
    x10 / /10 schedule) on all per-coil parameters. Returns the best model
    and a FitReport; a non-converged fit is returned flagged, not raised.
    """
    samples = list(samples)
    min_residuals = NUM_COILS * 7
    if 3 * len(samples) < min_residuals:
        raise ValueError(f"need at least {min_residuals} scalar residuals, "
                         f"got {3 * len(samples)}")
    positions = np.array([s.position for s in samples])
    currents = np.array([s.coil_currents for s in samples])
    fields = np.array([s.measured_field for s in samples])

    param = _Parameterization(initial_guess)
    x = param.x0.copy()
    r = _residuals(param, x, positions, currents, fields)
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    converged = False
    condition_warning = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        J = _jacobian(param, x, positions, currents, fields)
        if np.linalg.cond(J) > 1e12:
            condition_warning = True
        H = J.T @ J
        grad = J.T @ r
        accepted = False
        for _ in range(50):
            damped = H + lam * np.diag(np.diag(H))
            try:
                dx = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_trial = x + dx
            r_trial = _residuals(param, x_trial, positions, currents, fields)
            cost_trial = 0.5 * float(r_trial @ r_trial)
            if cost_trial < cost:
                accepted = True
                lam = max(lam / 10.0, 1e-14)
                rel_decrease = (cost - cost_trial) / max(cost, 1e-300)
                # re-anchor the axis parameterization at the accepted iterate
                model = param.unpack(x_trial)
                param = _Parameterization(model)
                x = param.x0.copy()
                r = r_trial
                cost = cost_trial
                if rel_decrease < cost_tol:
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not accepted:
            # damping exhausted without improvement: treat as converged to a
            # (possibly local) minimum rather than looping to max_iter
            converged = True
            break

    model = param.unpack(x)
    rms = float(np.sqrt(np.mean(r**2)))
    report = FitReport(residual_rms=rms, iterations=iterations,
                       converged=converged, condition_warning=condition_warning,
                       final_cost=cost)
    return model, report


def grid_positions(n: int = 4, span: float = 0.05, repeats: int = 5) -> np.ndarray:
    """n x n x n grid centered at the workspace origin, tiled `repeats` times
    (320 sample positions for the defaults, matching a 4x4x4 sensor cube
    read out under several excitation patterns)."""
    axis = np.linspace(-span / 2.0, span / 2.0, n)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    grid = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    return np.tile(grid, (repeats, 1))


def synthetic_samples(model: FieldModel, positions: np.ndarray, rng,
                      current_scale: float = 2.0, noise_rel: float = 0.0):
    """Generate FieldSamples from a known model with random excitations.

    noise_rel adds multiplicative Gaussian noise to each field component.
    """
    positions = np.asarray(positions, dtype=float)
    currents = rng.uniform(-current_scale, current_scale,
                           size=(positions.shape[0], NUM_COILS))
    fields = predict_fields(model, positions, currents)
    if noise_rel > 0.0:
        fields = fields * (1.0 + noise_rel * rng.standard_normal(fields.shape))
    return [FieldSample(p, i, b) for p, i, b in zip(positions, currents, fields)]
