"""Dipole-term field model of an eight-coil electromagnetic actuation system.

Each coil is represented by a point dipole (magnetic center, unit axis,
strength per ampere). Fields and the five independent gradient components
are evaluated analytically; the stacked per-unit-current response over all
coils forms the 8x8 actuation matrix. All quantities are world-frame SI.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .constants import MU0, NUM_COILS

# minimum distance from a coil's magnetic center at which evaluation is allowed
SINGULARITY_RADIUS = 1e-6

# Gradient5 component order: (dbx/dx, dbx/dy, dbx/dz, dby/dy, dby/dz)
GRADIENT5_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2))


class SingularityError(ValueError):
    """Evaluation point too close to a coil's magnetic center."""


@dataclass(frozen=True)
class CoilSource:
    """One coil's dipole model: center [m], unit axis, strength [A*m^2 per A]."""

    center: np.ndarray
    axis: np.ndarray
    strength: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))
        object.__setattr__(self, "strength", float(self.strength))
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise ValueError(f"coil axis must be unit norm, got |axis|={np.linalg.norm(self.axis)!r}")
        if not self.strength > 0.0:
            raise ValueError(f"coil strength must be positive, got {self.strength}")


@dataclass(frozen=True)
class FieldModel:
    """Ordered collection of exactly 8 CoilSources; coil order matches the current vector."""

    coils: tuple

    def __post_init__(self):
        coils = tuple(self.coils)
        if len(coils) != NUM_COILS:
            raise ValueError(f"expected {NUM_COILS} coils, got {len(coils)}")
        object.__setattr__(self, "coils", coils)

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.coils])

    @property
    def axes(self) -> np.ndarray:
        return np.array([c.axis for c in self.coils])

    @property
    def strengths(self) -> np.ndarray:
        return np.array([c.strength for c in self.coils])

    def to_json(self) -> str:
        return json.dumps({"coils": [
            {"center": c.center.tolist(), "axis": c.axis.tolist(), "strength": c.strength}
            for c in self.coils]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FieldModel":
        doc = json.loads(text)
        return cls(tuple(CoilSource(np.array(c["center"]), np.array(c["axis"]), c["strength"])
                         for c in doc["coils"]))

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "FieldModel":
        with open(path) as f:
            return cls.from_json(f.read())


@dataclass(frozen=True)
class FieldSample:
    """One calibration measurement: position [m], coil currents [A], field [T]."""

    position: np.ndarray
    coil_currents: np.ndarray
    measured_field: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "coil_currents", np.asarray(self.coil_currents, dtype=float).reshape(NUM_COILS))
        object.__setattr__(self, "measured_field", np.asarray(self.measured_field, dtype=float).reshape(3))
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.coil_currents))
                and np.all(np.isfinite(self.measured_field))):
            raise ValueError("field sample contains non-finite entries")


def _check_distance(src: CoilSource, p: np.ndarray) -> np.ndarray:
    r = np.asarray(p, dtype=float).reshape(3) - src.center
    if np.linalg.norm(r) <= SINGULARITY_RADIUS:
        raise SingularityError(
            f"evaluation point within {SINGULARITY_RADIUS} m of coil center {src.center}")
    return r


def dipole_field(src: CoilSource, p: np.ndarray, current: float) -> np.ndarray:
    """Field [T] of one coil at p for the given current: point-dipole formula."""
    r = _check_distance(src, p)
    rn = np.linalg.norm(r)
    rhat = r / rn
    m = src.axis
    c = MU0 * src.strength * current / (4.0 * np.pi * rn**3)
    return c * (3.0 * np.dot(m, rhat) * rhat - m)


def dipole_jacobian(src: CoilSource, p: np.ndarray, current: float) -> np.ndarray:
    """Analytic 3x3 spatial Jacobian of dipole_field; symmetric and traceless."""
    r = _check_distance(src, p)
    rn = np.linalg.norm(r)
    m = src.axis
    mr = np.dot(m, r)
    c = 3.0 * MU0 * src.strength * current / (4.0 * np.pi * rn**5)
    J = np.outer(m, r) + np.outer(r, m) + mr * np.eye(3) \
        - 5.0 * mr * np.outer(r, r) / rn**2
    return c * J


def dipole_gradient(src: CoilSource, p: np.ndarray, current: float) -> np.ndarray:
    """Five independent gradient components [T/m] in Gradient5 order."""
    J = dipole_jacobian(src, p, current)
    return np.array([J[i, j] for i, j in GRADIENT5_INDEX])


def gradient5_to_jacobian(g: np.ndarray) -> np.ndarray:
    """Reconstruct the full 3x3 field Jacobian from the five independent
    components using the curl-free (symmetry) and divergence-free (trace)
    identities for quasi-static source-free fields."""
    g1, g2, g3, g4, g5 = np.asarray(g, dtype=float).reshape(5)
    return np.array([[g1, g2, g3],
                     [g2, g4, g5],
                     [g3, g5, -(g1 + g4)]])


def field_and_gradient(model: FieldModel, p: np.ndarray, currents: np.ndarray):
    """Total field [T] and Gradient5 [T/m] at p for a current vector."""
    currents = np.asarray(currents, dtype=float).reshape(NUM_COILS)
    b = np.zeros(3)
    g = np.zeros(5)
    for src, cur in zip(model.coils, currents):
        b += dipole_field(src, p, cur)
        g += dipole_gradient(src, p, cur)
    return b, g


def actuation_matrix(model: FieldModel, p: np.ndarray) -> np.ndarray:
    """8x8 matrix mapping coil currents to the stacked (field; Gradient5) at p.

    Column j is the response at p to a unit current in coil j.
    """
    A = np.empty((8, 8))
    for j, src in enumerate(model.coils):
        A[:3, j] = dipole_field(src, p, 1.0)
        A[3:, j] = dipole_gradient(src, p, 1.0)
    return A


def predict_fields(model: FieldModel, positions: np.ndarray, currents: np.ndarray) -> np.ndarray:
    """Vectorized field prediction for N (position, current-vector) samples.

    positions: (N, 3), currents: (N, 8) -> fields (N, 3).
    """
    positions = np.asarray(positions, dtype=float)
    currents = np.asarray(currents, dtype=float)
    fields = np.zeros_like(positions)
    for j, src in enumerate(model.coils):
        r = positions - src.center  # (N, 3)
        rn = np.linalg.norm(r, axis=1)
        if np.any(rn <= SINGULARITY_RADIUS):
            raise SingularityError(f"sample position too close to coil {j} center")
        mr = r @ src.axis
        c = MU0 * src.strength / (4.0 * np.pi * rn**3)
        unit_b = c[:, None] * (3.0 * (mr / rn**2)[:, None] * r - src.axis)
        fields += currents[:, j, None] * unit_b
    return fields


def default_field_model(strength: float = 60.0) -> FieldModel:
    """Synthetic 8-coil arrangement: two rings of four on a 0.12 m sphere
    (polar angles 45 deg and 100 deg, azimuths 0/90/180/270 deg), every axis
    pointing at the origin. `strength` is the per-ampere dipole moment of
    each coil, sized so hovering the default levitator at the center stays
    well inside the +-4 A drive limit.
    """
    radius = 0.12
    coils = []
    for polar_deg in (45.0, 100.0):
        for az_deg in (0.0, 90.0, 180.0, 270.0):
            th = np.deg2rad(polar_deg)
            ph = np.deg2rad(az_deg)
            center = radius * np.array([np.sin(th) * np.cos(ph),
                                        np.sin(th) * np.sin(ph),
                                        np.cos(th)])
            axis = -center / np.linalg.norm(center)
            coils.append(CoilSource(center, axis, strength))
    return FieldModel(tuple(coils))


CALIBRATION_CSV_HEADER = ["px", "py", "pz"] + [f"i{k}" for k in range(1, 9)] + ["bx", "by", "bz"]


def load_samples_csv(path) -> list:
    """Read calibration samples from CSV with header px,py,pz,i1..i8,bx,by,bz."""
    samples = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in CALIBRATION_CSV_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"calibration CSV missing columns: {missing}")
        for row in reader:
            samples.append(FieldSample(
                position=np.array([float(row["px"]), float(row["py"]), float(row["pz"])]),
                coil_currents=np.array([float(row[f"i{k}"]) for k in range(1, 9)]),
                measured_field=np.array([float(row["bx"]), float(row["by"]), float(row["bz"])]),
            ))
    return samples


def save_samples_csv(path, samples) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CALIBRATION_CSV_HEADER)
        for s in samples:
            writer.writerow(list(s.position) + list(s.coil_currents) + list(s.measured_field))
