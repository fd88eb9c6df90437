"""Current allocation: minimum-norm solve of the reduced wrench map plus
per-coil saturation at the drive limit."""

from __future__ import annotations

import numpy as np

RANK_TOLERANCE = 1e-12


class RankDeficiencyError(RuntimeError):
    """Reduced allocation matrix lost row rank (uncontrollable configuration)."""

    def __init__(self, singular_values):
        self.singular_values = np.asarray(singular_values)
        super().__init__(
            f"allocation matrix rank-deficient; singular values {self.singular_values}")


def solve_currents(N_tilde: np.ndarray, wrench: np.ndarray) -> np.ndarray:
    """Minimum-Euclidean-norm currents i with N_tilde @ i = wrench, via SVD."""
    N_tilde = np.asarray(N_tilde, dtype=float)
    w = np.asarray(wrench, dtype=float).reshape(N_tilde.shape[0])
    U, s, Vt = np.linalg.svd(N_tilde, full_matrices=False)
    if s[-1] <= RANK_TOLERANCE * s[0]:
        raise RankDeficiencyError(s)
    return Vt.T @ ((U.T @ w) / s)


def saturate(currents: np.ndarray, limit: float):
    """Clamp each coil current to [-limit, limit]; returns (clamped, flags)."""
    if not limit > 0.0:
        raise ValueError("current limit must be positive")
    currents = np.asarray(currents, dtype=float)
    flags = np.abs(currents) > limit
    return np.clip(currents, -limit, limit), flags
