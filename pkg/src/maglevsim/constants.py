"""Physical constants shared across the package (SI units)."""

import numpy as np

MU0 = 4.0e-7 * np.pi  # vacuum permeability [T*m/A]
GRAVITY = 9.81        # default gravitational acceleration [m/s^2]

NUM_COILS = 8
