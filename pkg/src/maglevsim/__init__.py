"""Magnetic levitation with an eight-coil electromagnetic actuation system:
dipole field modeling and calibration, wrench allocation, rigid-body
simulation, reduced-attitude and LQR pose control, and a closed-loop harness.
"""

from .allocation import RankDeficiencyError, saturate, solve_currents
from .attitude_control import (AttitudeGains, attitude_control, attitude_error,
                               reduced_attitude)
from .backend import backend_name
from .calibration import FitReport, fit_mpem
from .constants import GRAVITY, MU0, NUM_COILS
from .fieldmodel import (CoilSource, FieldModel, FieldSample, SingularityError,
                         actuation_matrix, default_field_model, dipole_field,
                         dipole_gradient, field_and_gradient,
                         gradient5_to_jacobian)
from .magnetics import (LevitatorParams, ReducedWrench, allocation_matrix,
                        dipole_strength, force_map, interaction_matrix,
                        reduced_allocation_matrix, reduced_interaction_matrix,
                        torque_map)
from .rigidbody import RigidBodyState, dynamics_derivative, step
from .sim_harness import (Scenario, SimConfig, SimLog, StiffnessReport,
                          hover_currents, run_closed_loop, stiffness_analysis,
                          trajectory)
from .translation_control import (AxisModel, DareConvergenceError, LqrDesign,
                                  TranslationGains, design_axis_lqr,
                                  design_translation, discretize_axis,
                                  solve_dare, translation_control)

__version__ = "0.1.0"
