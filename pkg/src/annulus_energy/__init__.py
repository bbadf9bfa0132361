"""Energy-minimal radial stretchings between spherical annuli in R^n."""

from .bvp import (Case, CaseTag, FluxCurve, Profile, ShootingResult, SolverFailure,
                  classify_case, find_lambda, q_value, shoot, solve_profile, solve_reduced)
from .integrate import OdeSystem, Termination, Trajectory, integrate, sample
from .model import DomainError, InvalidProblem, Problem, g_rhs, lagrangian, m_coeff
from .variational import (EnergyReport, TrialProfile, discrete_minimize, el_residual,
                          random_trials, total_energy)

__all__ = [
    "Case", "CaseTag", "DomainError", "EnergyReport", "FluxCurve", "InvalidProblem",
    "OdeSystem", "Problem", "Profile", "ShootingResult", "SolverFailure", "Termination",
    "Trajectory", "TrialProfile", "classify_case", "discrete_minimize", "el_residual",
    "find_lambda", "g_rhs", "integrate", "lagrangian", "m_coeff", "q_value",
    "random_trials", "sample", "shoot", "solve_profile", "solve_reduced", "total_energy",
]
