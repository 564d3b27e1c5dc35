"""Numerical laboratory for abnormal curves of rank-two sub-Riemannian
structures X1 = d/dx1, X2 = phi d/dx2 + psi d/dx3 on R^3."""

from .competitor import (CriterionReport, VerificationReport, criterion, length_gain,
                         rho_sweep, solve_delta, solve_params, verify_competitor)
from .curves import (CompetitorParams, PlaneCurve, closing_loop, concat, make_gamma, make_kappa,
                     make_omega, make_sigma, regularity_probe, reverse)
from .errors import *  # noqa: F401,F403
from .hamiltonian import (HamiltonianState, ham_eval, ham_flow, min_normality_residual,
                          normality_residual)
from .optimizer import (OptimizationResult, OptimizeOptions, constraint_and_gradient,
                        control_distance, multistart, optimize)
from .stokes import (WeightedAreaReport, delta3_cor, delta3_cut, f_ab,
                     weighted_area_decomposition, winding_number)
from .structure import (StructureDef, abnormal_Q, eval_fields, horizontal_lift, lift_residual,
                        martinet_residual, sr_length)

__version__ = "0.1.0"
