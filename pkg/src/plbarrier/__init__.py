"""Barrier constructions and maximum/minimum principle checks for degenerate parabolic equations.

The equation treated is ``H(Dv, D^2 v + Z(v) Dv Dv^T) + chi(t) |Dv|^sigma - v_t = 0``.
"""

__version__ = "0.1.0"

from .errors import (BParameterTooLarge, CFLViolation, ConditionCFailure, ContractViolation,
                     HypothesisFailure, PreconditionFailure, QuadratureError, SolverBreakdown,
                     TransformDomainError, UndefinedAtZeroGradient, WrongRegime)
from .operators import (OperatorDescriptor, check_structure_conditions, eval_operator, laplacian,
                        make_operator, spectral_envelopes)
from .problem import ChiProfile, InitialDatum, ProblemSpec, ZProfile, problem_from_dict
from .aux_functions import AuxFn, AuxFnParams, aux_bounds_check, make_aux_params
from .radial_calculus import Kappa, RadialProfile, residual_at, residual_field
from .transform import exp_transform, solve_phi
from .barriers_super import SuperBarrier, a_limit_study, build_super, super_residual
from .barriers_sub import (SubBarrierCompact, SubBarrierGrowth, build_sub_compact,
                           build_sub_growth, f_limit_study, sub_residual)
from .verification import (GridField, GrowthHypothesis, comparison_check, doubly_nonlinear_check,
                           fd_solve, principle_check)
