"""Solvers for the damped third-order strip problem

    eps u_xxt + c^2 u_xx - u_tt - a u_t = F(x, t, u),   0 < x < ell,

with Dirichlet sides, built on the exact per-mode propagators of its sine
expansion.  A finite-difference solver is included as an independent check.
"""

from .decay import (DecayReport, DecayVerdict, build_report, coefficient_check, fit_algebraic_slope,
                    fit_exponential_rate, verify_decay)
from .fd import FDConfig, FDScenario, convergence_order, solve_fd
from .linear import (AlgebraicDecay, ExponentialDecay, ForcingSpec, LinearProblem, SolutionField,
                     small_time_limits, solve_forced, solve_homogeneous)
from .modal import (DecayConstants, Mode, Params, Regime, SeriesCapExceeded, decay_constants,
                    green_eval, green_matrix, green_partial_sum, green_tail_bound, make_mode,
                    mode_decay_rate, propagator_H, propagator_Hdot, propagator_K, step_operator)
from .nonlinear import (PSGE, Custom, LinearForcing, MarchConfig, NonFiniteState, PicardConfig,
                        PicardDidNotConverge, psge_bound, solve_march, solve_picard)
from .sine import SineSpectrum, SpatialGrid, analyze, synthesize

__version__ = "0.1.0"
