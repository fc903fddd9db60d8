"""Branching Ornstein-Uhlenbeck / Brownian extremes toolkit.

Simulates extremal point processes of branching diffusions, estimates the
large-deviation prefactor of the maximal displacement by two independent
routes (spine Monte Carlo and a Fisher-KPP front oracle), samples the
limiting decorated Poisson point processes, and verifies the exact
identities and limit laws statistically.
"""

__version__ = "0.1.0"

from .gaussian import (SQRT2, GammaConstants, SpringParams, TailBoundPair,
                       bivariate_tail_bound, gamma_constants,
                       gaussian_tail_bounds, normalization_factor,
                       ou_transition, pair_covariance, sample_ou_step)
from .measure import Centering, PointMeasure, max_and_counts
from .cloud import (ParticleCloud, additive_martingale, derivative_martingale,
                    extremal_measure, simulate_cloud, simulate_forest,
                    variable_speed_view)
from .spine import (EstimatorResult, LimitProcessSample, SpineRealization,
                    estimate_C, estimate_C_curve, sample_decoration,
                    sample_limit_process, sample_spine, truncation_horizon)
from .kpp import (KppField, KppParams, estimate_C_pde, front_tail,
                  phi_conversion, solve_kpp)
from .checks import (CheckReport, TestFunction, check_first_moment,
                     check_iid_limit, check_many_to_one, check_many_to_two,
                     check_max_limit_law, check_second_moment_gap,
                     check_slepian_monotonicity, check_spine_identity,
                     laplace_functional)
from .errors import (NumericalFailureError, RejectionBudgetError,
                     ResourceLimitError)
