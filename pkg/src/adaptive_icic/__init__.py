"""Multicell downlink interference-cancellation toolkit.

Closed-form ergodic rates, a channel-level Monte Carlo simulator, an
adaptive strategy coordinator and limited-feedback bit design.
"""
from .coordinator import (PAPER_BIT_PAIRS, RateReport, allocate_bits, bstar_bits,
                          candidate_profiles, csi_cost, evaluate, no_icic_profile,
                          select_distributed, select_joint, static_icic_profile)
from .experiments import ExperimentConfig, load_config, run_experiment
from .network import (LinkBudget, Scenario, ShadowRegion, build_scenario, db_to_linear,
                      dump_scenario, linear_to_db, load_scenario)
from .numerics import (ConvergenceError, QuadratureSpec, exp_integral_e1, expected_log_oracle,
                       integral_i1, integral_i2, integral_i3)
from .profiles import BF, IC, FeedbackConfig, Strategy, StrategyProfile, two_cell_profiles
from .rates import (RateParams, quantization_xi, rate, rate_bf, rate_i2, rate_i3,
                    residual_kappa, sum_rate, user_rate, user_rate_2cell, user_rate_3cell,
                    user_rate_3cell_lfb, user_rate_lfb)
from .simulator import McEstimate, mc_ergodic_rate, mc_profile_rates

__version__ = "0.1.0"
