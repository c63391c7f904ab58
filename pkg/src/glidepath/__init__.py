"""Optimal static glidepaths for retirement portfolios.

Maximizes the probability of not running out of money over a fixed or
random retirement horizon, with success probabilities from a discretized
dynamic program or from simulation.
"""
from .exceptions import (BoundaryError, ConsistencyError, ConvergenceError, DensityError,
                         EnvelopeError, GlidepathError, GridError, InputFileError, ParameterError,
                         StuckError)
from .objective import OptimizerConfig
from .optimizer import (GlidepathOptimizer, GradientVector, OptimizationResult, build_gradient,
                        build_hessian, climb, newton_step, optimize)
from .portfolio import EVENSKY, HISTORICAL, ReturnParams
from .random_horizon import (MortalityDistribution, gradient_random, hessian_random, load_lifetable,
                             success_probability_random)
from .ruin import DensitySelector, DpGrid, success_probability_dp, success_probability_mc
from .scenarios import SCENARIOS, scenario, starting_glidepaths
from .stats_tests import ProportionSample, equality_test, noninferiority_test

__version__ = "0.1.0"
