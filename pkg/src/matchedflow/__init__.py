"""Matched-filter normalization of order flow.

Simulate informed-plus-noise order flow, compare market-cap and
traded-value normalizations by Monte Carlo and in closed form, and run
Fama-MacBeth / two-way fixed-effects regressions on stock-day panels.
"""

__version__ = "0.1.0"

from .dgp import CrossSection, SimConfig, generate_cross_section, informed_flow, \
    noise_flow, realize_return, simulate_panel, total_flow
from .econo import FEResult, FMResult, RegressionSpec, daily_cross_section_ols, \
    fama_macbeth, forward_return, grouped_fama_macbeth, log_abs_flow, pooled_fe, \
    winsorize, zscore_within_group
from .errors import ConfigError, ConvergenceError, DataError, DegenerateError, \
    DomainError, InferenceError, MatchedFlowError, NumericError, RankError
from .mc import ExperimentSummary, SimulationResult, SweepRow, paired_t_test, \
    run_experiment, run_simulation, run_sweep
from .signal import SnrReport, TurnoverMoments, analytic_snr, normalize_mc, \
    normalize_tv, pearson_correlation, uniform_turnover_moments
