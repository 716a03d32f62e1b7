"""Constants for the verification suites."""
from __future__ import annotations

import math

SUITES = ("weight", "lp", "paraproduct", "coeffs", "carleman", "counterexample")
SUITE_ALL = "all"

CONF_SEED = "seed"
CONF_GRID_POINTS = "grid_points"
CONF_PERIOD = "period"
CONF_MU = "mu"
CONF_ALPHA = "alpha"
CONF_HORIZON = "horizon"
CONF_GAMMA = "gamma"
CONF_GAMMAS = "gammas"
CONF_T_MAX = "t_max"
CONF_SOBOLEV_S = "s"
CONF_FIELD = "field"
CONF_ENSEMBLE = "ensemble"
CONF_SYMBOL = "symbol"
CONF_M = "m"
CONF_LAMBDA0 = "lambda0"
CONF_CHOOSE_M_ENSEMBLE = "choose_m_ensemble"
CONF_FAMILY = "family"
CONF_DELTA = "delta"
CONF_DEPTH = "depth"
CONF_VERIFY = "verify"
CONF_COEFFS = "coeffs"
CONF_CARLEMAN_DELTA = "carleman_delta"
CONF_CARLEMAN_ENSEMBLE = "carleman_ensemble"
CONF_CARLEMAN_GRID_POINTS = "carleman_grid_points"
CONF_TIME_CELLS = "time_cells"
CONF_MAX_BLOCK = "max_block"
CONF_FINAL3_FLOOR = "final3_floor"
CONF_INTERVALS = "intervals"
CONF_J0 = "j0"
CONF_RESIDUAL_SAMPLES = "residual_samples"
CONF_L_SIGN = "l_sign"
CONF_EMIT_GRID = "emit_grid"
CONF_REPORT = "report"
CONF_PLOT_DATA = "plot_data"

DEFAULT_SEED = 7
DEFAULT_GRID_POINTS = 1024
DEFAULT_PERIOD = 2.0 * math.pi
DEFAULT_MU = "linear"
DEFAULT_ALPHA = 0.5
DEFAULT_HORIZON = 1.0
DEFAULT_GAMMA = 8.0
DEFAULT_GAMMAS = [8.0, 16.0, 32.0, 64.0]
DEFAULT_T_MAX = 1e150
DEFAULT_SOBOLEV_S = 1.0
DEFAULT_ENSEMBLE = 100
DEFAULT_M = "auto"
DEFAULT_LAMBDA0 = 0.5
DEFAULT_CHOOSE_M_ENSEMBLE = 200
DEFAULT_FAMILY = "synthetic"
DEFAULT_DELTA = 0.4
DEFAULT_DEPTH = 4
DEFAULT_VERIFY = "all"
DEFAULT_CARLEMAN_DELTA = 0.2
DEFAULT_CARLEMAN_ENSEMBLE = 20
DEFAULT_CARLEMAN_GRID_POINTS = 1024
DEFAULT_TIME_CELLS = 256
DEFAULT_MAX_BLOCK = 6
DEFAULT_FINAL3_FLOOR = 1e-3
DEFAULT_INTERVALS = 10_000
DEFAULT_J0 = "auto"
DEFAULT_RESIDUAL_SAMPLES = 10_000
DEFAULT_L_SIGN = -1

# Littlewood-Paley plateau constants of the radial profile psi.
CUT_INNER = 1.1
CUT_OUTER = 1.9

# Hard caps of the bounded searches.
CHOOSE_M_CAP = 12
CHOOSE_J0_CAP = 1_000_000

# Counterexample exponent grids.
WITNESS_EXPONENTS = (1.0, 2.0, 5.0)
COND3_ALPHAS = (0.0, 0.25, 0.5, 0.75)
OSC_EPSILONS = (0.1, 0.5, 1.0)

TOL_IDENTITY = 1e-12

# Ensemble quantile taken as a fitted paraproduct constant.
CONSTANT_FIT_LEVEL = 0.9
