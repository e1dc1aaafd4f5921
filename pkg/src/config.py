"""
config.py

Project-wide constants: numerical tolerances, solver limits, grid-world
defaults and filesystem paths.

Defined globally to keep the synthesis modules, the CLI and the API on
the same numbers.
"""

from pathlib import Path


# ─────────────────────────────────────────────
# CONFIG: Paths
# ─────────────────────────────────────────────
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
LAYOUTS_DIR = DATA_DIR / "layouts"
MDPS_DIR = DATA_DIR / "mdps"
LOGS_DIR = BASE_DIR / "logs"
REPORTS_DIR = BASE_DIR / "reports"
MLRUNS_DIR = BASE_DIR / "mlruns"

DEFAULT_LAYOUT_FILE = LAYOUTS_DIR / "grid10.json"


# ─────────────────────────────────────────────
# CONFIG: Tolerances
# ─────────────────────────────────────────────
# Solver-facing comparisons (row sums, pivots, supports)
SOLVER_TOL = 1e-9

# User-facing comparisons (reports, certificates, existence decision)
REPORT_TOL = 1e-6

# Equality test of the max-reach / cost-optimality fixed points
AMAX_TOL = 1e-7

# Sup-norm accuracy of value iteration
VI_TOL = 1e-10

# A state-action pair carries flow when its occupation exceeds this
SUPPORT_TOL = 1e-9

# Phase-one infeasibility threshold and primal feasibility check
PHASE_ONE_TOL = 1e-7

# Entries below this magnitude are flushed to zero after a pivot
ZERO_TOL = 1e-12


# ─────────────────────────────────────────────
# CONFIG: Solver limits
# ─────────────────────────────────────────────
# Dantzig pricing runs for BLAND_FACTOR * (rows + cols) pivots, then Bland's rule
BLAND_FACTOR = 5
MAX_PIVOT_FACTOR = 50

MILP_TIME_LIMIT = 60.0
MILP_GAP_TOL = 1e-6
INTEGRALITY_TOL = 1e-6

EPS_HALVING_CAP = 128
ORACLE_MAX_POLICIES = 10**6

# M = k|S| for MDPs with stochastic transitions
DEFAULT_BIG_M_FACTOR = 100


# ─────────────────────────────────────────────
# CONFIG: Grid world
# ─────────────────────────────────────────────
GRID_SUCCESS_PROB = 0.9
GRID_DISCOUNT = 0.9
RISK_COSTS = {"high": 4.0, "moderate": 2.0, "low": 1.0}
GRID_ACTIONS = ("up", "down", "left", "right", "stay")


# ─────────────────────────────────────────────
# CONFIG: Simulation
# ─────────────────────────────────────────────
SIM_CHUNK_SIZE = 10_000
SIM_DEFAULT_TOL = 1e-6
