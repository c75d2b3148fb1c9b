### Configuration constants for the Levy positivity toolkit ###

import os

# Runtime settings (set in the shell environment)

WORKERS = int(os.environ.get("LEVY_WORKERS", os.cpu_count() or 1))
OUTPUT_DIR = os.environ.get("LEVY_OUTPUT_DIR", "levy_output")
LOG_LEVEL = os.environ.get("LEVY_LOG_LEVEL", "INFO")
JUMP_BUDGET = float(os.environ.get("LEVY_JUMP_BUDGET", "200"))

# Quadrature

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
QUAD_LIMIT = 200
QUAD_MAX_PIECES = 4000

# Model validation

ACTIVITY_CHECK_X = 1e-12
ACTIVITY_THRESHOLD = 1e3
VALIDATION_X_MIN = 1e-12
VALIDATION_X_MAX = 1e3
VALIDATION_POINTS = 200

# Ratio criteria

RATIO_R_MAX = 1e3
RATIO_S_MIN = 0.05
GRID_J_MIN = 4
GRID_J_MAX = 40
MIN_GRID_POINTS = 8

# Simulation

BISECTION_ITERATIONS = 80
BLOCK_SIZE = 8192
MIN_SAMPLES = 100
CONFIDENCE = 0.95
SURROGATE_ERROR_TARGET = 0.05
MAX_JUMPS_PER_BLOCK = 5e7

# Bound verification

BOUND_START_SAMPLES = 10_000
BOUND_MAX_SAMPLES = 2_560_000

# Run configs

CONFIG_SCHEMA_VERSION = 1

# Default master seed for simulations and acceptance runs

DEFAULT_SEED = 20240607
