"""
Configuration constants for the secrecy outage laboratory.
Contains numerical tolerances, simulation defaults and the reference
parameter block used by the figure presets.
"""

import numpy as np

# Meijer G contour engine
MEIJER_REL_TOL = 1e-10
MEIJER_ABS_TOL = 1e-15
MEIJER_TRUNCATION_RATIO = 1e-18
MEIJER_QUIET_NODES = 32
MEIJER_MIN_POLE_GAP = 1e-6
MEIJER_RESIDUE_GAP = 1e-3
MEIJER_MAX_HALVINGS = 10
MEIJER_MIN_HALVINGS = 2
MEIJER_MAX_CONTOUR_HEIGHT = 4000.0
MEIJER_POLE_MARGIN = 0.1  # fraction of the strip kept clear of poles
MEIJER_ONE_SIDED_SEARCH = 40.0
MEIJER_RESIDUE_MAX_TERMS = 600
MEIJER_MAX_ORDER = 16

# Series truncation
SERIES_REL_TERM_TOL = 1e-12
SERIES_MAX_TERMS = 400
SERIES_DIVERGENCE_GUARD = 1e6
SERIES_QUIET_TERMS = 3
SERIES_CHUNK = 32
G1_TAYLOR_SWITCH = 1.0
TAIL_SWITCH = 1.0  # β·(Θ−1) above which tail integrals use the Laguerre rule
LAGUERRE_NODES = (32, 64, 128, 256)
TAIL_REL_TOL = 1e-9

# Probability sanity band
PROBABILITY_SLACK = 1e-6

# Asymptotic regime
ASYMPTOTIC_CDF_LIMIT = 0.5
EXPONENT_GAP_GUARD = 1e-6
HIGH_SNR_AXIS_REL_TOL = 1e-9  # Ω_SR against φ·Ω_RD

# Quadrature oracle
QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-9
QUAD_MAX_DEPTH = 40
QUAD_TAIL_COMPLEMENT = 1e-12
QUAD_ORDER = 10
QUAD_INITIAL_PANELS = 16
QUAD_SINGULAR_OCTAVES = 60
QUAD_PANEL_LIMIT = 400  # subintervals of one scipy quad call

# Monte-Carlo
MC_DEFAULT_SAMPLES = 1_000_000
MC_DEFAULT_SEED = 20240601
MC_BATCH_SIZE = 1 << 18
MC_MIN_SAMPLES = 1000
MC_Z95 = 1.96
FSO_TABLE_KNOTS = 4096
FSO_TABLE_MAX_DOUBLINGS = 4
FSO_TABLE_TOL = 1e-10
FSO_TABLE_LOWER_CDF = 1e-13
FSO_TABLE_UPPER_COMPLEMENT = 1e-11
FSO_ROOT_XTOL = 1e-12

# Reference system block (noise powers normalised to one)
NOISE_N0 = 1.0
NOISE_SIGMA2 = 1.0
PT_DBM = 30.0
DISTANCE_M = 10.0
PROPAGATION_LC = 3.597e-2
N_EAVESDROPPER = 2
RS_NATS = 0.01
POWER_REFERENCE = "mW"  # "mW": Pt = 10**(dBm/10); "W": 10**((dBm-30)/10)

# Turbulence regimes (a, b)
WEAK_TURBULENCE = (2.902, 2.51)
STRONG_TURBULENCE = (2.064, 1.342)

# Sweep grids in dB
OMEGA_SR_GRID_DB = tuple(np.arange(0.0, 41.0, 5.0).tolist())
OMEGA_RD_GRID_DB = tuple(np.arange(0.0, 61.0, 5.0).tolist())

# Output
CSV_COLUMNS = (
    "variant",
    "axis",
    "axis_value",
    "engine",
    "sop",
    "h1",
    "h2",
    "varrho",
    "std_error",
    "series_terms",
    "wall_time_ms",
    "status",
)
CSV_FLOAT_FORMAT = "{:.12e}"
RESULT_BACKUP_EXTENSION = ".bak"
RESULT_METADATA_SUFFIX = ".meta.json"
RESULT_FORMAT_VERSION = "1.0"

# Logging
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
LOG_DEFAULT_LEVEL = "WARNING"

# Exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
