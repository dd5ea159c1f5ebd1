"""
Configuration module for spearmix
"""
import os
import logging
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Logger
logger = logging.getLogger(__name__)

VERSION = "1.0.0"

# Base paths
BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "spearmix" / "data"

# Files
TABLES_FILE = DATA_DIR / "spearman_exact.txt"
SCHEMA_FILE = DATA_DIR / "output_schema.json"
LOG_FILE = os.getenv("SPEARMIX_LOG_FILE")
LOG_FILE = Path(LOG_FILE) if LOG_FILE else None

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_MAX_BYTES = int(os.getenv("SPEARMIX_LOG_MAX_BYTES", str(10 * 1024 * 1024)))
LOG_BACKUP_COUNT = int(os.getenv("SPEARMIX_LOG_BACKUPS", "5"))

# Worker processes for multi-start and bootstrap
WORKERS = os.getenv("SPEARMIX_WORKERS")

# EM settings
DEFAULT_TOL = float(os.getenv("SPEARMIX_TOL", "1e-6"))
DEFAULT_MAX_ITER = int(os.getenv("SPEARMIX_MAX_ITER", "200"))
DEFAULT_N_START = int(os.getenv("SPEARMIX_N_START", "10"))
DEFAULT_KAPPA = float(os.getenv("SPEARMIX_KAPPA", "1.0"))

# Uncertainty settings
DEFAULT_CONF_LEVEL = float(os.getenv("SPEARMIX_CONF_LEVEL", "0.95"))
DEFAULT_N_BOOT = int(os.getenv("SPEARMIX_N_BOOT", "50"))

# BIC degrees of freedom convention
BIC_DF = os.getenv("SPEARMIX_BIC_DF", "consensus")
BIC_DF_CONVENTIONS = {
    "consensus": "df = G*(n+1) - 1",
    "continuous": "df = 2*G - 1",
}

# Distance distribution
EXACT_MAX_N = 20
GRID_MIN_N = 170
GRID_SIZE = 10001

# Estimation limits
AUGMENT_MAX_MISSING = 10
EXACT_SAMPLER_MAX_N = 10
THETA_CAP_NUMERATOR = 50.0
THETA_XTOL = 1e-9
DEGENERATE_WEIGHT = 1e-10
MONOTONE_SLACK = 1e-8

# MCEM stopping
MCEM_STABLE_ITERS = 5
MCEM_THETA_RTOL = 1e-3

# Sampling
SEPARATION_MAX_ATTEMPTS = 100000
MH_BURN_IN_PER_ITEM = 100

# Notes embedded in every JSON artifact
CONVENTION_NOTES = {
    "bic_df": BIC_DF_CONVENTIONS.get(BIC_DF, BIC_DF),
    "hpd_ties": "equal bootstrap probability: rank closer to the point estimate first, then lower rank",
    "quantiles": "type-7 linear interpolation",
    "approximation": "n > 20: discrete Gaussian moment-matched to the uniform mean and variance",
    "theta_cap": "theta_cap = 50 / n",
}

# Convert SPEARMIX_WORKERS to int
if WORKERS:
    try:
        WORKERS = int(WORKERS)
    except ValueError:
        logger.warning(
            "SPEARMIX_WORKERS must be a number, got: %s", WORKERS
        )
        WORKERS = None
else:
    WORKERS = None


def get_workers() -> int:
    """Number of worker processes for parallel tasks"""
    return WORKERS or os.cpu_count() or 1


# Validation
def validate_config():
    """Validate configuration values"""
    errors = []

    if DEFAULT_TOL <= 0:
        errors.append("SPEARMIX_TOL must be positive")

    if DEFAULT_MAX_ITER < 1:
        errors.append("SPEARMIX_MAX_ITER must be at least 1")

    if DEFAULT_N_START < 1:
        errors.append("SPEARMIX_N_START must be at least 1")

    if DEFAULT_KAPPA <= 0:
        errors.append("SPEARMIX_KAPPA must be positive")

    if not 0 < DEFAULT_CONF_LEVEL < 1:
        errors.append("SPEARMIX_CONF_LEVEL must lie in (0, 1)")

    if DEFAULT_N_BOOT < 1:
        errors.append("SPEARMIX_N_BOOT must be at least 1")

    if BIC_DF not in BIC_DF_CONVENTIONS:
        errors.append(f"SPEARMIX_BIC_DF must be one of {sorted(BIC_DF_CONVENTIONS)}")

    if WORKERS is not None and WORKERS < 1:
        errors.append("SPEARMIX_WORKERS must be at least 1")

    if not TABLES_FILE.exists():
        errors.append(f"tables file not found: {TABLES_FILE}")

    if errors:
        raise ValueError("Configuration errors: " + ", ".join(errors))
