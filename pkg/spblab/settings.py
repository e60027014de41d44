"""
Settings for the spblab package.

Values are read from the environment (a ``.env`` file in the working
directory is honoured) so that experiment defaults can be changed without
editing code.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

CONFIGS_DIR = BASE_DIR / 'configs'


def _env_flag(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


# Experiment output
OUTPUT_DIR = Path(os.getenv('SPB_OUTPUT_DIR', 'runs'))

# Invariant violations abort the run when strict
STRICT = _env_flag('SPB_STRICT', False)

# Worker processes for replicates
WORKERS = int(os.getenv('SPB_WORKERS', '1'))

LOG_LEVEL = os.getenv('SPB_LOG_LEVEL', 'INFO').upper()

BASE_SEED = int(os.getenv('SPB_BASE_SEED', '0'))

LEMMA_INSTANCES = int(os.getenv('SPB_LEMMA_INSTANCES', '1000'))


# Numerical tolerances

SIMPLEX_TOL = 1e-9          # ProbVector sum tolerance
KKT_TOL = 1e-8              # FTRL stationarity residual
PROB_FLOOR = 1e-15          # inner FTRL solves clamp q_i here
FTRL_OUTER_ITERS = 200
FTRL_INNER_ITERS = 100
RULE1_TOL = 1e-10
LP_TOL = 1e-9
LSQ_TOL = 1e-8
MARGIN_TOL = 1e-9           # Pareto / neighbor full-dimension margin
INVARIANT_RTOL = 1e-9

# Regret checkpoints are powers of two up to this exponent
MAX_CHECKPOINT_EXP = 16
