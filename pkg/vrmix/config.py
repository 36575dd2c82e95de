"""Configuration settings for the vrmix package."""

import configparser
import os
from pathlib import Path
from typing import Dict

# Base paths
BASE_DIR = Path(__file__).parent.parent
DEFAULT_DATA_DIR = BASE_DIR / "data"

# Application settings
APP_NAME = "vrmix"
APP_VERSION = "0.1.0"
DEBUG = os.getenv("VRMIX_DEBUG", "false").lower() == "true"
LOG_LEVEL = os.getenv("VRMIX_LOG_LEVEL", "DEBUG" if DEBUG else "INFO").upper()

# Numerical settings
TAU_FEAS = 1e-9
PROJ_MAX_ITERS = int(os.getenv("VRMIX_PROJ_MAX_ITERS", "50"))
PROJ_TOL = 1e-10
ROW_SUM_TOL = 1e-6
EIGEN_REL_CUTOFF = 1e-10
ORACLE_WEIGHT_FLOOR = 1e-12
ORACLE_MAX_ITERS = 5000
ORACLE_TOL = 1e-8
CALIBRATION_ROUNDS = 100
DEFAULT_EPS_MASS = 0.1
DEFAULT_TRUNCATION = (0.8, 0.2)
DIAMETER = 2.0**0.5

# Config file settings
CONFIG_SECTION = "vrmix"

# Per-experiment defaults; CLI flags and config files override these
EXPERIMENT_DEFAULTS: Dict[str, Dict[str, object]] = {
    "svm-blobs": {
        "n": 10_000,
        "d": 2,
        "blob_count": 6,
        "separation": 10.0,
        "blob_std": 1.0,
        "eps_mass": DEFAULT_EPS_MASS,
        "epochs": 5,
        "step_size": 0.01,
        "batch_size": 1,
        "eval_every": 500,
    },
    "linreg-dpp": {
        "n": 1_000,
        "d": 10,
        "scaled_points": 10,
        "scale": 10.0,
        "epochs": 100,
        "batch_size": 5,
        "step_size": 1e-4,
        "dpp_regularizers": [1.0, 10.0, 100.0],
        "eval_every": 200,
    },
    "kmeans": {
        "n": 20_000,
        "d": 10,
        "n_clusters": 100,
        "n_components": 10,
        "batch_size": 100,
        "iterations": 500,
        "train_fraction": 0.8,
        "eval_every": 25,
    },
}

# Learner defaults for experiments, expressed per unit of n^2 L
EXPERIMENT_GAMMA = 0.1
EXPERIMENT_BETA = 1.0
EXPERIMENT_EPS = 1.0

# Grid searched by --tune on an inner split of the training data
TUNE_FRACTION = 0.8
TUNE_BETAS = (0.1, 1.0, 10.0)
TUNE_GAMMAS = (0.05, 0.1, 0.3)


def output_dir() -> Path:
    """Default directory for run artifacts (``VRMIX_OUTPUT_DIR``)."""
    return Path(os.getenv("VRMIX_OUTPUT_DIR", str(DEFAULT_DATA_DIR / "runs")))


def database_url() -> str:
    """Run registry location (``VRMIX_DATABASE_URL``)."""
    default = f"sqlite:///{DEFAULT_DATA_DIR / 'vrmix.db'}"
    return os.getenv("VRMIX_DATABASE_URL", default)


def load_config_file(path: Path) -> Dict[str, str]:
    """Read the flat ``[vrmix]`` section of an INI config file.

    Keys are normalized to snake_case so ``batch-size`` and ``batch_size``
    address the same setting.
    """
    if not path.exists():
        raise FileNotFoundError(f"Config file does not exist: {path}")

    parser = configparser.ConfigParser()
    parser.read(path)
    if not parser.has_section(CONFIG_SECTION):
        return {}

    return {
        key.replace("-", "_"): value.strip()
        for key, value in parser.items(CONFIG_SECTION)
    }
