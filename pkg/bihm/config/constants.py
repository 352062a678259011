"""Constant variables used throughout bihm.

This file stores static values shared by the numerical core, the file
formats and the command line. Keeping them in one place keeps the rest
of the code clean and easy to read.
"""
from logging.handlers import RotatingFileHandler
import pathlib

# Package version
VERSION = "v0.4.0"

# Sigmoid outputs are clamped to [CLAMP_EPS, 1 - CLAMP_EPS] before taking logs.
CLAMP_EPS = 1e-7

# Initialization
INIT_BIAS = -1.0

# Adam
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Training defaults
DEFAULT_K_TRAIN = 10
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BATCH_SIZE = 100
DEFAULT_L1_LAMBDA = 1e-3

# Gibbs sampling defaults
DEFAULT_PROPOSALS = 25
DEFAULT_PTILDE_K = 25

# Exhaustive enumeration caps
DEFAULT_MAX_TOTAL_BITS = 24
DEFAULT_MAX_FREE_BITS = 16

# File formats
DATASET_MAGIC = b"BIHMDATA"
CHECKPOINT_MAGIC = b"BIHMMODL"
FORMAT_VERSION = 1

METRICS_HEADER = ("epoch", "updates", "train_logptilde", "valid_logptilde", "two_log_z", "ess_pct", "seconds")
# train --track-logp appends these
TRACKED_METRICS_HEADER = METRICS_HEADER + ("logp", "logpstar")

# File Directory
directory = pathlib.Path.cwd()
ldir = directory / "logs"


def make_handler(log_dir: pathlib.Path = ldir) -> RotatingFileHandler:
    """Creates the default rotating log handler, making the log directory if needed."""
    log_dir.mkdir(parents=True, exist_ok=True)
    return RotatingFileHandler(
        filename=log_dir / "bihm.log",
        encoding="utf-8",
        mode="a",
        backupCount=10,
        maxBytes=100000,
    )
