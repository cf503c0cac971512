"""
config.py — Centralized configuration for the valence toolkit.
All tunable budgets, thresholds, and logging live here.

Every budget can be overridden from the environment (or a .env file next
to the sources), e.g. ``VALENCE_NORM_CAP=128``.
"""

import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import ConfigError

# ──────────────────────────────────────────────
# Paths
# ──────────────────────────────────────────────
BASE_DIR    = Path(__file__).resolve().parent
SAMPLES_DIR = BASE_DIR / "samples"

load_dotenv(BASE_DIR / ".env")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# ──────────────────────────────────────────────
# Search budgets
# ──────────────────────────────────────────────
NORM_CAP            = _env_int("VALENCE_NORM_CAP", 64)       # configuration norm cap
MAX_STEPS           = _env_int("VALENCE_MAX_STEPS", 64)      # run length / derivation steps
MAX_WORD_LEN        = _env_int("VALENCE_MAX_WORD_LEN", 8)    # default slice length
EXHAUSTIVE_EVAL_CAP = _env_int("VALENCE_EVAL_CAP", 9)        # nodes; 9! linear extensions max
GATE_SEARCH_LIMIT   = _env_int("VALENCE_GATE_SEARCH_LIMIT", 2000)  # submonoid elements
CFG_ITEM_LIMIT      = _env_int("VALENCE_CFG_ITEM_LIMIT", 400_000)  # sequence-grammar work (items plus shuffle/join steps)

# Integer coordinates behave like signed 64-bit words; leaving the range raises.
INT_WIDTH_BITS = 64
INT_MAX        = (1 << (INT_WIDTH_BITS - 1)) - 1
INT_MIN        = -(1 << (INT_WIDTH_BITS - 1))

# ──────────────────────────────────────────────
# Lab defaults
# ──────────────────────────────────────────────
DEFAULT_PUMP_SET: Tuple[int, ...] = (0, 2)
CHAIN_PREFIX_LEN = 5   # elements shown for infinite ascending chains

# rapidfuzz score needed before an unknown symbol gets a "did you mean"
SUGGESTION_THRESHOLD = 60

# ──────────────────────────────────────────────
# Logging
# ──────────────────────────────────────────────
LOG_LEVEL = getattr(logging, os.getenv("VALENCE_LOG_LEVEL", "INFO").upper(), logging.INFO)
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logger(name: str = "valence") -> logging.Logger:
    """
    Returns a logger that writes to stderr so JSON on stdout stays clean.
    Safe to call multiple times; handlers are added once.
    """
    log = logging.getLogger(name)
    if log.handlers:
        return log  # already configured

    log.setLevel(LOG_LEVEL)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setLevel(logging.DEBUG)
    stream_handler.setFormatter(formatter)

    log.addHandler(stream_handler)
    log.propagate = False
    return log


logger = setup_logger()


# ──────────────────────────────────────────────
# Run configuration (CLI)
# ──────────────────────────────────────────────

@dataclass(frozen=True)
class RunConfig:
    norm_cap:  int = NORM_CAP
    max_steps: int = MAX_STEPS
    maxlen:    int = MAX_WORD_LEN
    out:       Optional[Path] = None
    seed:      int = 0

    def __post_init__(self) -> None:
        for name in ("norm_cap", "max_steps", "maxlen"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
