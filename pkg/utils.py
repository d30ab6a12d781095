"""
Utilities Module

This module provides the shared plumbing of the library:
- Logging setup
- Environment settings loaded from .env
- Quadrature rules, memoized with cachetools
- Operation timing
- Seeded random number generators and JSON helpers

The numerical modules depend on these helpers but never on each other's
logging or caching internals.
"""

import json
import logging
import math
import os
import threading
import time
import warnings
from contextlib import contextmanager
from typing import Any, Dict, Optional, Tuple

import numpy as np
from cachetools import LRUCache, cached
from dotenv import load_dotenv
from scipy.special import roots_legendre

from exceptions import NumericalWarning

LOGGER_NAME = "sl2_harmonic"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


def setup_logging(log_file: Optional[str] = None, level: Optional[str] = None) -> logging.Logger:
    """
    Configure logging for the application.

    Args:
        log_file (Optional[str]): Path to a log file; falls back to SL2_LOG_FILE
        level (Optional[str]): Level name; falls back to LOG_LEVEL, then INFO

    Returns:
        Logger: Configured application logger
    """
    load_dotenv(override=False)
    level_name = (level or os.getenv("LOG_LEVEL") or "INFO").upper()
    log_file = log_file or os.getenv("SL2_LOG_FILE")

    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    logging.captureWarnings(True)
    return logging.getLogger(LOGGER_NAME)


def load_settings() -> Dict[str, Any]:
    """Environment defaults for the command line."""
    load_dotenv(override=False)
    return {
        "seed": int(os.getenv("SL2_SEED", "42")),
        "out_dir": os.getenv("SL2_OUT_DIR"),
    }


def flag(message: str, category: type = NumericalWarning, **details: Any) -> None:
    """Log a numerical quality flag and raise it as a warning."""
    suffix = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in details.items())
    logger.warning(f"{message} ({suffix})" if suffix else message)
    warnings.warn(message, category, stacklevel=3)


# Quadrature rules are pure functions of their parameters.
rule_cache = LRUCache(maxsize=256)


@cached(rule_cache)
def gauss_legendre(n: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    nodes, weights = roots_legendre(n)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (nodes + 1.0)
    weights = half * weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@cached(rule_cache)
def log_tangent_rule(t: float, step: float, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature for (1/2pi) * integral over [0, 2pi) adapted to diag(e^t, e^-t).

    Each quadrant is parametrized by v = log|tan theta|, in which the
    distortion of the circle by the diagonal element is a shift by 2t, and
    integrated with the trapezoid rule on [-radius - 2|t|, radius + 2|t|].
    """
    reach = radius + 2.0 * abs(t)
    half = int(math.ceil(reach / step))
    v = step * np.arange(-half, half + 1)
    base = np.arctan(np.exp(v))
    weight = step / (2.0 * np.cosh(v)) / (2.0 * math.pi)
    theta = np.concatenate([base, math.pi - base, math.pi + base, 2.0 * math.pi - base])
    weights = np.tile(weight, 4)
    theta.setflags(write=False)
    weights.setflags(write=False)
    return theta, weights


class PerformanceMetrics:
    """Track and report operation timings."""

    def __init__(self):
        self.operation_times: Dict[str, list] = {}
        self._lock = threading.Lock()

    def record_operation(self, operation: str, duration: float):
        with self._lock:
            self.operation_times.setdefault(operation, []).append(duration)

    def get_metrics(self) -> Dict[str, Dict[str, float]]:
        with self._lock:
            return {
                op: {
                    "avg_time": sum(times) / len(times),
                    "max_time": max(times),
                    "total_ops": len(times),
                }
                for op, times in self.operation_times.items()
            }

    def log_summary(self):
        for op, stats in sorted(self.get_metrics().items()):
            logger.info(f"{op}: {stats['total_ops']} run(s), "
                        f"avg {stats['avg_time']:.3f}s, max {stats['max_time']:.3f}s")


metrics = PerformanceMetrics()


@contextmanager
def measure_time(operation: str):
    """Context manager to measure operation time"""
    start_time = time.perf_counter()
    try:
        yield
    finally:
        metrics.record_operation(operation, time.perf_counter() - start_time)


def make_rng(seed: int, stream: str = "") -> np.random.Generator:
    """Independent generator per named stream, reproducible for a fixed seed."""
    salt = sum(ord(ch) * (i + 1) for i, ch in enumerate(stream))
    return np.random.default_rng([seed, salt])


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars and arrays into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dump_json(payload: Dict[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, UTF-8, trailing newline."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
