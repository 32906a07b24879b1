"""Bracketing and bisection for monotone threshold equations."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from hetsleep.errors import BracketError

LO_START = 1e-12
HI_START = 1e-6
MAX_ITER = 200
REL_WIDTH = 1e-12


def _positive(v: float) -> bool:
    # overflowed or NaN residuals only occur far above the root
    return not math.isfinite(v) or v > 0


def bracket_increasing(g: Callable[[float], float], lo: float = LO_START,
                       hi: float = HI_START, max_doublings: int = 1100) -> tuple[float, float]:
    """Find ``lo < hi`` with ``g(lo) <= 0 < g(hi)`` for an increasing ``g``.

    ``hi`` is doubled until the sign flips. ``lo`` is only lowered when the
    root sits below the default starting point.
    """
    while _positive(g(lo)):
        lo *= 1e-3
        if lo < 1e-300:
            raise BracketError("residual positive at every probed lower end")
    hi = max(hi, lo)
    for _ in range(max_doublings):
        if _positive(g(hi)):
            return lo, hi
        lo = hi
        hi *= 2.0
    raise BracketError(f"no sign change found up to {hi:g}")


def bisect_increasing(g: Callable[[float], float], lo: float = LO_START,
                      hi: float = HI_START, max_iter: int = MAX_ITER,
                      rel_width: float = REL_WIDTH) -> float:
    """Root of an increasing scalar function by doubling then bisection."""
    lo, hi = bracket_increasing(g, lo, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _positive(g(mid)):
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_width * hi:
            break
    return 0.5 * (lo + hi)


def bisect_vectorized(g: Callable[[np.ndarray], np.ndarray], lo: np.ndarray,
                      hi: np.ndarray, max_iter: int = 300, atol: float = 1e-9) -> np.ndarray:
    """Elementwise bisection; ``g(lo)`` and ``g(hi)`` must differ in sign.

    The side that ``lo`` is on is taken from ``g(lo)``, so decreasing and
    increasing residuals are both handled.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo_pos = g(lo) > 0
    for _ in range(max_iter):
        if np.all(hi - lo <= atol):
            break
        mid = 0.5 * (lo + hi)
        same = (g(mid) > 0) == lo_pos
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)
