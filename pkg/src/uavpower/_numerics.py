"""Small bracketing routines shared by the block solvers."""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5) - 1) / 2


def bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float, max_iter: int = 200) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` around the switch point of a monotone predicate.

    Requires ``pred(lo)`` false and ``pred(hi)`` true. Returns the final
    bracket, so callers can pick whichever side is safe for them.
    """
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def golden_min(fn: Callable[[float], float], lo: float, hi: float, anchor: float, tol: float = 1e-13) -> tuple[float, float]:
    """Golden-section search on ``[lo, hi]`` that tolerates ``inf`` values.

    ``fn`` may return ``inf`` on infeasible points. When both probes are
    infeasible the bracket moves toward ``anchor``, a known feasible point.
    Returns ``(x, fn(x))`` for the best point evaluated.
    """
    best_x, best_f = anchor, fn(anchor)
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(200):
        if hi - lo <= tol * max(1.0, abs(lo)):
            break
        for x, f in ((c, fc), (d, fd)):
            if f < best_f:
                best_x, best_f = x, f
        if math.isinf(fc) and math.isinf(fd):
            go_left = c > anchor
        else:
            go_left = fc <= fd
        if go_left:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = fn(d)
    for x, f in ((c, fc), (d, fd)):
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f
