"""Altitude / half-beamwidth block.

With the UAV location and bandwidths frozen, the best altitude for a given
beamwidth is the lowest one that still covers the farthest terminal
(:func:`optimal_height`). That leaves two one-dimensional problems:

* case 1, the UAV sits at ``h_min`` and the beam is as narrow as coverage
  allows (closed form);
* case 2, the UAV hovers exactly at the coverage height
  ``sqrt(D_max) / tan(theta)`` and ``theta`` trades beam gain against
  distance. For a pathloss exponent of 2 the objective is unimodal and the
  stationary point is found by bisection on :func:`h1`; for other exponents
  a grid scan plus a golden-section polish is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from ._numerics import bisect, golden_min
from .model import FEAS_RTOL, Scenario

HALF_PI = 0.5 * math.pi
BISECT_TOL = 1e-9
GRID_POINTS = 2000


@dataclass(frozen=True)
class AltBeamInput:
    A: np.ndarray  # a * w_k * (2^(R_k/w_k) - 1)
    D: np.ndarray  # squared horizontal distances, m^2
    caps: np.ndarray
    h_min: float
    h_max: float
    theta_lo: float
    theta_hi: float
    alpha: float = 2.0

    @property
    def d_max(self) -> float:
        return float(np.max(self.D))

    @property
    def K(self) -> int:
        return len(self.A)


@dataclass(frozen=True)
class AltBeamResult:
    height: float
    half_beamwidth: float
    objective: float
    case_tag: str  # case1 | case2
    status: str  # ok | infeasible

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _infeasible(tag: str) -> AltBeamResult:
    return AltBeamResult(math.nan, math.nan, math.inf, tag, "infeasible")


def altbeam_input(scn: Scenario, y, w) -> AltBeamInput:
    return AltBeamInput(
        A=scn.a * model.spectral_cost(w, scn.rates),
        D=model.sq_dists(scn, y),
        caps=np.asarray(scn.caps, dtype=float),
        h_min=scn.h_min,
        h_max=scn.h_max,
        theta_lo=scn.theta_lo,
        theta_hi=scn.theta_hi,
        alpha=scn.pathloss_exp,
    )


def optimal_height(d_max: float, theta: float, h_min: float) -> float:
    """Lowest admissible altitude that keeps every terminal inside the beam."""
    if not 0 < theta < HALF_PI:
        raise ValueError(f"theta must lie in (0, pi/2), got {theta}")
    return max(math.sqrt(d_max) / math.tan(theta), h_min)


def per_gt_power(inp: AltBeamInput, height: float, theta: float) -> np.ndarray:
    return inp.A * theta**2 * (inp.D + height**2) ** (inp.alpha / 2)


def objective(inp: AltBeamInput, height: float, theta: float) -> float:
    return float(np.sum(per_gt_power(inp, height, theta)))


def _caps_ok(inp: AltBeamInput, height: float, theta: float) -> bool:
    return bool(np.all(per_gt_power(inp, height, theta) <= inp.caps * (1 + FEAS_RTOL)))


# --- case 1 -----------------------------------------------------------------


def solve_case1(inp: AltBeamInput) -> AltBeamResult:
    H = inp.h_min
    theta = max(math.atan(math.sqrt(inp.d_max) / H), inp.theta_lo)
    if theta > inp.theta_hi or not _caps_ok(inp, H, theta):
        return _infeasible("case1")
    return AltBeamResult(H, theta, objective(inp, H, theta), "case1", "ok")


# --- derivative analysis for alpha = 2 --------------------------------------


def _half_sin2x_minus_x(x: float) -> float:
    """sin(2x)/2 - x without cancellation for small x."""
    t = 2.0 * x
    if t >= 1.0:
        return 0.5 * math.sin(t) - x
    # 0.5 * sum_{n>=1} (-1)^n t^(2n+1) / (2n+1)!
    term = t
    total = 0.0
    t2 = t * t
    for n in range(1, 12):
        term *= -t2 / ((2 * n) * (2 * n + 1))
        total += term
    return 0.5 * total


def h1(x: float) -> float:
    """(cot x - x - x cot^2 x) cot x on (0, pi/2); increases from -2/3 to 0."""
    if not 0 < x < HALF_PI:
        raise ValueError(f"h1 is defined on (0, pi/2), got {x}")
    if x < 1e-3:
        x2 = x * x
        return -2.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (2.0 / 63.0 + x2 * 4.0 / 675.0))
    s = math.sin(x)
    return math.cos(x) * _half_sin2x_minus_x(x) / (s * s * s)


def h2(x: float) -> float:
    """x + 2x cos^2 x - (3/2) sin 2x; non-negative on [0, pi/2)."""
    if not 0 <= x < HALF_PI:
        raise ValueError(f"h2 is defined on [0, pi/2), got {x}")
    t = 2.0 * x
    if t >= 1.0:
        return t + 0.5 * t * math.cos(t) - 1.5 * math.sin(t)
    total = 0.0
    t2 = t * t
    even_fact = 24.0  # (2n)! at n = 2
    odd_fact = 120.0  # (2n+1)! at n = 2
    tp = t2 * t2 * t
    for n in range(2, 12):
        total += (-1) ** n * (0.5 / even_fact - 1.5 / odd_fact) * tp
        even_fact *= (2 * n + 1) * (2 * n + 2)
        odd_fact *= (2 * n + 2) * (2 * n + 3)
        tp *= t2
    return total


def h1_inverse(c: float, tol: float = BISECT_TOL) -> float:
    """Solve h1(x) = c by bisection; clamps to the domain ends outside (-2/3, 0)."""
    if c <= -2.0 / 3.0:
        return 0.0
    if c >= 0.0:
        return HALF_PI
    lo, hi = bisect(lambda x: h1(x) >= c, 0.0, HALF_PI, tol)
    return 0.5 * (lo + hi)


def f_k(x: float, D_k: float, d_max: float) -> float:
    """x^2 (D_k + d_max cot^2 x), extended by continuity at x = 0 and pi/2."""
    if x <= 0.0:
        return d_max
    if x >= HALF_PI:
        return HALF_PI**2 * D_k
    xc = x * math.cos(x) / math.sin(x)
    return x * x * D_k + d_max * xc * xc


def theta_power_interval(A_k: float, D_k: float, d_max: float, P_k: float, tol: float = BISECT_TOL) -> tuple[float, float] | None:
    """Beamwidths on which ``A_k * f_k(theta) <= P_k`` (alpha = 2), or None.

    The returned endpoints are always on the feasible side of the bisection
    bracket. ``0`` and ``pi/2`` mean the interval is open at that end.
    """
    if A_k <= 0 or d_max <= 0:
        return (0.0, HALF_PI)
    target = P_k / A_k

    def f(x):
        return f_k(x, D_k, d_max)

    if D_k >= (2.0 / 3.0) * d_max:
        # increasing on the whole domain, infimum d_max at 0+
        if d_max >= target:
            return None
        if f(HALF_PI) <= target:
            return (0.0, HALF_PI)
        lo, _ = bisect(lambda x: f(x) > target, 0.0, HALF_PI, tol)
        return (0.0, lo)

    x_star = h1_inverse(-D_k / d_max, tol=min(tol, 1e-12))
    f_star = f(x_star)
    if f_star > target * (1 + 1e-12):
        return None
    if f_star >= target:
        return (x_star, x_star)
    if d_max <= target:
        left = 0.0
    else:
        # f decreasing on (0, x_star]
        _, left = bisect(lambda x: f(x) <= target, 0.0, x_star, tol)
    if f(HALF_PI) <= target:
        right = HALF_PI
    else:
        right, _ = bisect(lambda x: f(x) > target, x_star, HALF_PI, tol)
    return (left, right)


def _case2_range(inp: AltBeamInput) -> tuple[float, float]:
    """Beamwidth range allowed by the box bounds and ``h_min <= H <= h_max``."""
    r = math.sqrt(inp.d_max)
    return max(inp.theta_lo, math.atan(r / inp.h_max)), min(inp.theta_hi, math.atan(r / inp.h_min))


def _case2_result(inp: AltBeamInput, theta: float) -> AltBeamResult:
    H = min(max(math.sqrt(inp.d_max) / math.tan(theta), inp.h_min), inp.h_max)
    return AltBeamResult(H, theta, objective(inp, H, theta), "case2", "ok")


def solve_case2_alpha2(inp: AltBeamInput, tol: float = BISECT_TOL) -> AltBeamResult:
    if inp.alpha != 2:
        raise ValueError("the bisection path needs a pathloss exponent of 2")
    d_max = inp.d_max
    if d_max <= 0:
        return _infeasible("case2")
    t_lo, t_hi = _case2_range(inp)
    # Each cap's feasible beamwidths form an interval (f_k is unimodal), so a
    # terminal whose cap holds at both ends of the range cannot shrink it.
    ends = _case2_powers(inp, np.array([t_lo, t_hi])) if t_lo <= t_hi else None
    for k, (A_k, D_k, P_k) in enumerate(zip(inp.A, inp.D, inp.caps)):
        if ends is not None and ends[k, 0] <= P_k and ends[k, 1] <= P_k:
            continue
        iv = theta_power_interval(A_k, D_k, d_max, P_k, tol)
        if iv is None:
            return _infeasible("case2")
        t_lo = max(t_lo, iv[0])
        t_hi = min(t_hi, iv[1])
    if t_lo > t_hi:
        return _infeasible("case2")

    # The objective derivative is 2*theta*(sum A_k D_k + sum A_k * d_max * h1(theta)).
    A_sum = float(np.sum(inp.A))
    if A_sum <= 0:
        return _case2_result(inp, t_lo)
    c = float(np.dot(inp.A, inp.D)) / A_sum

    def slope_sign(x):
        return c + d_max * h1(x)

    if slope_sign(t_lo) >= 0:
        theta = t_lo
    elif slope_sign(t_hi) < 0:
        theta = t_hi
    else:
        lo, hi = bisect(lambda x: slope_sign(x) >= 0, t_lo, t_hi, tol)
        theta = 0.5 * (lo + hi)
    return _case2_result(inp, theta)


def _case2_powers(inp: AltBeamInput, theta):
    """Per-GT case-2 powers, shape (K,) or (K, N) for an array of thetas."""
    theta = np.asarray(theta, dtype=float)
    cot2 = (np.cos(theta) / np.sin(theta)) ** 2
    geo = (inp.D[:, None] + inp.d_max * np.atleast_1d(cot2)[None, :]) ** (inp.alpha / 2)
    out = inp.A[:, None] * np.atleast_1d(theta)[None, :] ** 2 * geo
    return out if theta.ndim else out[:, 0]


def solve_case2_general(inp: AltBeamInput, step: float | None = None) -> AltBeamResult:
    """Grid scan over the case-2 range, then golden-section within one step."""
    d_max = inp.d_max
    if d_max <= 0:
        return _infeasible("case2")
    t_lo, t_hi = _case2_range(inp)
    if t_lo > t_hi:
        return _infeasible("case2")
    if step is None:
        step = (inp.theta_hi - inp.theta_lo) / GRID_POINTS
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")

    n = max(2, int(math.ceil((t_hi - t_lo) / step)) + 1)
    grid = np.linspace(t_lo, t_hi, n)
    p = _case2_powers(inp, grid)
    feasible = np.all(p <= inp.caps[:, None] * (1 + FEAS_RTOL), axis=0)
    if not feasible.any():
        return _infeasible("case2")
    obj = np.where(feasible, p.sum(axis=0), np.inf)
    g = float(grid[int(np.argmin(obj))])

    def fn(theta):
        pk = _case2_powers(inp, theta)
        if np.all(pk <= inp.caps * (1 + FEAS_RTOL)):
            return float(pk.sum())
        return math.inf

    theta, _ = golden_min(fn, max(t_lo, g - step), min(t_hi, g + step), anchor=g)
    return _case2_result(inp, theta)


def solve_altbeam(inp: AltBeamInput, step: float | None = None, tol: float = BISECT_TOL) -> AltBeamResult:
    """Best of case 1 and case 2; ties go to case 1 (lower altitude)."""
    c1 = solve_case1(inp)
    c2 = solve_case2_alpha2(inp, tol) if inp.alpha == 2 else solve_case2_general(inp, step)
    if not c1.ok and not c2.ok:
        return _infeasible("case1")
    if c1.ok and (not c2.ok or c1.objective <= c2.objective):
        return c1
    return c2
