"""Bandwidth block: closed-form KKT allocation with a bisected dual variable.

For fixed geometry the power of terminal k is ``F_k * u_k(w_k)`` with
``u_k(x) = x (2^(R_k/x) - 1)``, convex and decreasing in ``x``. Stationarity
of the Lagrangian gives ``lambda = F_k * u(ln2 * R_k / w_k)`` where
``u(x) = x e^x - e^x + 1``, so every ``w_k`` is a function of the single
multiplier, which is tuned until the budget is met with equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from . import model
from ._numerics import bisect
from .model import Scenario

LN2 = math.log(2)


@dataclass(frozen=True)
class BandwidthInput:
    F: np.ndarray  # a * theta^2 * (D_k + H^2)^(alpha/2)
    rates: np.ndarray
    caps: np.ndarray
    budget: float

    @property
    def K(self) -> int:
        return len(self.F)


@dataclass(frozen=True)
class BandwidthResult:
    w: np.ndarray
    lam: float
    status: str  # ok | infeasible
    floors: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def bandwidth_input(scn: Scenario, y, height: float, theta: float) -> BandwidthInput:
    geo = (model.sq_dists(scn, y) + height**2) ** (scn.pathloss_exp / 2)
    return BandwidthInput(
        F=scn.a * theta**2 * geo,
        rates=np.asarray(scn.rates, dtype=float),
        caps=np.asarray(scn.caps, dtype=float),
        budget=scn.total_bandwidth,
    )


def objective(inp: BandwidthInput, w) -> float:
    return float(np.sum(inp.F * model.spectral_cost(w, inp.rates)))


# --- u_k and its inverse ----------------------------------------------------


def u_k(x, R_k):
    """x * 2^(R_k/x) - x for x > 0. Decreasing toward R_k * ln 2."""
    return model.spectral_cost(x, R_k) if np.ndim(x) else float(model.spectral_cost(x, R_k))


def _ratio_m1_scalar(z: float) -> float:
    """expm1(z)/z - 1 for z > 0, without cancellation for small z."""
    if z < 1e-2:
        acc = 0.0
        for n in range(8, 0, -1):
            acc = acc * z + 1.0 / math.factorial(n + 1)
        return acc * z
    if z > 700:
        return math.inf
    return math.expm1(z) / z - 1.0


def u_k_inv(t: float, R_k: float) -> float:
    """Bandwidth at which ``u_k`` equals ``t``.

    Returns ``math.inf`` when ``t <= R_k ln 2``: no finite bandwidth brings
    the power down that far. ``R_k == 0`` gives 0 (no demand, no floor).
    """
    if R_k <= 0:
        return 0.0
    asym = R_k * LN2
    if t <= asym:
        return math.inf
    # with z = R_k ln2 / x, u_k(x) = R_k ln2 * expm1(z) / z
    delta = t / asym - 1.0
    hi = 1.0
    while _ratio_m1_scalar(hi) < delta:
        hi *= 2.0
    lo, hi = bisect(lambda z: _ratio_m1_scalar(z) >= delta, 0.0, hi, tol=0.0, max_iter=2000)
    # lower z means larger x and lower u_k: the lo side keeps u_k <= t
    z = lo if lo > 0 else hi
    return asym / z


# --- u and its inverse ------------------------------------------------------

# coefficients (n-1)/n! for n = 2..15 of the Taylor series of u
_U_SERIES = np.array([(n - 1) / math.factorial(n) for n in range(2, 16)])


def _u_series(x):
    acc = np.zeros_like(x)
    for c in _U_SERIES[::-1]:
        acc = acc * x + c
    return acc * x * x


def _u_arr(x: np.ndarray) -> np.ndarray:
    # arguments above ~709 overflow to inf either way; clipping only avoids the warning
    out = (x - 1.0) * np.exp(np.minimum(x, 709.0)) + 1.0
    small = x < 0.1
    if small.any():
        out[small] = _u_series(x[small])
    return out


def u(x):
    """x e^x - e^x + 1 for x >= 0; strictly increasing from u(0) = 0."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(arr < 0):
        raise ValueError("u is defined for x >= 0")
    out = _u_arr(arr)
    return float(out[0]) if np.ndim(x) == 0 else out


def u_inv(t: float) -> float:
    """Inverse of :func:`u` by bisection with a geometrically grown bracket."""
    if t < 0:
        raise ValueError(f"u_inv needs t >= 0, got {t}")
    if t == 0:
        return 0.0
    hi = 1.0
    while u(hi) < t:
        hi *= 2.0
    lo, hi = bisect(lambda x: u(x) >= t, 0.0, hi, tol=0.0, max_iter=2000)
    return 0.5 * (lo + hi)


def u_inv_fast(t: np.ndarray) -> np.ndarray:
    """Vectorised inverse of :func:`u` via the Lambert W function.

    ``(x - 1) e^x = t - 1`` gives ``x = 1 + W((t - 1)/e)``; Newton steps on
    the series-accurate ``u`` fix the cancellation near ``t = 0``.
    """
    t = np.asarray(t, dtype=float)
    x = 1.0 + lambertw((t - 1.0) / math.e).real
    small = t < 1e-4
    if small.any():
        # u(x) >= x^2/2 so sqrt(2t) is an upper bound; Newton from the right
        # on a convex increasing function does not overshoot.
        x[small] = np.sqrt(2.0 * t[small])
    refine = (t > 0) & (t < 1e250)
    xr = x[refine]
    if xr.size:
        tr = t[refine]
        steps = 3 if small.any() else 2
        for _ in range(steps):
            xr = np.maximum(xr - (_u_arr(xr) - tr) / (xr * np.exp(xr)), 0.5 * xr)
        x[refine] = xr
    x[t <= 0] = 0.0
    return x


# --- floors, hat_u, and the dual bisection ----------------------------------


# Taylor coefficients of expm1(z)/z - 1 = sum z^n / (n+1)!, n = 1..8
_RATIO_SERIES = np.array([1.0 / math.factorial(n + 1) for n in range(1, 9)])


def _ratio_m1(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """expm1(z)/z - 1 and its derivative, series-accurate for small z."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        val = np.expm1(z) / z - 1.0
        der = (np.exp(z) * z - np.expm1(z)) / (z * z)
    small = z < 1e-2
    if small.any():
        zs = z[small]
        v = np.zeros_like(zs)
        d = np.zeros_like(zs)
        for n in range(len(_RATIO_SERIES), 0, -1):
            c = _RATIO_SERIES[n - 1]
            v = v * zs + c
            d = d * zs + n * c
        val[small] = v * zs
        der[small] = d
    return val, der


def _u_k_inv_arr(t: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Elementwise :func:`u_k_inv` via the lower Lambert W branch.

    With ``z = R ln2 / x`` the equation is ``e^z - 1 = tau z``; its positive
    root is ``-1/tau - W_{-1}(-e^(-1/tau) / tau)``. Newton steps on the
    convex increasing ``expm1(z)/z - tau`` polish it, using a series where
    the closed form cancels (``tau`` close to 1).
    """
    out = np.zeros(len(R))
    asym = R * LN2
    pos = R > 0
    out[pos & (t <= asym)] = math.inf
    act = pos & (t > asym)
    if not act.any():
        return out
    tau = t[act] / asym[act]
    delta = tau - 1.0
    inv = 1.0 / tau
    with np.errstate(over="ignore", invalid="ignore"):
        z = -inv - lambertw(-np.exp(-inv) * inv, k=-1).real
    # (expm1(z)/z - 1) > z/2, so 2 delta lies right of the root
    z = np.where((delta < 0.1) | ~np.isfinite(z) | (z <= 0), 2.0 * delta, z)
    for _ in range(50):
        val, der = _ratio_m1(z)
        step = (val - delta) / der
        step = np.where(np.isfinite(step), step, 0.0)
        z_new = np.maximum(z - step, 0.5 * z)
        if np.all(np.abs(z_new - z) <= 1e-15 * z):
            z = z_new
            break
        z = z_new
    out[act] = asym[act] / z
    return out


def floor_W(inp: BandwidthInput) -> tuple[np.ndarray, bool]:
    """Per-terminal minimal bandwidth implied by the power caps.

    Returns ``(W, feasible)``. ``W_k`` is ``inf`` when even unlimited
    bandwidth cannot meet terminal k's cap.
    """
    with np.errstate(divide="ignore"):
        W = _u_k_inv_arr(inp.caps / inp.F, inp.rates)
    feasible = bool(np.all(np.isfinite(W)) and W.sum() <= inp.budget)
    return W, feasible


def _bandwidths(lam: float, inp: BandwidthInput, W: np.ndarray, slope: bool = False):
    """Per-terminal bandwidths at dual value ``lam`` (and d sum(w) / d lam)."""
    active = inp.rates > 0
    w = np.zeros(inp.K)
    z = u_inv_fast(lam / inp.F[active])
    with np.errstate(divide="ignore"):
        w[active] = LN2 * inp.rates[active] / z
    out = np.maximum(w, W)
    if not slope:
        return out
    # lam = F u(z), w = ln2 R / z  =>  dw/dlam = -w / (z * F * z e^z)
    free = (w[active] > W[active]) & (z > 0)
    wa, za, Fa = w[active][free], z[free], inp.F[active][free]
    return out, float(np.sum(-wa / (za * Fa * za * np.exp(za))))


def hat_u(lam: float, inp: BandwidthInput, W: np.ndarray) -> float:
    """Total bandwidth consumed at dual value ``lam``; decreasing in ``lam``."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    return float(np.sum(_bandwidths(lam, inp, W)))


def solve_bandwidth(inp: BandwidthInput, rtol: float = 1e-13) -> BandwidthResult:
    """Water-filling style allocation meeting the budget with equality.

    The dual value is bracketed and then located by bisection in log scale,
    accelerated with Newton steps whenever they stay inside the bracket,
    until the budget mismatch is below ``rtol * B``. The returned
    allocation never exceeds the budget.
    """
    W, feasible = floor_W(inp)
    if not feasible:
        return BandwidthResult(np.full(inp.K, math.nan), math.nan, "infeasible", W)
    active = inp.rates > 0
    if not np.any(active):
        return BandwidthResult(W.copy(), 0.0, "ok", W)
    B = inp.budget
    if W.sum() >= B * (1 - 1e-15):
        return BandwidthResult(W.copy(), math.inf, "ok", W)

    # every w_k(lam) exceeds B below lo; hat_u < B above hi unless floors bind
    Fa, Ra = inp.F[active], inp.rates[active]
    lo = float(np.min(Fa * u(LN2 * Ra / B))) * 0.5
    hi = max(float(np.max(Fa * u(LN2 * Ra * inp.K / B))), lo) * 2.0
    while lo > 0 and hat_u(lo, inp, W) < B:
        lo *= 1e-3
    if not lo > 0:
        lo = 1e-300
    while hat_u(hi, inp, W) >= B:
        hi *= 2.0

    # safeguarded Newton on log(lam): a step leaving the bracket is
    # replaced by bisection, so the bracket shrinks every iteration
    llo, lhi = math.log(lo), math.log(hi)
    x = lhi
    w, ds = _bandwidths(hi, inp, W, slope=True)
    s_x = float(w.sum())
    for _ in range(200):
        if abs(B - s_x) <= rtol * B:
            break
        cand = x + (B - s_x) / (ds * math.exp(x)) if ds < 0 else math.nan
        if not llo < cand < lhi:
            cand = 0.5 * (llo + lhi)
        if cand <= llo or cand >= lhi:
            break
        x = cand
        w, ds = _bandwidths(math.exp(x), inp, W, slope=True)
        s_x = float(w.sum())
        if s_x >= B:
            llo = x
        else:
            lhi = x
    if s_x > B:
        # shave the tiny excess off the terminals above their floors
        free = w > W
        slack = w[free] - W[free]
        w = w.copy()
        w[free] -= (s_x - B) * slack / float(slack.sum())
    return BandwidthResult(w, math.exp(x), "ok", W)
