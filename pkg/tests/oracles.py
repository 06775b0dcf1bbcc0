"""Independent reference computations used by the tests.

None of these call into the solver internals: they evaluate the model
formulas directly and search by brute force or with scipy root finders.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np
from scipy.optimize import brentq

LN2 = math.log(2)


# --- scalar functions -------------------------------------------------------


def u_ref(x: float) -> float:
    return x * math.exp(x) - math.exp(x) + 1.0


def u_k_ref(x: float, R: float) -> float:
    return x * (2.0 ** (R / x) - 1.0)


def u_inv_ref(t: float) -> float:
    if t == 0:
        return 0.0
    hi = 1.0
    while u_ref(hi) < t:
        hi *= 2.0
    return brentq(lambda x: u_ref(x) - t, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def u_k_inv_ref(t: float, R: float) -> float:
    """Bandwidth x with u_k(x) = t, solved on z = R ln2 / x."""
    delta = t / (R * LN2) - 1.0

    def g(z):
        return math.expm1(z) / z - 1.0 - delta

    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
    z = brentq(g, 1e-300, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return R * LN2 / z


def u_k_inv_decimal(t: float, R: float, digits: int = 60) -> float:
    """Same inverse in 60-digit decimal arithmetic, for ill-conditioned t."""
    with localcontext() as ctx:
        ctx.prec = digits
        ln2 = Decimal(2).ln()
        delta = Decimal(t) / (Decimal(R) * ln2) - 1
        lo, hi = Decimal(0), Decimal(1)
        while (hi.exp() - 1) / hi - 1 < delta:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if (mid.exp() - 1) / mid - 1 < delta:
                lo = mid
            else:
                hi = mid
        return float(Decimal(R) * ln2 / ((lo + hi) / 2))


# --- altitude / beamwidth ---------------------------------------------------


def altbeam_brute(A, D, caps, h_min, h_max, t_lo, t_hi, alpha=2.0, n=200, levels=6):
    """Minimum of sum A_k t^2 (D_k + H^2)^(alpha/2) over a (theta, H) grid.

    H is parametrised as a fraction of the admissible interval
    [max(coverage height, h_min), h_max], so every grid point covers all
    terminals. Each level zooms the grid to +-3 cells around the incumbent.
    Returns (objective, theta, H) or (inf, nan, nan) when no grid point is
    feasible.
    """
    A, D, caps = (np.asarray(v, dtype=float) for v in (A, D, caps))
    r = math.sqrt(float(np.max(D)))
    lo_t, hi_t, lo_f, hi_f = t_lo, t_hi, 0.0, 1.0
    best, arg = math.inf, (math.nan, math.nan, math.nan)
    for _ in range(levels):
        T, Fr = np.meshgrid(np.linspace(lo_t, hi_t, n), np.linspace(lo_f, hi_f, n), indexing="ij")
        hc = np.maximum(r / np.tan(T), h_min)
        H = hc + Fr * (h_max - hc)
        p = A[:, None, None] * T**2 * (D[:, None, None] + H**2) ** (alpha / 2)
        ok = np.all(p <= caps[:, None, None], axis=0) & (hc <= h_max)
        obj = np.where(ok, p.sum(axis=0), np.inf)
        i = np.unravel_index(np.argmin(obj), obj.shape)
        if not np.isfinite(obj[i]):
            break
        if obj[i] < best:
            best, arg = float(obj[i]), (float(T[i]), float(Fr[i]), float(H[i]))
        dt, df = 3 * (hi_t - lo_t) / n, 3 * (hi_f - lo_f) / n
        lo_t, hi_t = max(t_lo, arg[0] - dt), min(t_hi, arg[0] + dt)
        lo_f, hi_f = max(0.0, arg[1] - df), min(1.0, arg[1] + df)
    return best, arg[0], arg[2]


def case2_grid(A, D, caps, h_min, h_max, t_lo, t_hi, alpha=2.0, step=1e-5):
    """Fine 1-D scan of the case-2 objective with H = sqrt(D_max)/tan(theta)."""
    A, D, caps = (np.asarray(v, dtype=float) for v in (A, D, caps))
    r = math.sqrt(float(np.max(D)))
    lo = max(t_lo, math.atan(r / h_max))
    hi = min(t_hi, math.atan(r / h_min))
    T = np.arange(lo, hi, step)
    H = r / np.tan(T)
    p = A[:, None] * T**2 * (D[:, None] + H**2) ** (alpha / 2)
    obj = np.where(np.all(p <= caps[:, None], axis=0), p.sum(axis=0), np.inf)
    i = int(np.argmin(obj))
    return float(obj[i]), float(T[i])


# --- location ---------------------------------------------------------------


def location_grid(C, X, radii, H, alpha=2.0, n=400, levels=5, pad=50.0):
    """Zooming n x n grid search over the disk intersection."""
    C, X, radii = (np.asarray(v, dtype=float) for v in (C, X, radii))
    lo, hi = X.min(axis=0) - pad, X.max(axis=0) + pad
    best, arg = math.inf, None
    for _ in range(levels):
        gx, gy = np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n)
        Y = np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)
        d2 = ((Y[:, None, :] - X[None]) ** 2).sum(-1)
        ok = np.all(np.sqrt(d2) <= radii, axis=1)
        obj = (C * (d2 + H * H) ** (alpha / 2)).sum(axis=1)
        obj[~ok] = np.inf
        i = int(np.argmin(obj))
        if not np.isfinite(obj[i]):
            break
        if obj[i] < best:
            best, arg = float(obj[i]), Y[i].copy()
        span = 4 * (hi - lo) / n
        lo, hi = arg - span, arg + span
    return best, arg


# --- bandwidth --------------------------------------------------------------


def bandwidth_k2_exhaustive(F, R, P, B, step_frac=1e-5, levels=2):
    """Best split of B between two terminals by exhaustive search.

    The first pass scans w_1 on a ``step_frac * B`` grid. Each further pass
    rescans the +-1 cell neighbourhood of the incumbent with the same number
    of points, so a cap-bound optimum between grid points is not missed.
    """
    F, R, P = (np.asarray(v, dtype=float) for v in (F, R, P))
    n = int(round(1 / step_frac))
    lo, hi = 0.0, B
    best, arg = math.inf, None
    for _ in range(levels):
        w1 = np.linspace(lo, hi, n + 1)
        w1 = w1[(w1 > 0) & (w1 < B)]
        W = np.stack([w1, B - w1])
        with np.errstate(over="ignore"):
            cost = F[:, None] * W * np.expm1(LN2 * R[:, None] / W)
        ok = np.all(cost <= P[:, None], axis=0)
        obj = np.where(ok, cost.sum(axis=0), np.inf)
        i = int(np.argmin(obj))
        if not np.isfinite(obj[i]):
            break
        if obj[i] < best:
            best, arg = float(obj[i]), W[:, i].copy()
        cell = (hi - lo) / n
        lo, hi = max(0.0, arg[0] - cell), min(B, arg[0] + cell)
    return best, arg


def kkt_residual(F, R, w, lam):
    """F_k (2^(R/w) - ln2 (R/w) 2^(R/w) - 1) + lambda, per terminal."""
    F, R, w = (np.asarray(v, dtype=float) for v in (F, R, w))
    x = LN2 * R / w
    return F * (np.expm1(x) - x * np.exp(x)) + lam
