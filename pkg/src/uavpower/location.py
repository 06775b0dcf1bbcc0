"""Horizontal placement block.

For fixed altitude, beamwidth and bandwidths the UAV position minimises a
sum of convex functions of the distances to the terminals, over an
intersection of disks: one per terminal, whose radius is the smaller of the
coverage footprint ``H tan(theta)`` and the range allowed by its power cap.

The solver is a plain log-barrier method with damped Newton steps in
normalised coordinates. A phase-I search provides the strictly feasible
start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .model import Scenario

ARMIJO_C = 1e-4
SHRINK = 0.5
T_GROWTH = 200.0
CENTER_TOL = 1e-4
PHASE1_STARTS = 16
PHASE1_SEED = 0


@dataclass(frozen=True)
class LocationInput:
    C: np.ndarray
    anchors: np.ndarray  # (K, 2) terminal positions
    radii: np.ndarray
    height: float
    alpha: float = 2.0
    unreachable: tuple[int, ...] = field(default=())  # caps not met even at zero offset

    @property
    def K(self) -> int:
        return len(self.C)


@dataclass(frozen=True)
class LocationResult:
    y: np.ndarray
    objective: float
    status: str  # ok | infeasible

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def location_input(scn: Scenario, height: float, theta: float, w) -> LocationInput:
    C = scn.a * model.spectral_cost(w, scn.rates) * theta**2
    reach = height * math.tan(theta)
    with np.errstate(divide="ignore"):
        E = np.where(C > 0, (scn.caps / np.where(C > 0, C, 1.0)) ** (2 / scn.pathloss_exp), np.inf)
    slack = E - height**2
    unreachable = tuple(int(k) for k in np.flatnonzero(slack < -model.FEAS_RTOL * height**2))
    radii = np.minimum(np.sqrt(np.maximum(slack, 0.0)), reach)
    return LocationInput(C, np.asarray(scn.positions, dtype=float), radii, height, scn.pathloss_exp, unreachable)


def loc_objective_grad(inp: LocationInput, y) -> tuple[float, np.ndarray]:
    d = np.asarray(y, dtype=float) - inp.anchors
    q = np.einsum("ij,ij->i", d, d) + inp.height**2
    half = inp.alpha / 2
    val = float(np.sum(inp.C * q**half))
    grad = (inp.C * inp.alpha * q ** (half - 1)) @ d
    return val, grad


def loc_objective(inp: LocationInput, y) -> float:
    d = np.asarray(y, dtype=float) - inp.anchors
    q = np.einsum("ij,ij->i", d, d) + inp.height**2
    return float(np.sum(inp.C * q ** (inp.alpha / 2)))


def max_violation(inp: LocationInput, y) -> float:
    """max_k (|y - x_k| - r_k); <= 0 exactly on the feasible set."""
    d = np.asarray(y, dtype=float) - inp.anchors
    return float(np.max(np.sqrt(np.einsum("ij,ij->i", d, d)) - inp.radii))


# --- phase I ----------------------------------------------------------------


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _min_norm_hull(G: np.ndarray) -> np.ndarray:
    """Smallest-norm point of the convex hull of the rows of ``G`` (2-D)."""
    best = G[np.argmin(np.einsum("ij,ij->i", G, G))]
    m = len(G)
    for i in range(m):
        for j in range(i + 1, m):
            e = G[i] - G[j]
            ee = e @ e
            if ee <= 0:
                continue
            t = min(max(-(G[j] @ e) / ee, 0.0), 1.0)
            p = G[j] + t * e
            if p @ p < best @ best:
                best = p
    if m >= 3:
        # origin strictly inside some triangle -> stationary
        for i in range(m):
            for j in range(i + 1, m):
                for k in range(j + 1, m):
                    a, b, c = G[i], G[j], G[k]
                    s1 = _cross(b - a, -a)
                    s2 = _cross(c - b, -b)
                    s3 = _cross(a - c, -c)
                    if (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0):
                        return np.zeros(2)
    return best


def _descend_v(inp: LocationInput, y: np.ndarray, scale: float, goal: float, max_iter: int = 400) -> tuple[np.ndarray, float]:
    """Minimise v(y) = max_k(|y - x_k| - r_k) from ``y``.

    Steps along the negative min-norm element of the eps-subdifferential and
    backtracks on the step length.
    """
    v = max_violation(inp, y)
    step = 0.25 * scale
    for _ in range(max_iter):
        if v <= goal or step < 1e-13 * scale:
            break
        d = y - inp.anchors
        n = np.sqrt(np.einsum("ij,ij->i", d, d))
        vals = n - inp.radii
        active = np.flatnonzero(vals >= v - max(step, 1e-12 * scale))
        G = np.array([d[k] / n[k] if n[k] > 0 else np.zeros(2) for k in active[:6]])
        g = _min_norm_hull(G)
        gn = math.hypot(g[0], g[1])
        if gn <= 1e-12:
            step *= SHRINK
            continue
        direction = -g / gn
        while step >= 1e-13 * scale:
            y_new = y + step * direction
            v_new = max_violation(inp, y_new)
            if v_new < v:
                y, v = y_new, v_new
                step *= 1.5
                break
            step *= SHRINK
    return y, v


def feasible_point(inp: LocationInput, start=None) -> np.ndarray | None:
    """Point with ``max_k(|y - x_k| - r_k) <= 0``, or None when none is found.

    Tries ``start`` (when given), the anchors' centroid, then deterministic
    random starts in the anchors' bounding box. Prefers strictly interior
    points; a boundary point is returned only when no interior was found.
    """
    if inp.unreachable:
        return None
    lo = inp.anchors.min(axis=0)
    hi = inp.anchors.max(axis=0)
    scale = max(float(np.max(hi - lo)), float(np.max(inp.radii)), 1.0)
    goal = -1e-3 * max(float(np.min(inp.radii)), 1e-9 * scale)
    rng = np.random.default_rng(PHASE1_SEED)
    starts = [] if start is None else [np.asarray(start, dtype=float)]
    starts.append(inp.anchors.mean(axis=0))
    while len(starts) < PHASE1_STARTS:
        starts.append(lo + rng.random(2) * (hi - lo))

    best_y, best_v = None, math.inf
    for y0 in starts:
        y, v = _descend_v(inp, y0.copy(), scale, goal)
        if v < best_v or (v == best_v and tuple(y) < tuple(best_y)):
            best_y, best_v = y, v
        if best_v < 0:
            break
    if best_v <= 1e-9 * scale:
        return best_y
    return None


# --- barrier method ---------------------------------------------------------


class _Normalised:
    """Problem data shifted to the anchors' centroid and scaled to O(1).

    Offsets are kept as a (2, K) matrix: with a 2-D variable the cost is
    dominated by per-call overhead, so the code minimises numpy calls.
    """

    def __init__(self, inp: LocationInput, y_ref: np.ndarray):
        self.center = inp.anchors.mean(axis=0)
        self.L = max(float(np.max(inp.radii)), float(np.max(np.abs(inp.anchors - self.center))), 1.0)
        A = (inp.anchors - self.center) / self.L
        self.A = A  # (K, 2), used by phase-I helpers
        self.AT = np.ascontiguousarray(A.T)
        self.rho2 = (inp.radii / self.L) ** 2
        self.h2 = (inp.height / self.L) ** 2
        self.alpha = inp.alpha
        D = self.to_z(y_ref)[:, None] - self.AT
        fs = float(np.sum(inp.C * (np.einsum("ij,ij->j", D, D) + self.h2) ** (self.alpha / 2)))
        self.fs = fs if fs > 0 else 1.0
        self.c = inp.C / self.fs
        self.csum = float(self.c.sum())
        self.cA = self.AT @ self.c

    def to_z(self, y):
        return (np.asarray(y, dtype=float) - self.center) / self.L

    def to_y(self, z):
        return self.center + self.L * z

    def offsets(self, z):
        D = z[:, None] - self.AT
        return D, np.einsum("ij,ij->j", D, D)

    def f(self, z) -> float:
        _, r2 = self.offsets(z)
        if self.alpha == 2:
            return float(self.c @ r2) + self.csum * self.h2
        return float(self.c @ (r2 + self.h2) ** (self.alpha / 2))

    def f_derivs(self, z, offs=None):
        """Objective, gradient and 2x2 Hessian (as ``hxx, hxy, hyy``)."""
        D, r2 = self.offsets(z) if offs is None else offs
        if self.alpha == 2:
            fv = float(self.c @ r2) + self.csum * self.h2
            diag = 2.0 * self.csum
            return fv, diag * z - 2.0 * self.cA, (diag, 0.0, diag)
        q = r2 + self.h2
        qh = q ** (self.alpha / 2 - 1)
        fv = float(self.c @ (qh * q))
        cq = self.alpha * self.c * qh
        grad = D @ cq
        diag = float(cq.sum())
        Hc = (D * (cq * (self.alpha - 2) / q)) @ D.T
        return fv, grad, (diag + Hc[0, 0], Hc[0, 1], diag + Hc[1, 1])

    def slack(self, z) -> np.ndarray:
        return self.rho2 - self.offsets(z)[1]


def _solve2(h, g) -> np.ndarray:
    hxx, hxy, hyy = h
    det = hxx * hyy - hxy * hxy
    return np.array([hyy * g[0] - hxy * g[1], hxx * g[1] - hxy * g[0]]) / det


def _phi(nz: _Normalised, t: float, z) -> float:
    s = nz.slack(z)
    if s.min() <= 0:
        return math.inf
    return t * nz.f(z) - float(np.log(s).sum())


def _max_step(D: np.ndarray, s: np.ndarray, p: np.ndarray) -> float:
    """Largest tau keeping every rho_k^2 - |d_k + tau p|^2 positive."""
    pp = float(p @ p)
    if pp == 0:
        return math.inf
    dp = p @ D
    return float(np.min((np.sqrt(dp * dp + pp * s) - dp) / pp))


def _barrier_system(nz: _Normalised, t: float, z: np.ndarray):
    """Objective pieces plus gradient and Hessian of t f - sum log(slack)."""
    D, r2 = offs = nz.offsets(z)
    fv, gf, (hxx, hxy, hyy) = nz.f_derivs(z, offs)
    s = nz.rho2 - r2
    inv = 1.0 / s
    g = t * gf + 2.0 * (D @ inv)
    Hb = (D * (4.0 * inv * inv)) @ D.T
    diag = 2.0 * float(inv.sum())
    H = (t * hxx + diag + Hb[0, 0], t * hxy + Hb[0, 1], t * hyy + diag + Hb[1, 1])
    return fv, gf, g, H, D, s


def _center(nz: _Normalised, t: float, z: np.ndarray, max_iter: int = 100, dec_tol: float = 1e-10):
    """Damped Newton on t f - sum log(slack); returns the point and its system."""
    for _ in range(max_iter):
        system = _barrier_system(nz, t, z)
        fv, _, g, Hm, D, s = system
        step = -_solve2(Hm, g)
        if not np.all(np.isfinite(step)):
            step = -g
        dec2 = float(-(g @ step))
        if dec2 / 2 <= dec_tol:
            return z, system
        tau = min(1.0, 0.99 * _max_step(D, s, step))
        if dec2 < 0.1:
            # quadratic-convergence region of a self-concordant barrier
            z_new = z + tau * step
            if nz.slack(z_new).min() <= 0:
                break
            z = z_new
            continue
        phi0 = t * fv - float(np.log(s).sum())
        while tau > 1e-14:
            z_new = z + tau * step
            if _phi(nz, t, z_new) <= phi0 - ARMIJO_C * tau * dec2:
                break
            tau *= SHRINK
        else:
            break
        z = z_new
    return z, None


def _predict(nz: _Normalised, t: float, t_next: float, z: np.ndarray, system=None) -> np.ndarray:
    """First-order move along the central path from t to t_next.

    On the path ``t grad f + grad b = 0``; differentiating in t gives
    ``dz/dt = -H^-1 grad f``. Near the optimum the path behaves like
    ``z* + c / t``, so the tangent is extrapolated in ``1/t`` rather than
    in ``t``. The move is cut back to stay strictly inside, and dropped if
    rounding still puts it on the boundary.
    """
    _, gf, _, Hm, D, s = system if system is not None else _barrier_system(nz, t, z)
    dz = -t * (1.0 - t / t_next) * _solve2(Hm, gf)
    if not np.all(np.isfinite(dz)):
        return z
    tau = min(1.0, 0.99 * _max_step(D, s, dz))
    z_new = z + tau * dz
    return z_new if nz.slack(z_new).min() > 0 else z


def _initial_t(nz: _Normalised, z: np.ndarray) -> float:
    """t that best balances objective and barrier gradients at ``z``."""
    D, r2 = nz.offsets(z)
    _, gf, _ = nz.f_derivs(z, (D, r2))
    gb = 2.0 * (D @ (1.0 / (nz.rho2 - r2)))
    gg = float(gf @ gf)
    if gg == 0:
        return 1.0
    return min(max(-float(gf @ gb) / gg, 1.0), 1e6)


def _unconstrained_min(inp: LocationInput) -> np.ndarray:
    wsum = float(np.sum(inp.C))
    y = (inp.C @ inp.anchors) / wsum
    if inp.alpha == 2:
        return y
    nz = _Normalised(inp, y)
    z = nz.to_z(y)
    for _ in range(50):
        _, g, Hm = nz.f_derivs(z)
        step = -_solve2(Hm, g)
        z = z + step
        if float(step @ step) < 1e-30:
            break
    return nz.to_y(z)


def solve_location(inp: LocationInput, y0=None, gap_rtol: float = 1e-9) -> LocationResult:
    """Minimise the placement objective over the disk intersection.

    ``y0`` is the caller's current position. When it is feasible the
    returned objective never exceeds its objective.
    """
    if inp.unreachable:
        return LocationResult(np.full(2, math.nan), math.inf, "infeasible")
    y_in = None
    if y0 is not None:
        y0 = np.asarray(y0, dtype=float)
        if max_violation(inp, y0) <= 1e-9 * max(float(np.max(inp.radii)), 1.0):
            y_in = y0

    if not np.any(inp.C > 0):
        y = y_in if y_in is not None else feasible_point(inp)
        if y is None:
            return LocationResult(np.full(2, math.nan), math.inf, "infeasible")
        return LocationResult(np.array(y), 0.0, "ok")

    y_free = _unconstrained_min(inp)
    if max_violation(inp, y_free) < 0:
        return LocationResult(y_free, loc_objective(inp, y_free), "ok")

    y_start = feasible_point(inp, start=y_in)
    if y_start is None:
        return LocationResult(np.full(2, math.nan), math.inf, "infeasible")

    nz = _Normalised(inp, y_start)
    z = nz.to_z(y_start)
    # interior is judged in the scaled coordinates the barrier works in
    if nz.slack(z).min() > 0:
        m = inp.K
        t = _initial_t(nz, z)
        for _ in range(60):
            # intermediate centres only need to be close to the central path
            last = m / t < 2.0 * gap_rtol * nz.f(z)
            z, system = _center(nz, t, z, dec_tol=1e-10 if last else CENTER_TOL)
            if m / t < gap_rtol * nz.f(z):
                if not last:
                    z, _ = _center(nz, t, z)
                break
            z = _predict(nz, t, t * T_GROWTH, z, system)
            t *= T_GROWTH
        y = nz.to_y(z)
        if max_violation(inp, y) > 0:
            y = y_start
    else:
        # empty interior: the feasible set is (numerically) a single point
        y = y_start

    obj = loc_objective(inp, y)
    if y_in is not None:
        obj_in = loc_objective(inp, y_in)
        if obj_in < obj:
            y, obj = y_in, obj_in
    return LocationResult(np.asarray(y, dtype=float), obj, "ok")
