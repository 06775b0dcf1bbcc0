"""Physical model of the single-UAV uplink.

Everything is in linear SI units (W, Hz, m, rad). dBm only appears through
:func:`dbm_to_watt` / :func:`watt_to_dbm` at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

G0_DEFAULT = 2.2846
THETA_FLOOR = 1e-3

# Relative slack used by the subproblem solvers when testing a cap or bound
# that the incoming point satisfies with equality.
FEAS_RTOL = 1e-10


def dbm_to_watt(x):
    out = 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return float(out) if np.ndim(x) == 0 else out


def watt_to_dbm(p):
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(p, dtype=float)) + 30.0
    return float(out) if np.ndim(p) == 0 else out


@dataclass(frozen=True)
class GroundTerminal:
    position: tuple[float, float]
    min_rate: float
    max_power: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 2 or not all(math.isfinite(v) for v in pos):
            raise ValueError(f"position must be a finite 2-vector, got {self.position!r}")
        object.__setattr__(self, "position", pos)
        # R_k = 0 is allowed: such a terminal contributes nothing.
        if not self.min_rate >= 0:
            raise ValueError(f"min_rate must be >= 0, got {self.min_rate}")
        if not self.max_power > 0:
            raise ValueError(f"max_power must be > 0, got {self.max_power}")


@dataclass(frozen=True)
class Scenario:
    gts: tuple[GroundTerminal, ...]
    total_bandwidth: float = 10e6
    noise_density: float = dbm_to_watt(-169.0)
    ref_gain: float = 1.42e-4
    antenna_const: float = G0_DEFAULT
    pathloss_exp: float = 2.0
    h_min: float = 50.0
    h_max: float = 500.0
    theta_min: float = 0.0
    theta_max: float = math.pi / 2 - THETA_FLOOR
    theta_floor: float = THETA_FLOOR

    positions: np.ndarray = field(init=False, repr=False, compare=False)
    rates: np.ndarray = field(init=False, repr=False, compare=False)
    caps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gts = tuple(self.gts)
        if not gts:
            raise ValueError("scenario needs at least one ground terminal")
        object.__setattr__(self, "gts", gts)
        if not self.pathloss_exp >= 2:
            raise ValueError(f"pathloss_exp must be >= 2, got {self.pathloss_exp}")
        if not 0 < self.h_min <= self.h_max:
            raise ValueError(f"need 0 < h_min <= h_max, got [{self.h_min}, {self.h_max}]")
        if not 0 <= self.theta_min < self.theta_max < math.pi / 2:
            raise ValueError(
                f"need 0 <= theta_min < theta_max < pi/2, got [{self.theta_min}, {self.theta_max}]"
            )
        if not 0 < self.theta_floor < self.theta_max:
            raise ValueError(f"theta_floor must lie in (0, theta_max), got {self.theta_floor}")
        for name in ("total_bandwidth", "noise_density", "ref_gain", "antenna_const"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

        pos = np.array([g.position for g in gts], dtype=float)
        rates = np.array([g.min_rate for g in gts], dtype=float)
        caps = np.array([g.max_power for g in gts], dtype=float)
        for arr in (pos, rates, caps):
            arr.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "caps", caps)

    @property
    def K(self) -> int:
        return len(self.gts)

    @property
    def a(self) -> float:
        """Noise-to-gain constant sigma^2 / (g0 * G0)."""
        return self.noise_density / (self.ref_gain * self.antenna_const)

    @property
    def theta_lo(self) -> float:
        """Working lower bound on the half-beamwidth (floor-clamped)."""
        return max(self.theta_min, self.theta_floor)

    @property
    def theta_hi(self) -> float:
        return self.theta_max


@dataclass(frozen=True)
class Placement:
    y: tuple[float, float]
    height: float
    half_beamwidth: float

    def __post_init__(self):
        object.__setattr__(self, "y", (float(self.y[0]), float(self.y[1])))
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "half_beamwidth", float(self.half_beamwidth))


@dataclass(frozen=True)
class Allocation:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    objective: float
    block: str


@dataclass
class Solution:
    placement: Placement
    allocation: Allocation
    powers: np.ndarray
    sum_power: float
    trace: list[IterationRecord]
    status: str  # converged | infeasible | iteration-limit
    iterations: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "converged"


def antenna_gain(theta_hb: float, az: float, el: float, G0: float = G0_DEFAULT) -> float:
    if not 0 < theta_hb < math.pi / 2:
        raise ValueError(f"half-beamwidth must lie in (0, pi/2), got {theta_hb}")
    if 0 <= az <= theta_hb and 0 <= el <= theta_hb:
        return G0 / theta_hb**2
    return 0.0


def sq_dists(scn: Scenario, y) -> np.ndarray:
    d = scn.positions - np.asarray(y, dtype=float)
    return np.einsum("ij,ij->i", d, d)


def channel_gain(scn: Scenario, y, height: float, k: int) -> float:
    if not height > 0:
        raise ValueError(f"height must be > 0, got {height}")
    d2 = float(sq_dists(scn, y)[k])
    return scn.ref_gain / (d2 + height**2) ** (scn.pathloss_exp / 2)


def spectral_cost(w, rates) -> np.ndarray:
    """w * (2**(R/w) - 1) elementwise; inf where w == 0 < R, 0 where R == 0."""
    w = np.asarray(w, dtype=float)
    rates = np.asarray(rates, dtype=float)
    out = np.zeros(np.broadcast(w, rates).shape)
    w_b, r_b = np.broadcast_arrays(w, rates)
    pos = r_b > 0
    starved = pos & (w_b <= 0)
    live = pos & ~starved
    with np.errstate(over="ignore"):
        out[live] = w_b[live] * np.expm1(math.log(2) * r_b[live] / w_b[live])
    out[starved] = math.inf
    return out


def power_vector(scn: Scenario, pl: Placement, w) -> np.ndarray:
    """Per-terminal transmit power needed to hit each R_k exactly."""
    geo = (sq_dists(scn, pl.y) + pl.height**2) ** (scn.pathloss_exp / 2)
    with np.errstate(invalid="ignore"):
        p = scn.a * spectral_cost(w, scn.rates) * pl.half_beamwidth**2 * geo
    # inf * 0 cannot happen: geo > 0 whenever height > 0.
    return p


def required_power(scn: Scenario, pl: Placement, w_k: float, k: int) -> float:
    """Power for terminal ``k`` at bandwidth ``w_k``.

    Returns ``math.inf`` (the infinite-demand sentinel) when ``w_k == 0`` but
    the terminal has a positive rate demand.
    """
    w = np.zeros(scn.K)
    w[k] = w_k
    return float(power_vector(scn, pl, w)[k])


def sum_power(scn: Scenario, pl: Placement, al: Allocation | Sequence[float]) -> float:
    w = al.w if isinstance(al, Allocation) else al
    return float(np.sum(power_vector(scn, pl, w)))


def achieved_rate(scn: Scenario, pl: Placement, w_k: float, p_k: float, k: int) -> float:
    """Uplink rate of terminal ``k`` when it transmits ``p_k`` watts over ``w_k`` Hz."""
    d2 = float(sq_dists(scn, pl.y)[k])
    geo = (d2 + pl.height**2) ** (scn.pathloss_exp / 2)
    snr = p_k * scn.ref_gain * scn.antenna_const / (w_k * scn.noise_density * pl.half_beamwidth**2 * geo)
    return w_k * math.log1p(snr) / math.log(2)


@dataclass
class ConstraintCheck:
    ok: bool
    worst: float  # largest violation (positive) or largest slack use (<= 0)
    unit: str


@dataclass
class FeasibilityReport:
    power: ConstraintCheck
    coverage: ConstraintCheck
    budget: ConstraintCheck
    height_box: ConstraintCheck
    theta_box: ConstraintCheck
    nonneg: ConstraintCheck

    @property
    def checks(self) -> dict[str, ConstraintCheck]:
        return {
            "power": self.power,
            "coverage": self.coverage,
            "budget": self.budget,
            "height_box": self.height_box,
            "theta_box": self.theta_box,
            "nonneg": self.nonneg,
        }

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.ok]


def check_feasible(scn: Scenario, pl: Placement, al: Allocation | Sequence[float], rtol: float = 1e-9) -> FeasibilityReport:
    """Evaluate every constraint family of the joint problem at a point.

    ``worst`` is signed: positive numbers are violations, zero or negative
    values are (minus) the slack of the tightest member.
    """
    w = np.asarray(al.w if isinstance(al, Allocation) else al, dtype=float)
    H, th = pl.height, pl.half_beamwidth

    p = power_vector(scn, pl, w)
    pw = float(np.max(p - scn.caps))
    power = ConstraintCheck(bool(np.all(p <= scn.caps * (1 + rtol))), pw, "W")

    reach = H * math.tan(th)
    dist = np.sqrt(sq_dists(scn, pl.y))
    cv = float(np.max(dist - reach))
    coverage = ConstraintCheck(cv <= rtol * max(reach, 1.0), cv, "m")

    bv = float(np.sum(w) - scn.total_bandwidth)
    budget = ConstraintCheck(bv <= rtol * scn.total_bandwidth, bv, "Hz")

    hv = max(scn.h_min - H, H - scn.h_max)
    height_box = ConstraintCheck(hv <= rtol * scn.h_max, hv, "m")

    tv = max(scn.theta_lo - th, th - scn.theta_hi)
    theta_box = ConstraintCheck(tv <= rtol, tv, "rad")

    nv = float(np.max(-w))
    nonneg = ConstraintCheck(nv <= 0.0, nv, "Hz")
    return FeasibilityReport(power, coverage, budget, height_box, theta_box, nonneg)
