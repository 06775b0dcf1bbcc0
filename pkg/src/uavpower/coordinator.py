"""Block coordinate descent over (altitude, beamwidth), location, bandwidth."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import altbeam, bandwidth, location, model
from .model import Allocation, IterationRecord, Placement, Scenario, Solution

log = logging.getLogger(__name__)

BLOCKS = ("altbeam", "location", "bandwidth")


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-6
    max_iters: int = 100
    grid_step: float | None = None  # None -> (theta_hi - theta_lo) / 2000
    bisect_tol: float = altbeam.BISECT_TOL
    starts: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")


def initialize(scn: Scenario, rng: np.random.Generator | None = None) -> tuple[Placement, Allocation]:
    """Starting point: centroid location, equal bandwidth split, covering beam.

    With ``rng`` the location is drawn uniformly from the terminals'
    bounding box, and the bandwidth split uniformly from the allocations
    that meet every power cap at that location: the cap-implied floors plus
    a flat-Dirichlet share of the remaining budget. When the floors already
    exceed the budget the equal split is used.
    """
    X = scn.positions
    B = scn.total_bandwidth
    if rng is None:
        y = X.mean(axis=0)
    else:
        lo, hi = X.min(axis=0), X.max(axis=0)
        y = lo + rng.random(2) * (hi - lo)
    d_max = float(np.max(model.sq_dists(scn, y)))
    h_mid = 0.5 * (scn.h_min + scn.h_max)
    theta = min(max(math.atan(math.sqrt(d_max) / h_mid), scn.theta_lo), scn.theta_hi)
    H = altbeam.optimal_height(d_max, theta, scn.h_min)
    w = np.full(scn.K, B / scn.K)
    if rng is not None:
        share = rng.dirichlet(np.ones(scn.K))
        floors, ok = bandwidth.floor_W(bandwidth.bandwidth_input(scn, y, H, theta))
        if ok:
            w = floors + (B - floors.sum()) * share
    return Placement(tuple(y), H, theta), Allocation(w)


def _finish(scn, pl, w, trace, status, iters, msg="") -> Solution:
    powers = model.power_vector(scn, pl, w)
    return Solution(pl, Allocation(w), powers, float(np.sum(powers)), trace, status, iters, msg)


def run_blocks(
    scn: Scenario,
    cfg: SolverConfig = SolverConfig(),
    blocks: Sequence[str] = BLOCKS,
    start: tuple[Placement, Allocation] | None = None,
) -> Solution:
    """Cycle through ``blocks`` until the sum power stops improving.

    ``blocks`` is any ordered subset of ``BLOCKS``; variables of omitted
    blocks stay at their starting values. A block result is only adopted
    when it does not raise the objective of a feasible incumbent.
    """
    unknown = set(blocks) - set(BLOCKS)
    if unknown:
        raise ValueError(f"unknown blocks {sorted(unknown)}")
    pl, al = start if start is not None else initialize(scn)
    y = np.array(pl.y, dtype=float)
    H, theta = pl.height, pl.half_beamwidth
    w = np.array(al.w, dtype=float)

    def current():
        return Placement(tuple(y), H, theta)

    def feasible():
        return model.check_feasible(scn, current(), w).ok

    obj = model.sum_power(scn, current(), w)
    # Successful block results are feasible by construction, so the full
    # check is only repeated while the incumbent is known to be infeasible.
    incumbent_ok = feasible()
    prev = obj if incumbent_ok else math.inf
    trace: list[IterationRecord] = []
    for it in range(1, cfg.max_iters + 1):
        for blk in blocks:
            if blk == "altbeam":
                res = altbeam.solve_altbeam(altbeam.altbeam_input(scn, y, w), cfg.grid_step, cfg.bisect_tol)
                if not res.ok:
                    return _finish(scn, current(), w, trace, "infeasible", it, "altbeam subproblem infeasible")
                cand = model.sum_power(scn, Placement(tuple(y), res.height, res.half_beamwidth), w)
                accept = not incumbent_ok or cand <= obj
                if accept:
                    H, theta = res.height, res.half_beamwidth
            elif blk == "location":
                res = location.solve_location(location.location_input(scn, H, theta, w), y0=y)
                if not res.ok:
                    return _finish(scn, current(), w, trace, "infeasible", it, "location subproblem infeasible")
                cand = model.sum_power(scn, Placement(tuple(res.y), H, theta), w)
                accept = not incumbent_ok or cand <= obj
                if accept:
                    y = np.array(res.y, dtype=float)
            else:
                res = bandwidth.solve_bandwidth(bandwidth.bandwidth_input(scn, y, H, theta))
                if not res.ok:
                    return _finish(scn, current(), w, trace, "infeasible", it, "bandwidth subproblem infeasible")
                cand = model.sum_power(scn, current(), res.w)
                accept = not incumbent_ok or cand <= obj
                if accept:
                    w = np.array(res.w, dtype=float)
            if accept:
                obj = cand
                if not incumbent_ok:
                    incumbent_ok = feasible()
            trace.append(IterationRecord(it, obj, blk))

        if not feasible():
            return _finish(scn, current(), w, trace, "infeasible", it, "iterate left the feasible set")
        if math.isfinite(prev) and prev - obj <= cfg.rel_tol * prev:
            log.debug("converged after %d iterations, objective %.6e W", it, obj)
            return _finish(scn, current(), w, trace, "converged", it)
        prev = obj
    return _finish(scn, current(), w, trace, "iteration-limit", cfg.max_iters)


def solve(scn: Scenario, cfg: SolverConfig = SolverConfig(), start: tuple[Placement, Allocation] | None = None) -> Solution:
    return run_blocks(scn, cfg, BLOCKS, start)


def _rank(sol: Solution) -> tuple[int, float]:
    return (0 if sol.status == "converged" else 1 if sol.status == "iteration-limit" else 2, sol.sum_power)


def solve_multistart(scn: Scenario, cfg: SolverConfig = SolverConfig(), first: Solution | None = None) -> Solution:
    """Best of ``cfg.starts`` runs; start 0 is the deterministic default.

    Each randomised start draws from its own child of ``SeedSequence(cfg.seed)``
    so results do not depend on evaluation order. ``first`` may carry an
    already computed ``solve(scn, cfg)`` result to avoid repeating start 0.
    """
    best = first if first is not None else solve(scn, cfg)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.starts - 1) if cfg.starts > 1 else []
    for child in children:
        sol = solve(scn, cfg, start=initialize(scn, np.random.default_rng(child)))
        if _rank(sol) < _rank(best):
            best = sol
    return best
