import math

import numpy as np
import pytest

import oracles
from instances import rate_sweep_scenario, scenario
from uavpower import altbeam, bandwidth, coordinator, location, model
from uavpower.coordinator import SolverConfig
from uavpower.model import GroundTerminal, Scenario


def test_config_validation():
    for kw in (dict(rel_tol=0.0), dict(max_iters=0), dict(starts=0)):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_initialize_single_terminal():
    scn = Scenario((GroundTerminal((5.0, -3.0), 1e6, 0.1),))
    pl, al = coordinator.initialize(scn)
    assert pl.y == (5.0, -3.0)
    assert model.check_feasible(scn, pl, al).coverage.ok
    assert al.w[0] == scn.total_bandwidth


def test_initialize_circle_is_centred():
    r = 120.0
    phis = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    scn = Scenario(tuple(GroundTerminal((r * math.cos(p), r * math.sin(p)), 1e6, 0.1) for p in phis))
    pl, al = coordinator.initialize(scn)
    np.testing.assert_allclose(pl.y, [0.0, 0.0], atol=1e-12)
    assert float(np.max(model.sq_dists(scn, pl.y))) == pytest.approx(r * r)
    np.testing.assert_allclose(al.w, scn.total_bandwidth / 8)


def test_initial_point_covers_every_terminal():
    rng = np.random.default_rng(0)
    for i in range(30):
        scn = scenario(rng, int(rng.integers(1, 25)))
        for r in (None, np.random.default_rng(i)):
            pl, al = coordinator.initialize(scn, r)
            rep = model.check_feasible(scn, pl, al)
            assert rep.coverage.ok and rep.height_box.ok and rep.theta_box.ok and rep.budget.ok


def test_single_terminal_matches_grid_over_height_and_beam():
    scn = Scenario((GroundTerminal((0.0, 0.0), 2e6, 0.1),), pathloss_exp=2.0)
    sol = coordinator.solve(scn)
    assert sol.ok
    np.testing.assert_allclose(sol.placement.y, [0.0, 0.0], atol=1e-9)
    A = scn.a * model.spectral_cost([scn.total_bandwidth], scn.rates)
    ref, _, _ = oracles.altbeam_brute(A, [0.0], scn.caps, scn.h_min, scn.h_max, scn.theta_lo, scn.theta_hi)
    assert sol.sum_power == pytest.approx(ref, rel=1e-9)


def test_converged_point_is_a_fixed_point():
    scn = rate_sweep_scenario(3, 2e6)
    sol = coordinator.solve(scn)
    assert sol.ok
    again = coordinator.solve(scn, start=(sol.placement, sol.allocation))
    assert again.iterations == 1
    assert again.sum_power == pytest.approx(sol.sum_power, rel=1e-6)
    assert again.sum_power <= sol.sum_power


def test_each_block_at_convergence_changes_little():
    scn = rate_sweep_scenario(4, 3e6)
    cfg = SolverConfig()
    sol = coordinator.solve(scn, cfg)
    pl, w = sol.placement, sol.allocation.w
    ab = altbeam.solve_altbeam(altbeam.altbeam_input(scn, pl.y, w))
    loc = location.solve_location(location.location_input(scn, pl.height, pl.half_beamwidth, w), y0=pl.y)
    bw = bandwidth.solve_bandwidth(bandwidth.bandwidth_input(scn, pl.y, pl.height, pl.half_beamwidth))
    for obj in (ab.objective, loc.objective, bandwidth.objective(bandwidth.bandwidth_input(scn, pl.y, pl.height, pl.half_beamwidth), bw.w)):
        assert obj >= sol.sum_power * (1 - cfg.rel_tol)


@pytest.mark.parametrize("alpha", [2.0, 3.0])
def test_random_scenarios_descend_and_stay_feasible(alpha):
    rng = np.random.default_rng(int(alpha))
    for _ in range(6):
        scn = scenario(rng, 5, alpha=alpha)
        sol = coordinator.solve(scn)
        objs = np.array([r.objective for r in sol.trace])
        assert np.all(objs[1:] <= objs[:-1] * (1 + 1e-9))
        assert [r.block for r in sol.trace[:3]] == ["altbeam", "location", "bandwidth"]
        assert sol.ok and model.check_feasible(scn, sol.placement, sol.allocation).ok
        assert sol.sum_power == pytest.approx(float(np.sum(sol.powers)), rel=1e-12)


def test_infeasible_scenario_reports_status():
    gts = tuple(GroundTerminal((x, 0.0), 5e7, 1e-9) for x in (-200.0, 200.0))
    sol = coordinator.solve(Scenario(gts))
    assert sol.status == "infeasible" and not sol.ok and sol.message


def test_iteration_limit_status():
    scn = rate_sweep_scenario(5, 2e6)
    sol = coordinator.solve(scn, SolverConfig(max_iters=1, rel_tol=1e-15))
    assert sol.status == "iteration-limit" and sol.iterations == 1


def test_unknown_block_rejected():
    with pytest.raises(ValueError):
        coordinator.run_blocks(rate_sweep_scenario(0, 1e6), blocks=("altbeam", "teleport"))


def test_multistart_single_start_equals_solve():
    scn = rate_sweep_scenario(6, 2e6)
    a = coordinator.solve(scn)
    b = coordinator.solve_multistart(scn, SolverConfig(starts=1))
    assert a.sum_power == b.sum_power and a.placement == b.placement


def test_multistart_improves_and_is_deterministic():
    scn = rate_sweep_scenario(7, 3e6)
    cfg = SolverConfig(starts=8, seed=42)
    single = coordinator.solve(scn)
    a = coordinator.solve_multistart(scn, cfg)
    b = coordinator.solve_multistart(scn, cfg)
    assert a.sum_power <= single.sum_power
    assert a.sum_power == b.sum_power and a.placement == b.placement
    np.testing.assert_array_equal(a.allocation.w, b.allocation.w)
