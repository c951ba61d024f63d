"""End-to-end acceptance checks, one test per criterion."""

import time
from dataclasses import replace

import numpy as np
import pytest

from uavswarm.association import cluster_benchmark
from uavswarm.channel import ChannelParams, LinkGains, estimate_all_receivers, link_gains, mean_fields, nearest_neighbours
from uavswarm.config import default_config
from uavswarm.core import build_scenario
from uavswarm.orchestrator import POLICIES, CollabConfig, compare_policies, run_episode, slot_game
from uavswarm.powerctl import CostParams, MfgChannel, MfgGrid, hamiltonian, optimal_power, solve_mfg
from uavswarm.scenarios import (balance_point, crossing_targets, desk_scale, jitter_corridor, single_target,
                                uniform_instances)
from uavswarm.trajectory import fly_single, path_length, rrt_plan

SEEDS = list(range(20))
VIOLATIONS: dict[str, int] = {}


def _record(acceptance, n, ok, detail):
    acceptance[n] = (bool(ok), detail)


@pytest.fixture(scope="module")
def desk_report():
    t0 = time.perf_counter()
    configs = [CollabConfig(policy=p) for p in POLICIES]
    report = compare_policies(desk_scale(), configs, SEEDS)
    return report, time.perf_counter() - t0


def test_criterion_1_clustering_ordering(acceptance):
    t0 = time.perf_counter()
    rows, raw = cluster_benchmark(uniform_instances(1000, 100, seed=0), 5, seed=0)
    elapsed = time.perf_counter() - t0
    r = {row.method: row for row in rows}
    sse_order = r["ceta"].sse_mean < r["kmeans"].sse_mean < r["fcm"].sse_mean
    sc_order = r["ceta"].sc_mean > r["kmeans"].sc_mean > r["fcm"].sc_mean
    one_pass = bool(np.all(raw["ceta"][:, 2] == 1))
    ok = sse_order and sc_order and one_pass and elapsed <= 120
    _record(acceptance, 1, ok,
            f"SSE ceta/kmeans/fcm = {r['ceta'].sse_mean:.0f}/{r['kmeans'].sse_mean:.0f}/{r['fcm'].sse_mean:.0f} "
            f"SC = {r['ceta'].sc_mean:.4f}/{r['kmeans'].sc_mean:.4f}/{r['fcm'].sc_mean:.4f} "
            f"one-pass={one_pass} {elapsed:.1f}s")
    assert one_pass
    assert elapsed <= 120
    assert sse_order, "mean SSE ordering CETA < k-means < FCM"
    assert sc_order, "mean SC ordering CETA > k-means > FCM"


def _synthetic_network(rng, n, m, g_u, g_j, spread):
    uu = g_u * (1 + rng.uniform(-spread, spread, (n, n)))
    np.fill_diagonal(uu, np.inf)
    ju = g_j * (1 + rng.uniform(-spread, spread, (m, n)))
    return LinkGains(uu=uu, ju=ju)


def test_criterion_2_mean_gain_estimation(acceptance):
    rng = np.random.default_rng(2)
    params = ChannelParams()
    n, m = 30, 3
    rx = np.array([(i + 1) % n for i in range(n)])
    # homogeneous network: exact recovery
    g = _synthetic_network(rng, n, m, 2e-4, 5e-5, 0.0)
    for i in range(n):
        g.uu[i, rx[i]] = 1e-2  # distinct direct links
    gu, gj = estimate_all_receivers(g, rx, params)
    homo_err = max(np.max(np.abs(gu / 2e-4 - 1)), np.max(np.abs(gj / 5e-5 - 1)))
    # heterogeneous gains and powers, +-20 %
    errs_u, errs_j = [], []
    for _ in range(100):
        g = _synthetic_network(rng, n, m, 2e-4, 5e-5, 0.2)
        p = 0.075 * (1 + rng.uniform(-0.2, 0.2, n))
        pj = np.full(m, params.p_max_jam)
        gu, gj = estimate_all_receivers(g, rx, params)
        eu, ej = [], []
        for i in range(n):
            others = [k for k in range(n) if k not in (i, rx[i])]
            true_u = float(np.sum(p[others] * g.uu[others, rx[i]]))
            true_j = float(np.sum(pj * g.ju[:, rx[i]]))
            est_u, est_j = mean_fields(gu[i], gj[i], float(p[others].mean()), params.p_max_jam, n, m)
            eu.append(abs(est_u / true_u - 1))
            ej.append(abs(est_j / true_j - 1))
        errs_u.append(np.mean(eu))
        errs_j.append(np.mean(ej))
    mu, mj = float(np.mean(errs_u)), float(np.mean(errs_j))
    ok = homo_err <= 1e-9 and mu <= 0.05 and mj <= 0.05
    _record(acceptance, 2, ok, f"homogeneous rel.err {homo_err:.1e}; heterogeneous mean rel.err "
                               f"I_U {mu:.2%}, I_J {mj:.2%}")
    assert homo_err <= 1e-9
    assert mu <= 0.05 and mj <= 0.05


def test_criterion_3_closed_form_policy(acceptance):
    rng = np.random.default_rng(3)
    grid = np.linspace(0.0, 0.1, 100_000)
    cell = grid[1] - grid[0]
    worst = 0.0
    for _ in range(1000):
        c = CostParams(omega1=10 ** rng.uniform(2, 6), omega2=10 ** rng.uniform(4, 8),
                       gamma_th=10 ** rng.uniform(-0.5, 1), sigma2=10 ** rng.uniform(-10, -7),
                       g_direct=10 ** rng.uniform(-4, -1), i_bar_u=10 ** rng.uniform(-8, -4),
                       i_bar_j=10 ** rng.uniform(-8, -4))
        du = rng.normal(0.0, 2 * c.omega1 * c.g_direct**2 * 0.05)
        brute = grid[np.argmin(hamiltonian(grid, du, c))]
        worst = max(worst, abs(float(optimal_power(du, c)) - brute) / cell)
    ok = worst <= 1.0
    _record(acceptance, 3, ok, f"worst gap {worst:.3f} grid cells over 1000 draws")
    assert ok


def test_criterion_4_pde_numerics(acceptance):
    rng = np.random.default_rng(4)
    worst_mass = worst_repair = 0.0
    finite = nonneg = True
    n_solves = 0
    for k in range(30):
        grid = MfgGrid(nu=rng.uniform(0.0, 0.05), legacy_diffusion=bool(k % 2))
        m0 = rng.dirichlet(np.ones(grid.n_energy)) / grid.de
        chan = MfgChannel(30, 3, 10 ** rng.uniform(-6, -3), 10 ** rng.uniform(-7, -4), 0.4)
        cost = CostParams(g_direct=10 ** rng.uniform(-3, -0.5))
        sol = solve_mfg(m0, grid, chan, cost)
        n_solves += 1
        worst_mass = max(worst_mass, float(np.max(np.abs(sol.mass(grid) - 1.0))))
        worst_repair = max(worst_repair, float(np.max(sol.repair)))
        finite &= bool(np.all(np.isfinite(sol.u)))
        nonneg &= bool(np.all(sol.m >= 0))
    ok = worst_mass <= 1e-6 and worst_repair <= 1e-3 and finite and nonneg
    _record(acceptance, 4, ok, f"{n_solves} solves: max mass error {worst_mass:.1e}, max clipped mass "
                               f"{worst_repair:.1e}, u finite={finite}, m>=0={nonneg}")
    assert ok


def test_criterion_5_equilibrium_shape(acceptance):
    cfg = default_config()
    sc = build_scenario(cfg.scenario)
    c = cfg.collab
    grid = replace(c.grid, n_time=sc.subslots_per_slot, dt=sc.dt, e0=c.e0)
    pos = sc.uav_start
    g = link_gains(pos, sc.jammer_positions(0.0), c.channel.alpha)
    nn = nearest_neighbours(pos)
    game = slot_game(c, sc.n_uavs, sc.n_targets, g.uu[np.arange(len(pos)), nn], g, nn)
    sol = solve_mfg(grid.uniform_density(), grid, game.channel, game.cost, tol=c.mfg_tol,
                    max_iter=c.mfg_max_iter, p_max=c.channel.p_max_uav)
    low_monotone = bool(np.all(np.diff(sol.m[:, 0]) >= 0))
    top_drops = bool(sol.m[1, -1] < sol.m[0, -1])
    frac = float(np.mean(np.diff(sol.p, axis=1) >= 0))
    ok = low_monotone and top_drops and frac >= 0.95 and sol.converged
    _record(acceptance, 5, ok, f"lowest level monotone={low_monotone}, top level drops={top_drops}, "
                               f"policy monotone on {frac:.1%} of pairs, converged in {sol.iterations}")
    assert ok


def test_criterion_6_planner_scenarios(acceptance):
    t0 = time.perf_counter()
    bp = balance_point()
    trad = fly_single("traditional-apf", bp.start, bp.target, bp.world, bp.gains, max_steps=400)
    disp = np.linalg.norm(np.diff(trad.path, axis=0), axis=1)
    # the plain planner's last 100 steps
    parked = bool(np.all(disp[-100:] < 1e-6)) and not trad.arrived
    jss = fly_single("jssct", bp.start, bp.target, bp.world, bp.gains, max_steps=400)

    jc = jitter_corridor()
    trad_c = fly_single("traditional-apf", jc.start, jc.target, jc.world, jc.gains, max_steps=400)
    jss_c = fly_single("jssct", jc.start, jc.target, jc.world, jc.gains, max_steps=400)
    trad_max = max(f.executed_turn for f in trad_c.forces)
    jss_max = max(f.executed_turn for f in jss_c.forces)
    rrt = [path_length(rrt_plan(jc.start, jc.target, jc.world.obstacles, jc.world.jammer_positions,
                                step=jc.gains.step_len, seed=s, goal_tol=1.0)) for s in SEEDS]
    jss_len = path_length(jss_c.path)
    elapsed = time.perf_counter() - t0
    ok = (parked and jss.arrived and jss_max < 90 and trad_max >= 90 and jss_c.arrived
          and jss_len < np.mean(rrt) and elapsed <= 60)
    _record(acceptance, 6, ok,
            f"balance: APF parked={parked}, JSSCT arrived={jss.arrived}; corridor: JSSCT max turn {jss_max:.1f} deg, "
            f"APF max turn {trad_max:.1f} deg; path JSSCT {jss_len:.2f} m vs RRT mean {np.mean(rrt):.2f} m; "
            f"{elapsed:.1f}s")
    assert parked and jss.arrived
    assert jss_max < 90 and trad_max >= 90
    assert jss_c.arrived and jss_len < np.mean(rrt)
    assert elapsed <= 60


def test_criterion_7_desk_comparison(acceptance, desk_report):
    report, elapsed = desk_report
    dyn = report.row("dynamic-collaboration")
    base = [report.row(p) for p in POLICIES[1:]]
    lower_i = all(dyn.interference_mean < b.interference_mean for b in base)
    lower_s = all(dyn.steps_mean < b.steps_mean for b in base)
    lower_w = all(dyn.switches_mean < b.switches_mean for b in base)
    nojam = report.row("no-jammer-cooperative")
    reduction = 1 - dyn.interference_mean / nojam.interference_mean
    sinr_frac = float(np.mean([lg.sinr_ok_fraction() for lg in report.logs["dynamic-collaboration"]]))
    for label, logs in report.logs.items():
        VIOLATIONS[f"desk/{label}"] = sum(len(lg.violations) for lg in logs)
    ok = lower_i and lower_s and lower_w and reduction >= 0.15 and sinr_frac >= 0.95 and elapsed <= 600
    _record(acceptance, 7, ok,
            f"interference/steps/switches lower than every baseline: {lower_i}/{lower_s}/{lower_w}; "
            f"interference reduction vs no-jammer {reduction:.0%}; SINR>=threshold in {sinr_frac:.1%} of subslots; "
            f"{elapsed:.0f}s")
    print("\n" + report.table())
    assert lower_i and lower_s and lower_w
    assert reduction >= 0.15
    assert elapsed <= 600
    assert sinr_frac >= 0.95, "average SINR at or above threshold in 95% of subslots"


def test_criterion_8_zero_violations(acceptance, desk_report):
    report, _ = desk_report
    for label, logs in report.logs.items():
        VIOLATIONS[f"desk/{label}"] = sum(len(lg.violations) for lg in logs)
    first = []
    for name, cfg in (("single-target", single_target), ("crossing", crossing_targets)):
        for s in range(3):
            lg = run_episode(build_scenario(cfg(seed=s)), CollabConfig(), seed=s)
            VIOLATIONS[f"{name}/seed{s}"] = len(lg.violations)
            first += lg.violations[:1]
    for logs in report.logs.values():
        for lg in logs:
            first += lg.violations[:1]
    total = sum(VIOLATIONS.values())
    _record(acceptance, 8, total == 0, f"{total} violations over {len(VIOLATIONS)} run groups"
            + (f"; first: {first[0]}" if first else ""))
    assert total == 0, str(first[0]) if first else ""
