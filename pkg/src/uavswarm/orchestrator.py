"""Episode driver tying association, planning and power control together.

Each subslot: check the reassociation trigger, set transmit powers, draw
fading and record link metrics, move every UAV one step (synchronously),
advance the energies, audit the constraints. At every slot boundary the
mean-gain probes and the power solve run, and once a full slot has been
recorded its average interference feeds the repulsive-gain adaptation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import association as assoc
from .channel import ChannelParams, draw_link_gains, estimate_all_receivers, link_gains, link_metrics, nearest_neighbours
from .core import RngStream, Scenario, ScenarioConfig, build_scenario, surface_distance
from .powerctl import (CostParams, MfgChannel, MfgGrid, energy_sde_step, fractional_power, optimal_power,
                       solve_mfg, uniform_power, value_gradient)
from .trajectory import (ApfGains, NoPathFoundError, StuckError, World, jssct_step, rrt_plan,
                         traditional_apf_step)

log = logging.getLogger(__name__)

POLICIES = ("dynamic-collaboration", "no-jammer-cooperative", "sct-apf+fractional", "sct-apf+uniform")
ASSOCIATIONS = ("ceta", "kmeans", "fcm")
PLANNERS = ("jssct", "traditional-apf", "rrt")


@dataclass(frozen=True)
class CollabConfig:
    policy: str = "dynamic-collaboration"
    association: str = "ceta"
    planner: str = "jssct"
    i_th_u: float = 1e-3
    i_th_j: float = 1e-3
    gains: ApfGains = ApfGains()
    channel: ChannelParams = ChannelParams()
    grid: MfgGrid = MfgGrid()
    omega1: float = 1e4
    omega2: float = 1e6
    e0: float = 1.0
    frac_p0: float = 1e-4
    frac_tau: float = 0.5
    eps_coll: float = 0.1
    mfg_tol: float = 1e-6
    mfg_max_iter: int = 200
    safety_hold: bool = True
    name: str | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.association not in ASSOCIATIONS:
            raise ValueError(f"unknown association {self.association!r}")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if not (self.i_th_u > 0 and self.i_th_j > 0):
            raise ValueError("interference thresholds must be > 0")

    @property
    def label(self) -> str:
        return self.name or self.policy

    @property
    def jammer_aware(self) -> bool:
        return self.policy == "dynamic-collaboration"


@dataclass
class Event:
    subslot: int
    kind: str
    detail: dict = field(default_factory=dict)


@dataclass
class Violation:
    subslot: int
    constraint: str
    entities: tuple
    value: float

    def __str__(self) -> str:
        return f"subslot {self.subslot}: {self.constraint} violated by {self.entities} (value {self.value:.4g})"


@dataclass
class EpisodeLog:
    """Per-subslot trace of one episode plus its summary metrics.

    Arrays indexed ``[k, i]`` hold subslot ``k`` and UAV ``i``; ``positions``,
    ``energies`` and ``assigned`` carry one extra leading row for the state
    before the first subslot.
    """

    positions: np.ndarray
    energies: np.ndarray
    assigned: np.ndarray
    powers: np.ndarray
    i_u: np.ndarray
    i_j: np.ndarray
    sinr: np.ndarray
    moved: np.ndarray
    used_external: np.ndarray
    used_jitter_fix: np.ndarray
    f_tot: np.ndarray
    turning_angle: np.ndarray
    mean_i_u: np.ndarray
    mean_i_j: np.ndarray
    slot_averages: list[tuple[float, float]]
    gain_history: list[tuple[float, float]]
    events: list[Event]
    violations: list[Violation]
    n_subslots: int
    subslots_per_slot: int
    arrived: bool
    gamma_th: float
    seed: int
    policy: str

    @property
    def horizon_exhausted(self) -> bool:
        return not self.arrived

    @property
    def steps(self) -> int:
        """Subslots until every UAV was within the arrival radius (the horizon if never)."""
        return self.n_subslots

    @property
    def uav_steps(self) -> int:
        return int(self.moved.sum())

    @property
    def switches(self) -> np.ndarray:
        return np.sum(np.diff(self.assigned, axis=0) != 0, axis=0)

    @property
    def mean_switches(self) -> float:
        return float(self.switches.mean())

    @property
    def total_interference(self) -> np.ndarray:
        """Population-mean received interference plus jamming, per subslot."""
        return self.mean_i_u + self.mean_i_j

    @property
    def mean_total_interference(self) -> float:
        return float(self.total_interference.mean()) if self.n_subslots else 0.0

    @property
    def mean_sinr(self) -> np.ndarray:
        return self.sinr.mean(axis=1)

    def sinr_ok_fraction(self, exclude_last_slot: bool = True) -> float:
        s = self.mean_sinr
        if exclude_last_slot:
            full = (self.n_subslots - 1) // self.subslots_per_slot * self.subslots_per_slot
            s = s[:full] if full > 0 else s
        return float(np.mean(s >= self.gamma_th)) if len(s) else 1.0

    def triggers(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def summary(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "arrived": self.arrived,
            "steps": self.steps,
            "uav_steps": self.uav_steps,
            "mean_switches": self.mean_switches,
            "mean_total_interference": self.mean_total_interference,
            "mean_sinr": float(self.mean_sinr.mean()) if self.n_subslots else 0.0,
            "sinr_ok_fraction": self.sinr_ok_fraction(),
            "reassociations": len(self.triggers("reassociation")),
            "replans": len(self.triggers("replan")),
            "violations": len(self.violations),
        }


def slot_average_interference(records, y: int | None = None) -> tuple[float, float]:
    """Mean of the per-subslot ``(I_U, I_J)`` records of one slot."""
    r = np.asarray(records, dtype=float).reshape(-1, 2)
    if y is not None and len(r) != y:
        raise ValueError(f"expected {y} subslot records, got {len(r)}")
    if len(r) == 0:
        raise ValueError("no records")
    return float(r[:, 0].mean()), float(r[:, 1].mean())


def adapt_gains(k_rep: float, k_jam: float, i_bar_u: float, i_bar_j: float,
                i_th_u: float, i_th_j: float) -> tuple[float, float, bool]:
    """Raise each repulsive gain by its relative threshold excess."""
    if not (i_th_u > 0 and i_th_j > 0):
        raise ValueError("thresholds must be > 0")
    replan = False
    if i_bar_u > i_th_u:
        k_rep = k_rep + (i_bar_u - i_th_u) / i_th_u
        replan = True
    if i_bar_j > i_th_j:
        k_jam = k_jam + (i_bar_j - i_th_j) / i_th_j
        replan = True
    return k_rep, k_jam, replan


def audit(k: int, prev_pos, pos, energies, powers, labels, n_targets, scenario: Scenario, jammers,
          collab: CollabConfig) -> list[Violation]:
    out: list[Violation] = []
    n = len(pos)
    sizes = np.bincount(labels, minlength=n_targets)
    if sizes.sum() != n or len(sizes) != n_targets:
        out.append(Violation(k, "P1a", tuple(sizes.tolist()), float(sizes.sum())))
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    iu, ju = np.triu_indices(n, 1)
    bad = d[iu, ju] <= collab.eps_coll
    for a, b in zip(iu[bad], ju[bad]):
        out.append(Violation(k, "P1b", (int(a), int(b)), float(d[a, b])))
    for o, ob in enumerate(scenario.obstacles):
        sd = np.linalg.norm(pos - ob.center, axis=1) - ob.radius
        for i in np.flatnonzero(sd <= 0):
            out.append(Violation(k, "P1c", (int(i), o), float(sd[i])))
    dj = np.linalg.norm(pos[:, None] - jammers[None], axis=-1)
    for i, m in zip(*np.nonzero(dj <= collab.eps_coll)):
        out.append(Violation(k, "P1d", (int(i), int(m)), float(dj[i, m])))
    step = np.linalg.norm(pos - prev_pos, axis=1)
    for i in np.flatnonzero(step > scenario.v_max * scenario.dt * (1 + 1e-9)):
        out.append(Violation(k, "P1g", (int(i),), float(step[i])))
    for i in np.flatnonzero((energies < 0) | (energies > collab.e0)):
        out.append(Violation(k, "P1h", (int(i),), float(energies[i])))
    for i in np.flatnonzero((powers < 0) | (powers > collab.channel.p_max_uav * (1 + 1e-12))):
        out.append(Violation(k, "P1i", (int(i),), float(powers[i])))
    return out


def _unsafe(pos, scenario: Scenario, jammers, eps: float) -> np.ndarray:
    """UAVs whose position breaks a separation constraint (higher index of a close pair)."""
    n = len(pos)
    bad = np.zeros(n, dtype=bool)
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    iu, ju = np.triu_indices(n, 1)
    close = d[iu, ju] <= eps
    bad[ju[close]] = True
    for ob in scenario.obstacles:
        bad |= np.linalg.norm(pos - ob.center, axis=1) - ob.radius <= eps
    if len(jammers):
        bad |= np.min(np.linalg.norm(pos[:, None] - jammers[None], axis=-1), axis=1) <= eps
    return bad


def _apply_safety_hold(old, new, scenario, jammers, eps) -> np.ndarray:
    """Revert proposed moves until the committed positions satisfy the separation constraints."""
    held = np.zeros(len(old), dtype=bool)
    pos = new.copy()
    for _ in range(len(old) + 1):
        bad = _unsafe(pos, scenario, jammers, eps) & ~held
        if not np.any(bad):
            break
        pos[bad] = old[bad]
        held |= bad
    return held


@dataclass
class SlotGame:
    """Inputs of one slot's representative power game."""

    channel: MfgChannel
    cost: CostParams
    g_u: np.ndarray
    g_j: np.ndarray
    g_direct: np.ndarray


def slot_game(collab: CollabConfig, n: int, m: int, g_direct, probe_gains, receivers) -> SlotGame:
    """Probe the mean gains at every receiver and summarise them for one representative UAV.

    The representative link uses the geometric mean of the direct gains and the
    arithmetic means of the interferer and jammer gains.
    """
    ch = collab.channel
    g_u, g_j = estimate_all_receivers(probe_gains, receivers, ch)
    cost = CostParams(omega1=collab.omega1, omega2=collab.omega2, gamma_th=ch.gamma_th, sigma2=ch.noise_power,
                      g_direct=float(np.exp(np.mean(np.log(g_direct)))))
    chan = MfgChannel(n, m, float(g_u.mean()), float(g_j.mean()), ch.p_max_jam)
    return SlotGame(chan, cost, g_u, g_j, np.asarray(g_direct))


class _PowerController:
    """Per-slot power solve and per-subslot policy lookup for one policy."""

    def __init__(self, collab: CollabConfig, n: int, m: int):
        self.c = collab
        self.n, self.m = n, m
        self.density = collab.grid.uniform_density()
        self.p_ref = collab.channel.p_max_uav / 2
        self.table: np.ndarray | None = None  # [uav, y, z]
        self.constant: np.ndarray | None = None

    def plan_slot(self, positions, jammers, fading_rng):
        c = self.c
        ch = c.channel
        if c.policy == "sct-apf+uniform":
            self.constant = np.full(self.n, uniform_power(c.e0, c.grid.horizon, ch.p_max_uav))
            return
        nn = nearest_neighbours(positions)
        mean_g = link_gains(positions, jammers, ch.alpha)
        g_dir = mean_g.uu[np.arange(self.n), nn]
        if c.policy == "sct-apf+fractional":
            self.constant = fractional_power(g_dir, c.frac_tau, c.frac_p0, ch.p_max_uav)
            return
        probe = draw_link_gains(positions, jammers, ch, fading_rng) if ch.resample_fading else mean_g
        game = slot_game(c, self.n, self.m, g_dir, probe, nn)
        g_u, g_j, base, chan = game.g_u, game.g_j, game.cost, game.channel
        aware = c.jammer_aware
        # the optimal power depends only on the summed fields, so jammer-unaware
        # policies (which book jamming as inter-UAV interference) solve the same game
        sol = solve_mfg(self.density, c.grid, chan, base, max_iter=c.mfg_max_iter, tol=c.mfg_tol,
                        p_max=ch.p_max_uav)
        self.density = sol.m[-1].copy()
        du = value_gradient(sol.u[1:], c.grid)  # gradient at t+1 drives the step from t
        p_bar = np.sum(sol.m[:-1] * sol.p, axis=1) * c.grid.de
        Y, Z = sol.p.shape
        table = np.empty((self.n, Y, Z))
        for i in range(self.n):
            iu = (self.n - 2) * g_u[i] * p_bar
            ij = self.m * ch.p_max_jam * g_j[i]
            for y in range(Y):
                if aware:
                    params = replace(base, g_direct=g_dir[i], i_bar_u=iu[y], i_bar_j=ij)
                else:
                    params = replace(base, g_direct=g_dir[i], i_bar_u=iu[y] + ij, i_bar_j=0.0)
                table[i, y] = optimal_power(du[y], params, ch.p_max_uav)
        table[:, :, 0] = 0.0
        self.table = table
        self.constant = None

    def powers(self, y: int, energies) -> np.ndarray:
        if self.constant is not None:
            p = self.constant.copy()
        else:
            z = self.c.grid.level_of(energies)
            p = self.table[np.arange(self.n), min(y, self.table.shape[1] - 1), z]
        p = np.where(np.asarray(energies) <= 0.0, 0.0, p)
        return p


def run_episode(scenario: Scenario, collab: CollabConfig = CollabConfig(), seed: int | None = None) -> EpisodeLog:
    """Fly one episode; never raises on horizon exhaustion (see ``EpisodeLog.arrived``)."""
    seed = scenario.seed if seed is None else seed
    fading_rng = RngStream.named(seed, "fading").generator()
    wiener_rng = RngStream.named(seed, "wiener").generator()
    collab.gains.check_speed(scenario.v_max, scenario.dt)

    n, m = scenario.n_uavs, scenario.n_targets
    Y = scenario.subslots_per_slot
    K = scenario.n_subslots
    ch = collab.channel
    aware = collab.jammer_aware
    gains = collab.gains
    grid = replace(collab.grid, n_time=Y, dt=scenario.dt, e0=collab.e0)
    collab = replace(collab, grid=grid)
    power = _PowerController(collab, n, m)

    pos = np.array(scenario.uav_start, dtype=float)
    heading = np.zeros((n, 3))
    energy = np.full(n, collab.e0)
    r_positions = [pos.copy()]
    r_energy = [energy.copy()]
    rec = {k: [] for k in ("powers", "i_u", "i_j", "sinr", "moved", "ext", "jit", "ftot", "turn")}
    mean_i_u, mean_i_j, perceived = [], [], []
    events: list[Event] = []
    violations: list[Violation] = []
    slot_avgs: list[tuple[float, float]] = []
    gain_hist = [(gains.k_rep, gains.k_jam)]
    rrt_paths: dict[int, tuple[np.ndarray, int]] = {}

    targets = scenario.target_positions(0.0)
    part = assoc.reassociate(pos, targets, collab.association, seed=seed)
    assigned = part.assigned_targets()
    r_assigned = [assigned.copy()]
    arrived = False
    latched = np.zeros(n, dtype=bool)  # arrived UAVs keep station on their target

    k = 0
    while k < K:
        tau = k * scenario.dt
        targets = scenario.target_positions(tau)
        jammers = scenario.jammer_positions(tau)
        goal = targets[assigned]
        latched |= np.linalg.norm(pos - goal, axis=1) <= scenario.d_max
        if np.all(latched):
            arrived = True
            break

        # (1) reassociation trigger
        cents = assoc.centroids(pos, part.labels, m)
        if assoc.reassociation_needed(part, cents, targets):
            part = assoc.reassociate(pos, targets, collab.association, seed=seed + k)
            new_assigned = part.assigned_targets()
            events.append(Event(k, "reassociation", {"switched": int(np.sum(new_assigned != assigned))}))
            latched &= new_assigned == assigned
            assigned = new_assigned
            goal = targets[assigned]
            rrt_paths.clear()

        # (2) powers; the solve runs at slot boundaries
        y = k % Y
        if y == 0:
            power.plan_slot(pos, jammers, fading_rng)
            if collab.planner == "rrt":
                rrt_paths.clear()
        p = power.powers(y, energy)

        # (3) channel draw and link metrics
        gains_now = draw_link_gains(pos, jammers, ch, fading_rng) if ch.resample_fading else link_gains(pos, jammers, ch.alpha)
        lm = link_metrics(gains_now, p, np.full(m, ch.p_max_jam), ch.noise_power, nearest_neighbours(pos))
        rec["powers"].append(p)
        rec["i_u"].append(lm["i_u"])
        rec["i_j"].append(lm["i_j"])
        rec["sinr"].append(lm["sinr"])
        mean_i_u.append(float(lm["i_u"].mean()))
        mean_i_j.append(float(lm["i_j"].mean()))
        perceived.append((float(lm["i_u"].mean() + (0.0 if aware else lm["i_j"].mean())),
                          float(lm["i_j"].mean()) if aware else 0.0))

        # (4) synchronous planner step
        world = World(pos.copy(), scenario.obstacles, jammers)
        new_pos = pos.copy()
        new_head = heading.copy()
        ext = np.zeros(n, dtype=bool)
        jit = np.zeros(n, dtype=bool)
        ftot = np.zeros(n)
        turn = np.zeros(n)
        drift = scenario.target_positions(tau + scenario.dt) - targets
        for i in range(n):
            if latched[i]:
                new_pos[i] = pos[i] + drift[assigned[i]]
                continue
            if collab.planner == "rrt":
                new_pos[i] = _rrt_next(i, pos[i], goal[i], scenario, jammers, gains.step_len, rrt_paths, seed + k)
                continue
            step_fn = jssct_step if collab.planner == "jssct" else traditional_apf_step
            try:
                res = step_fn(pos[i], heading[i], goal[i], world, gains, self_index=i,
                              d_max=scenario.d_max, jammer_aware=aware)
            except StuckError:
                events.append(Event(k, "stuck", {"uav": i}))
                continue
            new_pos[i], new_head[i] = res.position, res.heading
            if res.forces is not None:
                ext[i] = res.forces.used_external
                jit[i] = res.forces.used_jitter_fix
                ftot[i] = float(np.linalg.norm(res.forces.f_tot))
                turn[i] = res.forces.executed_turn
        if collab.safety_hold:
            held = _apply_safety_hold(pos, new_pos, scenario, jammers, collab.eps_coll)
            if np.any(held):
                new_pos[held] = pos[held]
                new_head[held] = heading[held]
                events.append(Event(k, "hold", {"uavs": np.flatnonzero(held).tolist()}))
        moved = np.any(new_pos != pos, axis=1) & ~latched
        prev = pos
        pos, heading = new_pos, new_head
        rec["moved"].append(moved)
        rec["ext"].append(ext)
        rec["jit"].append(jit)
        rec["ftot"].append(ftot)
        rec["turn"].append(turn)

        # (5) energy
        energy = energy_sde_step(energy, p, scenario.dt, grid.nu, wiener_rng, collab.e0)

        # (6) audit
        violations += audit(k, prev, pos, energy, p, part.labels, m, scenario, jammers, collab)
        r_positions.append(pos.copy())
        r_energy.append(energy.copy())
        r_assigned.append(assigned.copy())

        # (7) end of a full slot: averages and gain adaptation
        if y == Y - 1:
            i_u_bar, i_j_bar = slot_average_interference(perceived[-Y:], Y)
            slot_avgs.append(slot_average_interference(list(zip(mean_i_u[-Y:], mean_i_j[-Y:])), Y))
            k_jam_in = gains.k_jam
            k_rep, k_jam, replan = adapt_gains(gains.k_rep, k_jam_in, i_u_bar, i_j_bar if aware else 0.0,
                                               collab.i_th_u, collab.i_th_j)
            if replan:
                gains = replace(gains, k_rep=k_rep, k_jam=k_jam)
                events.append(Event(k, "replan", {"k_rep": k_rep, "k_jam": k_jam}))
            gain_hist.append((gains.k_rep, gains.k_jam))
        k += 1
    else:
        goal = scenario.target_positions(K * scenario.dt)[assigned]
        arrived = bool(np.all(latched | (np.linalg.norm(pos - goal, axis=1) <= scenario.d_max)))

    def stack(key, dtype=float):
        return np.array(rec[key], dtype=dtype).reshape(len(rec[key]), n)

    return EpisodeLog(
        positions=np.array(r_positions), energies=np.array(r_energy), assigned=np.array(r_assigned),
        powers=stack("powers"), i_u=stack("i_u"), i_j=stack("i_j"), sinr=stack("sinr"),
        moved=stack("moved", bool), used_external=stack("ext", bool), used_jitter_fix=stack("jit", bool),
        f_tot=stack("ftot"), turning_angle=stack("turn"),
        mean_i_u=np.array(mean_i_u), mean_i_j=np.array(mean_i_j), slot_averages=slot_avgs,
        gain_history=gain_hist, events=events, violations=violations, n_subslots=k,
        subslots_per_slot=Y, arrived=arrived, gamma_th=ch.gamma_th, seed=seed, policy=collab.label,
    )


def _rrt_next(i, pos, goal, scenario, jammers, step, cache, seed) -> np.ndarray:
    path, idx = cache.get(i, (None, 0))
    if path is None or idx >= len(path):
        try:
            path = rrt_plan(pos, goal, scenario.obstacles, jammers, step=step, seed=seed * 1000 + i,
                            goal_tol=scenario.d_max)
        except NoPathFoundError:
            return pos.copy()
        idx = 1
    nxt = path[min(idx, len(path) - 1)]
    cache[i] = (path, idx + 1)
    return nxt.copy()


@dataclass
class ComparisonRow:
    label: str
    n_runs: int
    interference_mean: float
    interference_std: float
    sinr_mean: float
    sinr_std: float
    steps_mean: float
    steps_std: float
    uav_steps_mean: float
    switches_mean: float
    switches_std: float
    arrived_fraction: float
    violations: int


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]
    logs: dict[str, list[EpisodeLog]]
    seeds: list[int]

    def row(self, label: str) -> ComparisonRow:
        return next(r for r in self.rows if r.label == label)

    def table(self) -> str:
        head = f"{'policy':<24}{'interference [W]':>18}{'SINR':>10}{'steps':>9}{'uav steps':>11}{'switches':>10}{'arrived':>9}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.label:<24}{r.interference_mean:>18.4e}{r.sinr_mean:>10.3g}{r.steps_mean:>9.1f}"
                         f"{r.uav_steps_mean:>11.1f}{r.switches_mean:>10.3f}{r.arrived_fraction:>9.2f}")
        return "\n".join(lines)


def compare_policies(scenario_cfg: ScenarioConfig, configs: list[CollabConfig], seeds: list[int]) -> ComparisonReport:
    """Run every config on every seed; the scenario is rebuilt per seed so starts vary."""
    rows = []
    logs: dict[str, list[EpisodeLog]] = {}
    scenarios = {s: build_scenario(replace(scenario_cfg, seed=s)) for s in seeds}
    for cfg in configs:
        runs = [run_episode(scenarios[s], cfg, seed=s) for s in seeds]
        logs[cfg.label] = runs
        ti = np.array([r.mean_total_interference for r in runs])
        sn = np.array([float(r.mean_sinr.mean()) for r in runs])
        st = np.array([r.steps for r in runs], dtype=float)
        us = np.array([r.uav_steps for r in runs], dtype=float)
        sw = np.array([r.mean_switches for r in runs])
        rows.append(ComparisonRow(cfg.label, len(runs), ti.mean(), ti.std(), sn.mean(), sn.std(), st.mean(),
                                  st.std(), us.mean(), sw.mean(), sw.std(),
                                  float(np.mean([r.arrived for r in runs])), sum(len(r.violations) for r in runs)))
    return ComparisonReport(rows, logs, list(seeds))
