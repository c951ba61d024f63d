"""Potential-field trajectory planning.

Every UAV runs the same fixed-length step along the resultant force of one
attractive field (its target) and three repulsive fields (other UAVs,
obstacles, jammers). The repulsive potential of each source is
``0.5 * k * (1/d - 1/d0)**2 * d_tar**q`` inside the influence distance ``d0``,
so repulsion fades out as the UAV closes on its target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Obstacle

EPS_BALANCE = 1e-6


class StuckError(RuntimeError):
    """The external escape force is also (numerically) zero."""


class NoPathFoundError(RuntimeError):
    pass


@dataclass(frozen=True)
class ApfGains:
    k_att: float = 5.0
    k_rep: float = 10.0
    k_obs: float = 10.0
    k_jam: float = 10.0
    k_ext: float = 5.0
    d0: float = 5.0
    q: float = 1.0
    step_len: float = 0.5

    def __post_init__(self):
        for name in ("k_att", "k_rep", "k_obs", "k_jam", "k_ext", "d0", "q", "step_len"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def check_speed(self, v_max: float, dt: float) -> None:
        if self.step_len > v_max * dt * (1 + 1e-12):
            raise ValueError(f"step_len {self.step_len} exceeds v_max*dt = {v_max * dt}")


@dataclass
class ForceBreakdown:
    f_att: np.ndarray
    f_rep: np.ndarray
    f_obs: np.ndarray
    f_jam: np.ndarray
    f_tot: np.ndarray
    turning_angle: float = 0.0
    executed_turn: float = 0.0
    used_external: bool = False
    used_jitter_fix: bool = False


@dataclass
class World:
    """Immutable snapshot every UAV of one subslot reads from."""

    uav_positions: np.ndarray
    obstacles: tuple[Obstacle, ...] = ()
    jammer_positions: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def others(self, i: int | None) -> np.ndarray:
        if i is None:
            return self.uav_positions
        return np.delete(self.uav_positions, i, axis=0)


def _as3(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(3)


def _target_geometry(pos, target_pos):
    diff = _as3(target_pos) - _as3(pos)
    d_tar = float(np.linalg.norm(diff))
    n_im = diff / d_tar if d_tar > 0 else np.zeros(3)
    return d_tar, n_im


def attractive_potential(pos, target_pos, k_att: float) -> float:
    d_tar, _ = _target_geometry(pos, target_pos)
    return 0.5 * k_att * d_tar**2


def attractive_force(pos, target_pos, k_att: float) -> np.ndarray:
    d_tar, n_im = _target_geometry(pos, target_pos)
    return k_att * d_tar * n_im


def _point_sources(pos, sources):
    src = np.asarray(sources, dtype=float).reshape(-1, 3)
    diff = _as3(pos) - src
    d = np.linalg.norm(diff, axis=1)
    return d, diff


def _sphere_sources(pos, obstacles):
    if not obstacles:
        return np.empty(0), np.empty((0, 3))
    centers = np.array([ob.center for ob in obstacles])
    radii = np.array([ob.radius for ob in obstacles])
    diff = _as3(pos) - centers
    r = np.linalg.norm(diff, axis=1)
    return r - radii, diff


def _repulsive(d, diff, pos, target_pos, k, d0, q) -> np.ndarray:
    """Negative gradient of the summed repulsive potential from sources at distance ``d``.

    ``diff`` points from each source's nearest point towards the UAV; only its
    direction is used.
    """
    inside = d <= d0
    if not np.any(inside):
        return np.zeros(3)
    d = d[inside]
    if np.any(d <= 0):
        raise ValueError("UAV coincides with (or is inside) a repulsive source")
    n_src = diff[inside] / np.linalg.norm(diff[inside], axis=1)[:, None]
    d_tar, n_im = _target_geometry(pos, target_pos)
    s = 1.0 / d - 1.0 / d0
    f1 = (k * s / d**2 * d_tar**q)[:, None] * n_src
    f = f1.sum(axis=0)
    if d_tar > 0:
        f = f + 0.5 * q * k * np.sum(s**2) * d_tar ** (q - 1) * n_im
    return f


def _repulsive_potential(d, pos, target_pos, k, d0, q) -> float:
    d = d[d <= d0]
    d_tar, _ = _target_geometry(pos, target_pos)
    return float(np.sum(0.5 * k * (1.0 / d - 1.0 / d0) ** 2) * d_tar**q)


def repulsive_potential_uav(pos, others, target_pos, gains: ApfGains) -> float:
    d, _ = _point_sources(pos, others)
    return _repulsive_potential(d, pos, target_pos, gains.k_rep, gains.d0, gains.q)


def repulsive_potential_obstacles(pos, obstacles, target_pos, gains: ApfGains) -> float:
    d, _ = _sphere_sources(pos, obstacles)
    return _repulsive_potential(d, pos, target_pos, gains.k_obs, gains.d0, gains.q)


def repulsive_potential_jammers(pos, jammer_positions, target_pos, gains: ApfGains) -> float:
    d, _ = _point_sources(pos, jammer_positions)
    return _repulsive_potential(d, pos, target_pos, gains.k_jam, gains.d0, gains.q)


def repulsive_force_uav(pos, others, target_pos, gains: ApfGains) -> np.ndarray:
    d, diff = _point_sources(pos, others)
    return _repulsive(d, diff, pos, target_pos, gains.k_rep, gains.d0, gains.q)


def repulsive_force_obstacles(pos, obstacles, target_pos, gains: ApfGains) -> np.ndarray:
    d, diff = _sphere_sources(pos, obstacles)
    return _repulsive(d, diff, pos, target_pos, gains.k_obs, gains.d0, gains.q)


def repulsive_force_jammers(pos, jammer_positions, target_pos, gains: ApfGains) -> np.ndarray:
    d, diff = _point_sources(pos, jammer_positions)
    return _repulsive(d, diff, pos, target_pos, gains.k_jam, gains.d0, gains.q)


def _b_sum(d, d0) -> float:
    d = d[d <= d0]
    return float(np.sum((1.0 / d - 1.0 / d0) ** 2))


def external_force(pos, others, obstacles, jammer_positions, target_pos, k_ext: float, d0: float,
                   include_jammers: bool = True) -> np.ndarray:
    """Escape force along the target direction, product of the per-class B sums.

    Sources beyond ``d0`` contribute nothing, so the force vanishes unless every
    included class has something within range.
    """
    _, n_im = _target_geometry(pos, target_pos)
    f1 = _b_sum(_point_sources(pos, others)[0], d0)
    f2 = _b_sum(_sphere_sources(pos, obstacles)[0], d0)
    f3 = _b_sum(_point_sources(pos, jammer_positions)[0], d0) if include_jammers else 1.0
    return 0.5 * k_ext * f1 * f2 * f3 * n_im


def turning_angle(f_prev, f_curr) -> float:
    a = _as3(f_prev)
    b = _as3(f_curr)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("turning angle undefined for a zero vector")
    c = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def half_turn(prev_dir, new_dir, fallback=None) -> np.ndarray:
    """Unit vector rotated from ``prev_dir`` towards ``new_dir`` by half their angle."""
    a = _as3(prev_dir) / np.linalg.norm(prev_dir)
    b = _as3(new_dir) / np.linalg.norm(new_dir)
    omega = np.arccos(np.clip(np.dot(a, b), -1.0, 1.0))
    w = b - np.dot(a, b) * a
    if np.linalg.norm(w) < 1e-9:
        # antiparallel: any perpendicular works; prefer the one towards ``fallback``
        cands = [fallback] if fallback is not None else []
        cands += [np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])]
        for c in cands:
            w = _as3(c) - np.dot(_as3(c), a) * a
            if np.linalg.norm(w) > 1e-6:
                break
    w = w / np.linalg.norm(w)
    return np.cos(omega / 2) * a + np.sin(omega / 2) * w


def resultant_force(pos, target_pos, world: World, gains: ApfGains, self_index=None,
                    jammer_aware: bool = True) -> ForceBreakdown:
    others = world.others(self_index)
    f_att = attractive_force(pos, target_pos, gains.k_att)
    f_rep = repulsive_force_uav(pos, others, target_pos, gains)
    f_obs = repulsive_force_obstacles(pos, world.obstacles, target_pos, gains)
    if jammer_aware:
        f_jam = repulsive_force_jammers(pos, world.jammer_positions, target_pos, gains)
    else:
        f_jam = np.zeros(3)
    return ForceBreakdown(f_att, f_rep, f_obs, f_jam, f_att + f_rep + f_obs + f_jam)


@dataclass
class StepResult:
    position: np.ndarray
    heading: np.ndarray
    forces: ForceBreakdown | None


def jssct_step(pos, prev_heading, target_pos, world: World, gains: ApfGains, *, self_index=None,
               d_max: float = 1.0, jammer_aware: bool = True, eps: float = EPS_BALANCE) -> StepResult:
    """One step of the jamming-sensitive, singular-case-tolerant planner.

    ``prev_heading`` is the unit direction of the previous step (zeros before
    the first one). Turns of 90 degrees or more are halved.
    """
    pos = _as3(pos)
    prev_heading = _as3(prev_heading)
    d_tar, n_im = _target_geometry(pos, target_pos)
    if d_tar <= d_max:
        return StepResult(pos.copy(), prev_heading.copy(), None)
    fb = resultant_force(pos, target_pos, world, gains, self_index, jammer_aware)
    f = fb.f_tot
    if np.linalg.norm(f) < eps:
        f = external_force(pos, world.others(self_index), world.obstacles, world.jammer_positions,
                           target_pos, gains.k_ext, gains.d0, include_jammers=jammer_aware)
        if np.linalg.norm(f) < eps:
            raise StuckError(f"balance point at {pos} and no escape force")
        fb.f_tot = f
        fb.used_external = True
    direction = f / np.linalg.norm(f)
    heading = direction
    if np.any(prev_heading):
        fb.turning_angle = turning_angle(prev_heading, direction)
        if 90.0 <= fb.turning_angle <= 180.0:
            heading = half_turn(prev_heading, direction, fallback=n_im)
            fb.used_jitter_fix = True
        fb.executed_turn = turning_angle(prev_heading, heading)
    return StepResult(pos + gains.step_len * heading, heading, fb)


def traditional_apf_step(pos, prev_heading, target_pos, world: World, gains: ApfGains, *, self_index=None,
                         d_max: float = 1.0, jammer_aware: bool = True, eps: float = EPS_BALANCE) -> StepResult:
    """Plain fixed-step APF: no escape force, no turn correction; parks where the force vanishes."""
    pos = _as3(pos)
    prev_heading = _as3(prev_heading)
    d_tar, _ = _target_geometry(pos, target_pos)
    if d_tar <= d_max:
        return StepResult(pos.copy(), prev_heading.copy(), None)
    fb = resultant_force(pos, target_pos, world, gains, self_index, jammer_aware)
    norm = np.linalg.norm(fb.f_tot)
    if norm < eps:
        return StepResult(pos.copy(), prev_heading.copy(), fb)
    heading = fb.f_tot / norm
    if np.any(prev_heading):
        fb.turning_angle = fb.executed_turn = turning_angle(prev_heading, heading)
    return StepResult(pos + gains.step_len * heading, heading, fb)


# ---------------------------------------------------------------- RRT baseline


def _segment_clear(a, b, obstacles, jammer_positions, clearance: float) -> bool:
    ab = b - a
    L2 = float(ab @ ab)
    for c, r in obstacles:
        t = 0.0 if L2 == 0 else np.clip((c - a) @ ab / L2, 0.0, 1.0)
        if np.linalg.norm(a + t * ab - c) <= r + clearance:
            return False
    for j in jammer_positions:
        t = 0.0 if L2 == 0 else np.clip((j - a) @ ab / L2, 0.0, 1.0)
        if np.linalg.norm(a + t * ab - j) <= clearance:
            return False
    return True


def rrt_plan(start, target, obstacles=(), jammer_positions=(), step: float = 0.5, max_nodes: int = 20000,
             seed: int = 0, *, goal_bias: float = 0.1, goal_tol: float = 1.0, clearance: float = 0.1,
             margin: float = 5.0, bounds=None) -> np.ndarray:
    """Goal-biased RRT; returns the polyline (rows are waypoints) from ``start``.

    Sampling is uniform over ``bounds`` (lo, hi) or, by default, the bounding
    box of start, target and obstacles padded by ``margin``; flat axes stay flat.
    """
    start, target = _as3(start), _as3(target)
    obs = [(ob.center, ob.radius) for ob in obstacles]
    jams = np.asarray(jammer_positions, dtype=float).reshape(-1, 3)
    for c, r in obs:
        if np.linalg.norm(target - c) <= r or np.linalg.norm(start - c) <= r:
            raise NoPathFoundError("start or target lies inside an obstacle")
    if bounds is None:
        pts = [start, target] + [c for c, _ in obs]
        lo = np.min(pts, axis=0)
        hi = np.max(pts, axis=0)
        flat = np.isclose(lo, hi) & np.isclose(start, target)
        lo = np.where(flat, lo, lo - margin)
        hi = np.where(flat, hi, hi + margin)
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    rng = np.random.default_rng(seed)
    nodes = np.empty((max_nodes, 3))
    parent = np.full(max_nodes, -1)
    nodes[0] = start
    count = 1
    goal = None
    if np.linalg.norm(start - target) <= goal_tol:
        goal = 0
    while goal is None and count < max_nodes:
        sample = target if rng.random() < goal_bias else lo + (hi - lo) * rng.random(3)
        near = int(np.argmin(np.sum((nodes[:count] - sample) ** 2, axis=1)))
        direction = sample - nodes[near]
        dist = np.linalg.norm(direction)
        if dist == 0:
            continue
        new = nodes[near] + direction * min(step, dist) / dist
        if not _segment_clear(nodes[near], new, obs, jams, clearance):
            continue
        nodes[count] = new
        parent[count] = near
        if np.linalg.norm(new - target) <= goal_tol:
            goal = count
        count += 1
    if goal is None:
        raise NoPathFoundError(f"no path within {max_nodes} nodes")
    path = [goal]
    while parent[path[-1]] >= 0:
        path.append(parent[path[-1]])
    return nodes[path[::-1]].copy()


def path_length(path) -> float:
    p = np.asarray(path, dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


@dataclass
class SingleRun:
    path: np.ndarray
    forces: list[ForceBreakdown]
    arrived: bool


def fly_single(planner: str, start, target, world: World, gains: ApfGains, *, d_max: float = 1.0,
               max_steps: int = 500, jammer_aware: bool = True) -> SingleRun:
    """Fly one UAV through a static world with ``jssct`` or ``traditional-apf``."""
    step_fn = {"jssct": jssct_step, "traditional-apf": traditional_apf_step}[planner]
    pos = _as3(start)
    target = _as3(target)
    heading = np.zeros(3)
    path = [pos.copy()]
    forces = []
    for _ in range(max_steps):
        if np.linalg.norm(target - pos) <= d_max:
            return SingleRun(np.array(path), forces, True)
        res = step_fn(pos, heading, target, world, gains, d_max=d_max, jammer_aware=jammer_aware)
        pos, heading = res.position, res.heading
        if res.forces is not None:
            forces.append(res.forces)
        path.append(pos.copy())
    return SingleRun(np.array(path), forces, bool(np.linalg.norm(target - pos) <= d_max))
