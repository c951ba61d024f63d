"""World description, seeded randomness and kinematics of targets and jammers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration violates an invariant. ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


STREAMS = {"starts": 0, "fading": 1, "wiener": 2, "rrt": 3, "kmeans": 4, "bench": 5}


@dataclass(frozen=True)
class RngStream:
    """A named, independently seedable random stream.

    Identical ``(seed, stream_id)`` pairs always produce identical samples.
    """

    seed: int
    stream_id: int

    @classmethod
    def named(cls, seed: int, name: str, sub: int = 0) -> "RngStream":
        return cls(seed, STREAMS[name] * 100_000 + sub)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class Obstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if not self.radius > 0:
            raise ConfigError("obstacle.radius", f"must be > 0, got {self.radius}")


@dataclass(frozen=True)
class TargetTrack:
    start: np.ndarray
    direction: np.ndarray
    speed: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if n == 0:
            raise ConfigError("target.direction", "must be nonzero")
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(3))
        object.__setattr__(self, "direction", d / n)
        if self.speed < 0:
            raise ConfigError("target.speed", "must be >= 0")


@dataclass
class ScenarioConfig:
    """User-facing scenario description; :func:`build_scenario` resolves it.

    ``uav_start`` may be given explicitly; otherwise ``n_uavs`` starts are drawn
    uniformly from the box ``start_box_lo``..``start_box_hi``.
    """

    n_uavs: int = 30
    targets: list[TargetTrack] = field(default_factory=list)
    obstacles: list[Obstacle] = field(default_factory=list)
    jammer_offset: tuple[float, float, float] = (0.0, 5.0, 0.0)
    n_slots: int = 15
    subslots_per_slot: int = 20
    dt: float = 0.05
    horizon: float | None = None
    d_max: float = 1.0
    v_max: float = 20.0
    seed: int = 0
    start_box_lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    start_box_hi: tuple[float, float, float] = (20.0, 20.0, 5.0)
    uav_start: np.ndarray | None = None
    min_start_separation: float = 0.5


@dataclass(frozen=True)
class Scenario:
    n_uavs: int
    n_targets: int
    obstacles: tuple[Obstacle, ...]
    uav_start: np.ndarray
    target_tracks: tuple[TargetTrack, ...]
    jammer_offset: np.ndarray
    horizon: float
    n_slots: int
    subslots_per_slot: int
    dt: float
    d_max: float
    v_max: float
    seed: int

    @property
    def n_subslots(self) -> int:
        return self.n_slots * self.subslots_per_slot

    def target_positions(self, t: float) -> np.ndarray:
        return np.array([target_position(self, m, t) for m in range(self.n_targets)])

    def jammer_positions(self, t: float) -> np.ndarray:
        return self.target_positions(t) + self.jammer_offset


def _draw_starts(cfg: ScenarioConfig) -> np.ndarray:
    rng = RngStream.named(cfg.seed, "starts").generator()
    lo = np.asarray(cfg.start_box_lo, dtype=float)
    hi = np.asarray(cfg.start_box_hi, dtype=float)
    if np.any(hi < lo):
        raise ConfigError("start_box_hi", "must be >= start_box_lo componentwise")
    pts = np.empty((0, 3))
    # rejection keeps starts collision-free; bounded so a crowded box fails loudly
    for _ in range(200 * cfg.n_uavs):
        if len(pts) == cfg.n_uavs:
            break
        p = lo + (hi - lo) * rng.random(3)
        if len(pts) and np.min(np.linalg.norm(pts - p, axis=1)) < cfg.min_start_separation:
            continue
        if any(surface_distance(p, ob) <= cfg.min_start_separation for ob in cfg.obstacles):
            continue
        pts = np.vstack([pts, p])
    if len(pts) < cfg.n_uavs:
        raise ConfigError("start_box_hi", "start box too small for the requested separation")
    return pts


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Validate ``cfg`` and resolve it into an immutable :class:`Scenario`."""
    n, m = cfg.n_uavs, len(cfg.targets)
    if n < 2:
        raise ConfigError("n_uavs", f"need at least 2 UAVs, got {n}")
    if m < 1:
        raise ConfigError("targets", "need at least one target")
    if m > n:
        raise ConfigError("targets", f"more targets ({m}) than UAVs ({n})")
    if cfg.v_max <= 0:
        raise ConfigError("v_max", "must be > 0")
    if cfg.d_max <= 0:
        raise ConfigError("d_max", "must be > 0")
    if cfg.dt <= 0:
        raise ConfigError("dt", "must be > 0")
    if cfg.n_slots < 1 or cfg.subslots_per_slot < 1:
        raise ConfigError("n_slots", "slot counts must be >= 1")
    offset = np.asarray(cfg.jammer_offset, dtype=float).reshape(3)
    if not np.any(offset):
        raise ConfigError("jammer_offset", "must be nonzero")
    horizon = cfg.n_slots * cfg.subslots_per_slot * cfg.dt
    if cfg.horizon is not None and not np.isclose(cfg.horizon, horizon, rtol=1e-9):
        raise ConfigError("horizon", f"n_slots*subslots_per_slot*dt = {horizon}, not {cfg.horizon}")

    if cfg.uav_start is not None:
        starts = np.asarray(cfg.uav_start, dtype=float)
        if starts.shape != (n, 3):
            raise ConfigError("uav_start", f"expected shape ({n}, 3), got {starts.shape}")
    else:
        starts = _draw_starts(cfg)
    starts.setflags(write=False)
    offset.setflags(write=False)

    return Scenario(
        n_uavs=n,
        n_targets=m,
        obstacles=tuple(cfg.obstacles),
        uav_start=starts,
        target_tracks=tuple(cfg.targets),
        jammer_offset=offset,
        horizon=horizon,
        n_slots=cfg.n_slots,
        subslots_per_slot=cfg.subslots_per_slot,
        dt=cfg.dt,
        d_max=cfg.d_max,
        v_max=cfg.v_max,
        seed=cfg.seed,
    )


def target_position(scenario: Scenario, m: int, t: float) -> np.ndarray:
    """Uniform straight-line motion of target ``m`` at time ``t`` seconds."""
    if not 0 <= m < scenario.n_targets:
        raise IndexError(f"target index {m} out of range")
    tr = scenario.target_tracks[m]
    return tr.start + tr.speed * t * tr.direction


def jammer_position(scenario: Scenario, m: int, t: float) -> np.ndarray:
    return target_position(scenario, m, t) + scenario.jammer_offset


def surface_distance(p, obstacle: Obstacle) -> float:
    """Signed distance from ``p`` to the sphere surface; negative inside."""
    return float(np.linalg.norm(np.asarray(p, dtype=float) - obstacle.center) - obstacle.radius)


@dataclass
class SwarmState:
    """Mutable per-subslot state, owned by one episode driver."""

    t: int
    positions: np.ndarray
    headings: np.ndarray
    energies: np.ndarray
    powers: np.ndarray
    labels: np.ndarray
    assigned_target: np.ndarray

    @classmethod
    def initial(cls, scenario: Scenario, e0: float) -> "SwarmState":
        n = scenario.n_uavs
        return cls(
            t=0,
            positions=np.array(scenario.uav_start, dtype=float),
            headings=np.zeros((n, 3)),
            energies=np.full(n, float(e0)),
            powers=np.zeros(n),
            labels=np.zeros(n, dtype=int),
            assigned_target=np.zeros(n, dtype=int),
        )
