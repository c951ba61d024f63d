"""Ready-made worlds used by the demos, the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Obstacle, ScenarioConfig, TargetTrack
from .trajectory import ApfGains, World, resultant_force


def desk_scale(seed: int = 0, n_uavs: int = 30) -> ScenarioConfig:
    """Three targets ahead of a 30-UAV swarm; the outer two cut diagonally across the middle lane.

    Each jammer trails its target by 6 m, two spherical obstacles sit between
    the start box and the targets, and the arrival radius matches the
    repulsion range so a whole sub-swarm fits around its target.
    """
    targets = [
        TargetTrack((50.0, 5.0, 5.0), (0.3, 1.0, 0.0), 3.0),
        TargetTrack((50.0, 30.0, 5.0), (1.0, 0.0, 0.0), 1.5),
        TargetTrack((50.0, 55.0, 5.0), (0.3, -1.0, 0.0), 3.0),
    ]
    obstacles = [Obstacle((45.0, 18.0, 5.0), 2.0), Obstacle((45.0, 42.0, 5.0), 2.0)]
    return ScenarioConfig(n_uavs=n_uavs, targets=targets, obstacles=obstacles, jammer_offset=(-6.0, 0.0, 0.0),
                          n_slots=15, subslots_per_slot=20, dt=0.05, d_max=5.0, seed=seed,
                          start_box_lo=(0.0, 0.0, 0.0), start_box_hi=(40.0, 60.0, 10.0))


def crossing_targets(seed: int = 0, n_uavs: int = 20) -> ScenarioConfig:
    """Two targets flying towards each other past the swarm, forcing a target swap."""
    targets = [
        TargetTrack((-10.0, 30.0, 2.0), (1.0, 0.0, 0.0), 3.0),
        TargetTrack((30.0, 30.0, 2.0), (-1.0, 0.0, 0.0), 3.0),
    ]
    return ScenarioConfig(n_uavs=n_uavs, targets=targets, obstacles=[], jammer_offset=(0.0, 8.0, 0.0),
                          n_slots=15, subslots_per_slot=20, dt=0.05, seed=seed,
                          start_box_lo=(0.0, 0.0, 0.0), start_box_hi=(20.0, 10.0, 4.0))


def single_target(seed: int = 0, n_uavs: int = 2) -> ScenarioConfig:
    """One slow target, no obstacles, jammer far outside every influence radius.

    Two UAVs by default: each receiver then hears no third UAV, so the
    interference averages stay below threshold and no gain update fires.
    """
    targets = [TargetTrack((30.0, 10.0, 2.0), (1.0, 0.0, 0.0), 0.5)]
    return ScenarioConfig(n_uavs=n_uavs, targets=targets, obstacles=[], jammer_offset=(0.0, 500.0, 0.0),
                          n_slots=10, subslots_per_slot=20, dt=0.05, seed=seed,
                          start_box_lo=(0.0, 0.0, 0.0), start_box_hi=(20.0, 20.0, 4.0))


def uniform_instances(n_instances: int, n_uavs: int = 100, seed: int = 0, side: float = 100.0,
                      planar: bool = True) -> np.ndarray:
    """Independent uniform UAV layouts for clustering benchmarks, shape (n_instances, n_uavs, 3)."""
    from .core import RngStream

    rng = RngStream.named(seed, "bench").generator()
    x = rng.random((n_instances, n_uavs, 3)) * side
    if planar:
        x[..., 2] = 0.0
    return x


@dataclass(frozen=True)
class PlannerCase:
    """A static single-UAV planning problem."""

    start: np.ndarray
    target: np.ndarray
    world: World
    gains: ApfGains


_DIAG = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
_ACROSS = np.array([-1.0, 1.0, 0.0]) / np.sqrt(2.0)


def balance_point(gains: ApfGains = ApfGains(), lattice_step: int = 8, radius: float = 1.5,
                  escort_height: float = 3.0) -> PlannerCase:
    """Start (0,0,0), target (10,10,0), one sphere on the line between them.

    The sphere is slid along the line until attraction and repulsion cancel
    exactly at the ``lattice_step``-th fixed-length step, so a plain planner
    lands on the zero-force point. A parked UAV above and a jammer below that
    point (mirror images, equal gains) leave the balance intact but give the
    escape force something to multiply.
    """
    from scipy.optimize import brentq

    target = np.array([10.0, 10.0, 0.0])
    x_k = lattice_step * gains.step_len * _DIAG
    lift = np.array([0.0, 0.0, escort_height])

    def world(s):
        return World(np.array([x_k + lift]), (Obstacle(s * _DIAG, radius),), np.array([x_k - lift]))

    def along(s):
        return resultant_force(x_k, target, world(s), gains).f_tot @ _DIAG

    lo = np.linalg.norm(x_k) + radius + 1e-3
    ss = np.linspace(lo, np.linalg.norm(target) - radius, 400)
    vals = np.array([along(s) for s in ss])
    sign_change = np.flatnonzero(np.diff(np.sign(vals)))
    if not len(sign_change):
        raise ValueError("no balance point for these gains")
    j = sign_change[0]
    s = brentq(along, ss[j], ss[j + 1], xtol=1e-14)
    return PlannerCase(np.zeros(3), target, world(s), gains)


def jitter_corridor(gains: ApfGains = ApfGains(), offset: float = 0.3, half_width: float = 1.2,
                    radius: float = 1.0, entry: float = 6.0, length: float = 6.0,
                    spacing: float = 1.5) -> PlannerCase:
    """Start (0,0,0), target (15,15,0), a corridor of sphere pairs along the line.

    The corridor axis is shifted ``offset`` sideways from the straight line so
    the UAV enters off-centre and the walls push it back and forth.
    """
    obstacles = []
    for s in np.arange(entry, entry + length + 1e-9, spacing):
        for side in (1.0, -1.0):
            obstacles.append(Obstacle(s * _DIAG + (offset + side * (half_width + radius)) * _ACROSS, radius))
    return PlannerCase(np.zeros(3), np.array([15.0, 15.0, 0.0]), World(np.empty((0, 3)), tuple(obstacles)), gains)
