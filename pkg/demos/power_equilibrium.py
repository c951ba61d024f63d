"""One slot of the energy-constrained power game at desk scale.

Run: python3 demos/power_equilibrium.py
"""

from dataclasses import replace

import numpy as np

from uavswarm.channel import link_gains, nearest_neighbours
from uavswarm.config import default_config
from uavswarm.core import build_scenario
from uavswarm.orchestrator import slot_game
from uavswarm.powerctl import solve_mfg

cfg = default_config()
sc = build_scenario(cfg.scenario)
c = cfg.collab
grid = replace(c.grid, n_time=sc.subslots_per_slot, dt=sc.dt, e0=c.e0)

# The swarm's mean gains (from two probe transmissions) set up the game.
g = link_gains(sc.uav_start, sc.jammer_positions(0.0), c.channel.alpha)
nn = nearest_neighbours(sc.uav_start)
game = slot_game(c, sc.n_uavs, sc.n_targets, g.uu[np.arange(sc.n_uavs), nn], g, nn)
print(f"mean inter-UAV gain {game.g_u.mean():.3e}, mean jammer gain {game.g_j.mean():.3e}")

sol = solve_mfg(grid.uniform_density(), grid, game.channel, game.cost, tol=c.mfg_tol, p_max=c.channel.p_max_uav)
print(f"fixed point after {sol.iterations} iterations, converged={sol.converged}")
print(f"mass drift {np.max(np.abs(sol.mass(grid) - 1)):.1e}")

# Energy drains downward: the empty-battery cell fills, the full cell empties.
print("mass at lowest level over time:", np.round(sol.m[::5, 0], 4).tolist())
print("mass at top level over time:   ", np.round(sol.m[::5, -1], 4).tolist())
print("policy at t=0 across energy (every 10th level):", np.round(sol.p[0, ::10], 4).tolist())
