"""Two planning traps and how the escape force and half-turn rule handle them.

Run: python3 demos/planner_cases.py
"""

import numpy as np

from uavswarm.scenarios import balance_point, jitter_corridor
from uavswarm.trajectory import fly_single, path_length, rrt_plan

# A sphere on the start-target line, slid so the forces cancel exactly at step 8.
case = balance_point()
for planner in ("traditional-apf", "jssct"):
    run = fly_single(planner, case.start, case.target, case.world, case.gains, max_steps=300)
    moves = np.linalg.norm(np.diff(run.path, axis=0), axis=1)
    stalled = int(np.sum(moves < 1e-6))
    print(f"balance point  {planner:<16} arrived={run.arrived!s:<5} steps={len(moves):>3} stalled steps={stalled}")

# A narrow offset corridor: plain APF bounces between the walls.
case = jitter_corridor()
for planner in ("traditional-apf", "jssct"):
    run = fly_single(planner, case.start, case.target, case.world, case.gains, max_steps=300)
    worst = max(f.executed_turn for f in run.forces)
    print(f"corridor       {planner:<16} arrived={run.arrived!s:<5} path={path_length(run.path):6.2f} m "
          f"largest turn={worst:5.1f} deg")

lengths = [path_length(rrt_plan(case.start, case.target, case.world.obstacles, step=case.gains.step_len,
                                seed=s, goal_tol=1.0)) for s in range(20)]
print(f"corridor       rrt (20 seeds)   mean path={np.mean(lengths):6.2f} m")
