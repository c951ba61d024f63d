"""The four collaboration policies on the desk-scale scenario.

Run: python3 demos/desk_comparison.py [n_seeds]
"""

import sys

from uavswarm.orchestrator import POLICIES, CollabConfig, compare_policies
from uavswarm.scenarios import desk_scale

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
report = compare_policies(desk_scale(), [CollabConfig(policy=p) for p in POLICIES], list(range(n_seeds)))
print(report.table())

# The proposed policy's SINR record, ignoring the final approach slot.
logs = report.logs["dynamic-collaboration"]
print("\nSINR at threshold, fraction of subslots per seed:", [round(lg.sinr_ok_fraction(), 3) for lg in logs])
print("reassociations per seed:", [len(lg.triggers("reassociation")) for lg in logs])
