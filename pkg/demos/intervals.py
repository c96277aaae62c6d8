"""Backflow intervals at the shell r = a for lambda = 6, n = 1, tau in [10, 20].

During each interval the radial current at the shell is negative, so
probability flows back into the interior and P(tau) rises by Delta.
"""
import numpy as np

from qflow.backflow import find_backflow_intervals
from qflow.delta_shell import converged_resonances, current, nonescape_P
from qflow.resonances import BarrierParams

params = BarrierParams(6.0, 1.0, 1)
window = (10.0, 20.0)
res = converged_resonances(params, np.array([params.a]), np.array(window))

found = find_backflow_intervals(lambda t: current(res, params.a, t), window,
                                lambda t: nonescape_P(res, t), location=params.a)

print(f"{'i':>3} {'start':>9} {'end':>9} {'P(start)':>11} {'Delta':>11}")
for i, iv in enumerate(found, start=1):
    print(f"{i:3d} {iv.tau_start:9.4f} {iv.tau_end:9.4f} {iv.p_at_start:11.4e} {iv.delta:11.4e}")

total = sum(iv.delta for iv in found)
print(f"{len(found)} intervals, total backflow {total:.4e}")
