"""Free expansion of a box superposition released at tau = 0.

The packet (psi_1 + exp(i pi/4) psi_23) / sqrt(2) shows a train of short
backflow intervals at r = a right after release.
"""
import numpy as np

from qflow.backflow import find_backflow_intervals
from qflow.free_packet import FreeModeParams, Superposition, current_free, long_time_nonescape, nonescape_free, total_norm_free

a = 1.0
sup = Superposition.from_terms(a, [(1, 1 / np.sqrt(2)), (23, np.exp(0.25j * np.pi) / np.sqrt(2))])

for tau in (0.01, 0.1, 1.0):
    print(f"tau = {tau:5.2f}: norm - 1 = {total_norm_free(sup, tau) - 1:+.2e}, P = {nonescape_free(sup, tau):.6f}")

found = find_backflow_intervals(lambda t: current_free(sup, a, t), (0.0, 0.12),
                                lambda t: nonescape_free(sup, t), location=a, step=1e-5)
for iv in found:
    print(f"backflow on ({iv.tau_start:.6f}, {iv.tau_end:.6f}), Delta = {iv.delta:.3e}")

# single level at late times: P ~ |A|^2 a^3 / 3 tau^-3
one = Superposition.from_terms(a, [(1, 1.0)])
taus = np.geomspace(50, 500, 5)
ratio = nonescape_free(one, taus) / long_time_nonescape(FreeModeParams(a, 1), taus)
print("P / asymptote:", np.array2string(ratio, precision=6))
