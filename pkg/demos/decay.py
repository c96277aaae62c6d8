"""Decay of a particle initially confined inside a delta-shell barrier.

Prints the nonescape and survival probabilities, and the flux through the
shell, on a few decades of time for lambda = 6, a = 1, n = 1.
"""
import numpy as np

from qflow.delta_shell import converged_resonances, current, nonescape_P, survival_S
from qflow.resonances import BarrierParams

params = BarrierParams(lam=6.0, a=1.0, n=1)
taus = np.geomspace(0.5, 50.0, 11)

# enough poles for every radial node of the interior quadrature at the earliest time
r_nodes = np.linspace(0.0, params.a, 65)
res = converged_resonances(params, r_nodes, taus[:1])
print(f"using {res.truncation} resonance pairs; k_1 = {res.k[0]:.6f}")

P = nonescape_P(res, taus)
S = survival_S(res, 1, taus)
j = current(res, params.a, taus)

print(f"{'tau':>9} {'P':>12} {'S':>12} {'j(a)':>12}")
for row in zip(taus, P, S, j):
    print("{:9.4f} {:12.5e} {:12.5e} {:12.4e}".format(*row))

# the exponential regime: P ~ exp(-Gamma tau) with Gamma = -2 Im k_1^2
gamma = -2.0 * np.imag(res.k[0] ** 2)
print(f"resonance width Gamma = {gamma:.6f}")
