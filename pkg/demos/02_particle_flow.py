# N-body flows and the Dobrushin estimate
#
# The linear kernel K(z, z') = c (z - z') pushes every particle away from
# the barycenter at rate c, so the flow is known in closed form.

# %%
import math

import numpy as np

from meanfield_lab.dynamics import FlowParams, barycenter, energy, integrate_flow
from meanfield_lab.kernels import HarmonicVlasovKernel, LinearKernel
from meanfield_lab.transport import DiscreteMeasure, w1_exact

k = LinearKernel(1, c=1.0)
z0 = np.array([[-0.4], [1.3], [0.2]])
z1 = integrate_flow(k, z0, FlowParams(1.0))
exact = z0.mean() + (z0 - z0.mean()) * math.e
print("max error vs closed form:", np.abs(z1 - exact).max())

# %%
# Antisymmetric kernels keep the barycenter fixed. The harmonic Vlasov
# kernel also conserves energy.
h = HarmonicVlasovKernel(1)
z = np.random.default_rng(1).normal(size=(200, 2))
zt = integrate_flow(h, z, FlowParams(2.0))
print("barycenter drift:", np.abs(barycenter(zt) - barycenter(z)).max())
print("energy drift:    ", abs(energy(h, zt) - energy(h, z)))

# %%
# Two clouds that start close stay close: the distance grows at most by e^{2Lt}.
rng = np.random.default_rng(2)
a, b = rng.normal(size=(256, 2)), rng.normal(size=(256, 2)) + [0.1, 0.0]
d0 = w1_exact(DiscreteMeasure.empirical(a), DiscreteMeasure.empirical(b))[0]
for t in (0.25, 0.5, 1.0):
    at, bt = integrate_flow(h, np.stack([a, b]), FlowParams(t))
    dt = w1_exact(DiscreteMeasure.empirical(at), DiscreteMeasure.empirical(bt))[0]
    print(f"t={t:4}  dist {dt:.4f}  bound {math.exp(2 * t) * d0:.4f}")
