# Laws on measures
#
# A measure ensemble is a weighted list of point clouds, standing for a
# probability on probability measures. Distances between two ensembles use
# W1 twice: once between members, once between the member lists.

# %%
from meanfield_lab.dynamics import FlowParams
from meanfield_lab.ensembles import (MeasureEnsemble, nested_stability_check, nested_w1, qn_projection,
                                     random_mixture_ensemble)
from meanfield_lab.densities import Gaussian, quantize
from meanfield_lab.kernels import HarmonicVlasovKernel

P = random_mixture_ensemble(16, 32, 2, seed=1)
Q = random_mixture_ensemble(16, 32, 2, seed=2)
print("nested distance", nested_w1(P, Q))

# %%
# Moving every member with the same flow is Lipschitz in the nested distance.
h = HarmonicVlasovKernel(1)
for t in (0.25, 0.5):
    rep = nested_stability_check(P, Q, h, t, FlowParams(), tol=0.1)
    print(f"t={t}  dist_t {rep.dist_t:.4f}  bound {rep.bound:.4f}  pass {rep.passed}")

# %%
# Sampling N atoms from a randomly chosen member gives Q_N. Its empirical
# measures approach the ensemble as N grows.
R = MeasureEnsemble([quantize(Gaussian([-1.0], 1.0), 512), quantize(Gaussian([1.0], 0.25), 512)], [0.5, 0.5])
for N in (16, 64, 256):
    draws = qn_projection(R, N, 32, seed=4)
    print(f"N={N:4d}  nested distance {nested_w1(MeasureEnsemble.from_ensemble(draws), R):.4f}")
