# How fast can the flow spread a perturbation?
#
# The Jacobian blocks a_lk = dz_l(s)/dz_k(0) of the N-body flow are
# estimated by central differences. Off-diagonal blocks shrink like 1/n,
# diagonal ones stay below e^{L s} plus a 1/n correction.

# %%
import numpy as np

from meanfield_lab.dynamics import block_norms, flow_jacobian_fd
from meanfield_lab.kernels import HarmonicVlasovKernel, LinearKernel, ZeroKernel
from meanfield_lab.spohn import jacobian_bound_report, liouville_identity_check
from meanfield_lab.testfunctions import cosine_product

z = np.random.default_rng(0).normal(size=(8, 2))
norms = block_norms(flow_jacobian_fd(HarmonicVlasovKernel(1), z, 1.0))
print("diagonal    ", norms.diagonal().round(3))
print("off-diagonal", norms[0, 1:].round(3))

# %%
for kernel in (ZeroKernel(2), LinearKernel(2), HarmonicVlasovKernel(1)):
    for row in jacobian_bound_report(kernel, 8, [0.5, 1.0], trials=10, seed=1):
        print(f"{row.kernel:>20} s={row.s}  ratio {row.worst_ratio:.3f}  "
              f"alpha {row.alpha_margin:+.3f}  beta {row.beta_margin:+.3f}  pass {row.passed}")

# %%
# The averaged pair operator reproduces the N-body generator on psi = phi o T_s.
rep = liouville_identity_check(HarmonicVlasovKernel(1), z, cosine_product(2, 2), 0.5)
print("residual", rep.residual, "generator check", rep.generator_residual)
