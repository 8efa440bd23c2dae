"""Monomial observables on measures, the L_n generator identity and Jacobian growth bounds.

For psi = phi_m o T^n_s viewed as a function of n variables, the gradient
is assembled by the chain rule from a finite-difference Jacobian:
grad_k psi(Z) = sum_{l < m} a_{lk}^T (grad_l phi_m)(T^n_s Z).
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import FlowParams, block_norms, flow_jacobian_fd, integrate_flow, nbody_rhs
from .errors import CapacityError, DimensionError
from .rng import STREAM_TRIAL, stream
from .testfunctions import bump_product, cosine_product

MAX_MONOMIAL_TERMS = 1_000_000


@dataclass(frozen=True, eq=False)
class MonomialObservable:
    """f -> integral of phi_m d f^{(x)m}; ``phi=None`` is the constant monomial M_0 = 1."""

    phi: object = None

    @property
    def m(self):
        return 0 if self.phi is None else self.phi.arity


def monomial_eval(obs, f):
    """Exact sum over all m-tuples of support indices, correctly rounded (math.fsum).

    Because every tuple contributes a value independent of enumeration order
    and fsum is exact, the result does not depend on how f's support is
    listed.
    """
    m = obs.m
    if m == 0:
        return 1.0
    if obs.phi.dim != f.dim:
        raise DimensionError("observable and measure dimensions differ")
    n = f.size
    if n**m > MAX_MONOMIAL_TERMS:
        raise CapacityError(f"{n}^{m} terms exceed {MAX_MONOMIAL_TERMS}")
    idx = np.indices((n,) * m).reshape(m, -1).T
    w = np.ones(len(idx))
    for j in range(m):
        w = w * f.weights[idx[:, j]]
    vals = obs.phi(f.points[idx])
    return math.fsum((w * vals).tolist())


def composed_gradient(phi, jac, moved):
    """grad_k (phi o T)(Z) for k = 1..n from the Jacobian blocks ``jac`` (n, n, d, d) and T Z."""
    m = phi.arity
    g = phi.grad(moved[:m])  # (m, d)
    # sum_l a_{lk}^T g_l
    return np.einsum("lkij,li->kj", jac[:m], g)


def apply_A(kernel, Z, grad, zeta):
    """A_n[zeta] psi = sum_k K(z_k, zeta) . grad_k psi, evaluated pair by pair."""
    return math.fsum(float(kernel(Z[k], zeta) @ grad[k]) for k in range(Z.shape[0]))


@dataclass
class LiouvilleReport:
    residual: float
    generator_residual: float
    averaged_A: float
    L_psi: float
    ds_psi: float


def liouville_identity_check(kernel, Z, phi, s, h=None, dt=None, ds=1e-4):
    """Compare (1/n) sum_l A_n[z_l] psi with L_n psi for psi = phi o T^n_s.

    ``residual`` is the gap between the pairwise A_n average and L_n psi
    computed from the N-body velocity field. ``generator_residual``
    compares L_n psi with the central difference
    (psi_{s+ds} - psi_{s-ds}) / (2 ds), which tests that the assembled
    gradient really differentiates the flow.
    """
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    if phi.arity > n:
        raise ValueError("phi arity exceeds n")
    if phi.grad is None:
        raise ValueError(f"{phi.name} has no analytic gradient")
    p = FlowParams(t_final=s, dt=dt)
    moved = integrate_flow(kernel, Z, p)
    jac = flow_jacobian_fd(kernel, Z, s, h=h, dt=dt)
    grad = composed_gradient(phi, jac, moved)
    avg_A = math.fsum(apply_A(kernel, Z, grad, Z[l]) for l in range(n)) / n
    L_psi = math.fsum((nbody_rhs(kernel, Z) * grad).ravel().tolist())
    step = p.step_for(kernel)
    fwd = integrate_flow(kernel, moved, FlowParams(t_final=ds, dt=step))
    bwd = integrate_flow(kernel, moved, FlowParams(t_final=-ds, dt=step))
    ds_psi = (float(phi(fwd[:phi.arity])) - float(phi(bwd[:phi.arity]))) / (2.0 * ds)
    return LiouvilleReport(abs(avg_A - L_psi), abs(ds_psi - L_psi), avg_A, L_psi, ds_psi)


def default_observables(n, d):
    m = min(2, n)
    return [cosine_product(m, d), bump_product(m, d, radius=2.0)]


@dataclass
class JacobianRow:
    kernel: str
    n: int
    s: float
    worst_ratio: float
    worst_pointwise_ratio: float
    alpha_margin: float
    beta_margin: float
    trials: int
    passed: bool

    def to_json(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def jacobian_bound_report(kernel, n, s_values, trials, seed, observables=None, spread=1.0, tol=1e-3):
    """Sweep random configurations and check the Jacobian growth bounds at each s.

    For each trial Z (standard normal times ``spread``) and each observable
    phi_m with sup-gradients G_l, the chain quantity
    sum_k sum_l ||a_{lk}(s)|| G_l is divided by
    (e^{L|s|} + e^{3L|s|}/2) sum_l G_l; ``worst_ratio`` is its maximum. The
    pointwise ratio uses sum_k |grad_k psi(Z)| instead. ``alpha_margin`` and
    ``beta_margin`` are the largest excesses of ||a_{lk}|| over
    delta_{lk} e^{L|s|} + e^{3L|s|}/(2n) and of (1/n) sum_l ||a_{lk}|| over
    e^{2L|s|}/n. Block norms are spectral norms.
    """
    if trials < 1 or n < 2:
        raise ValueError("need trials >= 1 and n >= 2")
    d = kernel.dim
    L = kernel.lipschitz
    obs = observables or default_observables(n, d)
    Z = np.stack([spread * stream(seed, STREAM_TRIAL, i).standard_normal((n, d)) for i in range(trials)])
    rows = []
    for s in s_values:
        a = abs(float(s))
        jac = flow_jacobian_fd(kernel, Z, s)  # (B, n, n, d, d)
        moved = integrate_flow(kernel, Z, FlowParams(t_final=s))
        norms = block_norms(jac)  # (B, l, k)
        eye = np.eye(n)
        alpha_bound = eye * math.exp(L * a) + math.exp(3 * L * a) / (2 * n)
        alpha_margin = float((norms - alpha_bound).max())
        beta_margin = float((norms.mean(axis=1) - math.exp(2 * L * a) / n).max())
        factor = math.exp(L * a) + 0.5 * math.exp(3 * L * a)
        worst, worst_pt = 0.0, 0.0
        for phi in obs:
            G = np.asarray(phi.grad_sup, dtype=float)
            denom = factor * G.sum()
            if denom == 0:
                continue
            chain = np.einsum("blk,l->b", norms[:, :phi.arity, :], G)
            worst = max(worst, float(chain.max() / denom))
            for b in range(trials):
                g = composed_gradient(phi, jac[b], moved[b])
                worst_pt = max(worst_pt, float(np.linalg.norm(g, axis=1).sum() / denom))
        ok = worst <= 1.0 + tol and alpha_margin <= tol and beta_margin <= tol
        rows.append(JacobianRow(type(kernel).__name__, n, float(s), worst, worst_pt,
                                alpha_margin, beta_margin, trials, bool(ok)))
    return rows
