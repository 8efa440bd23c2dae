"""Antisymmetric, globally Lipschitz pair interactions K(z, z').

All kernels evaluate with numpy broadcasting: ``kernel(z, zp)`` accepts
arrays of shape ``(..., d)`` and returns ``(..., d)``. ``kernel.field``
computes the weighted mean field ``sum_l w_l K(z_k, z_l)`` for every point
of a cloud (or a batch of clouds) at once; kernels that are affine in
``z - z'`` override it with an O(N) formula.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UnsupportedKernelError
from .rng import stream


def _as_points(z, dim, what="point"):
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or z.shape[-1] != dim:
        raise DimensionError(f"{what} has trailing dimension {z.shape[-1:] or '()'}, kernel expects {dim}")
    return z


def _uniform_weights(points):
    n = points.shape[-2]
    return np.full(points.shape[:-1], 1.0 / n)


@dataclass(frozen=True)
class InteractionKernel:
    """Base class. Subclasses define ``_eval`` and set ``dim``/``lipschitz``."""

    dim: int
    lipschitz: float

    variant = "abstract"
    is_vlasov = False

    def __call__(self, z, zp):
        return self._eval(np.asarray(z, dtype=float), np.asarray(zp, dtype=float))

    def _eval(self, z, zp):
        raise NotImplementedError

    def field(self, points, weights=None):
        """Mean field at each point of ``points`` (shape ``(..., N, d)``)."""
        points = np.asarray(points, dtype=float)
        w = _uniform_weights(points) if weights is None else np.broadcast_to(weights, points.shape[:-1])
        pair = self._eval(points[..., :, None, :], points[..., None, :, :])
        return np.sum(pair * w[..., None, :, None], axis=-2)

    def field_at(self, z, points, weights):
        """Mean field of the cloud ``(points, weights)`` evaluated at ``z`` (shape ``(..., d)``)."""
        pair = self._eval(np.asarray(z, dtype=float)[..., None, :], points)
        return np.sum(pair * weights[:, None], axis=-2)

    def spec(self):
        return {"variant": self.variant, "params": self._params()}

    def _params(self):
        return {}


@dataclass(frozen=True)
class ZeroKernel(InteractionKernel):
    lipschitz: float = 0.0
    variant = "Zero"

    def _eval(self, z, zp):
        return np.zeros(np.broadcast_shapes(z.shape, zp.shape))

    def field(self, points, weights=None):
        return np.zeros_like(np.asarray(points, dtype=float))

    def _params(self):
        return {"dim": self.dim}


@dataclass(frozen=True)
class LinearKernel(InteractionKernel):
    """K(z, z') = c (z - z')."""

    c: float = 1.0
    lipschitz: float = field(init=False)
    variant = "Linear"

    def __post_init__(self):
        object.__setattr__(self, "lipschitz", abs(float(self.c)))

    def _eval(self, z, zp):
        return self.c * (z - zp)

    def field(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        if weights is None:
            bary = points.mean(axis=-2, keepdims=True)
        else:
            w = np.broadcast_to(weights, points.shape[:-1])
            bary = np.sum(points * w[..., None], axis=-2, keepdims=True)
        return self.c * (points - bary)

    def _params(self):
        return {"c": self.c, "dim": self.dim}


@dataclass(frozen=True)
class _VlasovKernel(InteractionKernel):
    """Phase space z = (x, xi) in R^s x R^s; K = (xi - xi', -grad V(x - x'))."""

    spatial_dim: int = 1
    is_vlasov = True

    def grad_potential(self, x):
        raise NotImplementedError

    def potential(self, x):
        raise NotImplementedError

    def split(self, z):
        s = self.spatial_dim
        return z[..., :s], z[..., s:]

    def _eval(self, z, zp):
        x, xi = self.split(z)
        xp, xip = self.split(zp)
        return np.concatenate(np.broadcast_arrays(xi - xip, -self.grad_potential(x - xp)), axis=-1)

    def field(self, points, weights=None):
        # the xi block is linear, so only the force needs pairs
        points = np.asarray(points, dtype=float)
        w = _uniform_weights(points) if weights is None else np.broadcast_to(weights, points.shape[:-1])
        x, xi = self.split(points)
        mean_xi = np.einsum("...l,...lj->...j", w, xi)[..., None, :]
        grad = self.grad_potential(x[..., :, None, :] - x[..., None, :, :])
        force = -np.einsum("...kli,...l->...ki", grad, w)
        return np.concatenate([xi - mean_xi, force], axis=-1)


@dataclass(frozen=True)
class HarmonicVlasovKernel(_VlasovKernel):
    """Vlasov kernel with V(x) = |x|^2 / 2, so grad V(x) = x and L = 1."""

    dim: int = field(init=False)
    lipschitz: float = field(init=False)
    variant = "HarmonicVlasov"

    def __post_init__(self):
        object.__setattr__(self, "dim", 2 * int(self.spatial_dim))
        object.__setattr__(self, "lipschitz", 1.0)

    def grad_potential(self, x):
        return x

    def potential(self, x):
        return 0.5 * np.sum(x * x, axis=-1)

    def field(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        if weights is None:
            bary = points.mean(axis=-2, keepdims=True)
        else:
            w = np.broadcast_to(weights, points.shape[:-1])
            bary = np.sum(points * w[..., None], axis=-2, keepdims=True)
        rel = points - bary
        x, xi = self.split(rel)
        return np.concatenate([xi, -x], axis=-1)

    def _params(self):
        return {"spatial_dim": self.spatial_dim}


@dataclass(frozen=True)
class SmoothedVlasovKernel(_VlasovKernel):
    """Vlasov kernel with a smooth even potential.

    ``potential="plummer"``: V(x) = strength / (4 pi sqrt(|x|^2 + eps^2)),
    a softened Coulomb repulsion; sup |Hess V| = |strength| / (4 pi eps^3).

    ``potential="gaussian"``: V(x) = strength * exp(-|x|^2 / (2 eps^2));
    sup |Hess V| = |strength| / eps^2.

    Both suprema are attained at x = 0. L = max(1, sup |Hess V|) because
    the xi-block of K is 1-Lipschitz and the two blocks are orthogonal.
    """

    potential_name: str = "plummer"
    eps: float = 1.0
    strength: float = 1.0
    dim: int = field(init=False)
    lipschitz: float = field(init=False)
    variant = "SmoothedVlasov"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.potential_name == "plummer":
            hess = abs(self.strength) / (4 * np.pi * self.eps**3)
        elif self.potential_name == "gaussian":
            hess = abs(self.strength) / self.eps**2
        else:
            raise ValueError(f"unknown potential {self.potential_name!r}")
        object.__setattr__(self, "dim", 2 * int(self.spatial_dim))
        object.__setattr__(self, "lipschitz", max(1.0, float(hess)))

    def potential(self, x):
        r2 = np.sum(x * x, axis=-1)
        if self.potential_name == "plummer":
            return self.strength / (4 * np.pi * np.sqrt(r2 + self.eps**2))
        return self.strength * np.exp(-r2 / (2 * self.eps**2))

    def grad_potential(self, x):
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        if self.potential_name == "plummer":
            return -self.strength * x / (4 * np.pi * (r2 + self.eps**2) ** 1.5)
        return -self.strength * x / self.eps**2 * np.exp(-r2 / (2 * self.eps**2))

    def _params(self):
        return {"spatial_dim": self.spatial_dim, "potential": self.potential_name,
                "eps": self.eps, "strength": self.strength}


_J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class SmoothedBiotSavartKernel(InteractionKernel):
    """K(z, z') = J (z - z') / (2 pi (|z - z'|^2 + eps^2)) on R^2.

    The Jacobian of w / (|w|^2 + eps^2) has eigenvalues 1/(r^2+eps^2) and
    (eps^2 - r^2)/(r^2+eps^2)^2, both bounded by 1/eps^2, so
    L = 1 / (2 pi eps^2).
    """

    eps: float = 1.0
    dim: int = field(init=False)
    lipschitz: float = field(init=False)
    variant = "SmoothedBiotSavart"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "dim", 2)
        object.__setattr__(self, "lipschitz", 1.0 / (2 * np.pi * self.eps**2))

    def _eval(self, z, zp):
        w = z - zp
        r2 = np.sum(w * w, axis=-1, keepdims=True)
        jw = np.stack([-w[..., 1], w[..., 0]], axis=-1)
        return jw / (2 * np.pi * (r2 + self.eps**2))

    def field(self, points, weights=None):
        points = np.asarray(points, dtype=float)
        w = _uniform_weights(points) if weights is None else np.broadcast_to(weights, points.shape[:-1])
        d0 = points[..., :, None, 0] - points[..., None, :, 0]
        d1 = points[..., :, None, 1] - points[..., None, :, 1]
        scale = w[..., None, :] / (2 * np.pi * (d0 * d0 + d1 * d1 + self.eps**2))
        return np.stack([-np.sum(d1 * scale, axis=-1), np.sum(d0 * scale, axis=-1)], axis=-1)

    def _params(self):
        return {"eps": self.eps}


def kernel_from_spec(spec):
    """Build a kernel from ``{"variant": ..., "params": {...}}``."""
    variant = spec["variant"]
    params = dict(spec.get("params", {}))
    if variant == "Zero":
        return ZeroKernel(dim=int(params.get("dim", 1)))
    if variant == "Linear":
        return LinearKernel(dim=int(params.get("dim", 1)), c=float(params.get("c", 1.0)))
    if variant == "HarmonicVlasov":
        return HarmonicVlasovKernel(spatial_dim=int(params.get("spatial_dim", 1)))
    if variant == "SmoothedVlasov":
        return SmoothedVlasovKernel(
            spatial_dim=int(params.get("spatial_dim", 1)),
            potential_name=params.get("potential", "plummer"),
            eps=float(params["eps"]),
            strength=float(params.get("strength", 1.0)),
        )
    if variant == "SmoothedBiotSavart":
        return SmoothedBiotSavartKernel(eps=float(params["eps"]))
    raise ValueError(f"unknown kernel variant {variant!r}")


def eval_kernel(kernel, z, zp):
    z = _as_points(z, kernel.dim)
    zp = _as_points(zp, kernel.dim)
    return kernel(z, zp)


def mean_field_force(kernel, mu, z):
    """Evaluate the mean field sum_i w_i K(z, p_i) of the measure ``mu`` at ``z``."""
    z = _as_points(z, kernel.dim)
    if mu.dim != kernel.dim:
        raise DimensionError(f"measure lives in R^{mu.dim}, kernel in R^{kernel.dim}")
    return kernel.field_at(z, mu.points, mu.weights)


def require_vlasov(kernel):
    if not kernel.is_vlasov:
        raise UnsupportedKernelError(f"{kernel.variant} kernel has no (x, xi) Hamiltonian structure")


@dataclass
class KernelReport:
    max_antisym_defect: float
    lipschitz_lb: float
    max_bound_ratio: float
    declared_lipschitz: float

    @property
    def ok(self):
        limit = self.declared_lipschitz * (1 + 1e-9)
        return (self.max_antisym_defect <= 1e-12
                and self.lipschitz_lb <= limit
                and self.max_bound_ratio <= limit)


def validate_kernel(kernel, samples, radius, seed):
    """Randomized check of antisymmetry, the Lipschitz condition and |K| <= L|z - z'|.

    Points are drawn uniformly from the cube ``[-radius, radius]^d``; half of
    the Lipschitz triples use a small perturbation ``z2 = z1 + delta`` so that
    local slopes near the steepest point are probed, not only secants.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = stream(seed)
    d = kernel.dim
    z = rng.uniform(-radius, radius, size=(samples, d))
    zp = rng.uniform(-radius, radius, size=(samples, d))
    z2 = rng.uniform(-radius, radius, size=(samples, d))
    half = samples // 2
    # perturbation length kept >= 5e-4 * radius so roundoff stays far below 1e-9
    step = rng.normal(size=(half, d))
    step /= np.linalg.norm(step, axis=-1, keepdims=True)
    z2[:half] = z[:half] + step * (1e-3 * radius * rng.uniform(0.5, 1.0, size=(half, 1)))
    # steepest points of the smoothed kernels sit at z = z'
    zp[: samples // 4] = z[: samples // 4] + rng.normal(scale=1e-4, size=(samples // 4, d))

    k1 = kernel(z, zp)
    defect = np.max(np.abs(k1 + kernel(zp, z)))
    dz = np.linalg.norm(z - z2, axis=-1)
    dk = np.linalg.norm(k1 - kernel(z2, zp), axis=-1)
    ok = dz > 0
    lip_lb = float(np.max(dk[ok] / dz[ok])) if ok.any() else 0.0
    sep = np.linalg.norm(z - zp, axis=-1)
    ok = sep > 0
    bound_ratio = float(np.max(np.linalg.norm(k1, axis=-1)[ok] / sep[ok])) if ok.any() else 0.0
    return KernelReport(float(defect), lip_lb, bound_ratio, float(kernel.lipschitz))
