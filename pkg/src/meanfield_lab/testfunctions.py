"""Bounded Lipschitz observables phi_m on (R^d)^m.

A :class:`TestFunctionM` evaluates on arrays of shape ``(..., m, d)`` and
returns ``(...)``. ``bound`` is sup |phi|, ``lip`` an upper bound for its
Lipschitz constant w.r.t. the Euclidean norm on R^{dm}. Smooth families
also carry an analytic gradient and ``grad_sup[k] = sup |d phi / d z_k|``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True, eq=False)
class TestFunctionM:
    __test__ = False  # not a pytest class

    name: str
    arity: int
    dim: int
    fn: Callable
    bound: float
    lip: float
    grad: Callable | None = None
    grad_sup: tuple | None = None

    def __call__(self, Z):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-2:] != (self.arity, self.dim):
            raise ValueError(f"{self.name} expects (..., {self.arity}, {self.dim}), got {Z.shape}")
        return self.fn(Z)


def one(m, d):
    return TestFunctionM("one", m, d, lambda Z: np.ones(Z.shape[:-2]), 1.0, 0.0,
                         grad=lambda Z: np.zeros_like(Z), grad_sup=(0.0,) * m)


def cosine_product(m, d, freq=None, phase=0.3):
    """prod_j cos(w . z_j + phase); Lipschitz constant |w|."""
    w = np.full(d, 1.0) if freq is None else np.asarray(freq, dtype=float)
    wn = float(np.linalg.norm(w))

    def fn(Z):
        return np.prod(np.cos(Z @ w + phase), axis=-1)

    def grad(Z):
        th = Z @ w + phase
        c, s = np.cos(th), np.sin(th)
        out = np.empty(Z.shape)
        for j in range(m):
            others = np.prod(np.delete(c, j, axis=-1), axis=-1) if m > 1 else 1.0
            out[..., j, :] = (-s[..., j] * others)[..., None] * w
        return out

    return TestFunctionM(f"cos{m}", m, d, fn, 1.0, wn, grad, (wn,) * m)


def clipped_quadratic_product(m, d, radius=2.0):
    """prod_j min(|z_j|^2, R^2) / R^2; each factor is (2/R)-Lipschitz and in [0, 1]."""
    R = float(radius)

    def fn(Z):
        return np.prod(np.minimum(np.sum(Z * Z, axis=-1), R * R) / (R * R), axis=-1)

    return TestFunctionM(f"clipquad{m}", m, d, fn, 1.0, np.sqrt(m) * 2.0 / R)


def clipped_norm(d, radius, r=1.0):
    """min(|z|, R)^r on R^d (arity 1)."""
    R = float(radius)

    def fn(Z):
        return np.minimum(np.linalg.norm(Z[..., 0, :], axis=-1), R) ** r

    return TestFunctionM(f"clipnorm{r:g}", 1, d, fn, R**r, r * R ** (r - 1))


def _bump(u2):
    out = np.zeros_like(u2)
    inside = u2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u2[inside]))
    return out


def _bump_slope_sup(radius):
    # |d/dr b(r/R)| = b * 2u / (R (1 - u^2)^2) with u = r / R
    def neg(u):
        return -np.exp(1.0 - 1.0 / (1.0 - u * u)) * 2.0 * u / (1.0 - u * u) ** 2

    res = minimize_scalar(neg, bounds=(1e-9, 1 - 1e-9), method="bounded", options={"xatol": 1e-12})
    return float(-res.fun) / radius


def bump_product(m, d, centers=None, radius=1.5):
    """prod_j b((z_j - c_j) / R) with the C^infinity bump b(u) = exp(1 - 1/(1 - |u|^2)), b(0) = 1."""
    R = float(radius)
    c = np.zeros((m, d)) if centers is None else np.asarray(centers, dtype=float).reshape(m, d)
    slope = _bump_slope_sup(R)

    def fn(Z):
        U = (Z - c) / R
        return np.prod(_bump(np.sum(U * U, axis=-1)), axis=-1)

    def grad(Z):
        U = (Z - c) / R
        u2 = np.sum(U * U, axis=-1)
        b = _bump(u2)
        inside = u2 < 1.0
        factor = np.zeros_like(u2)
        factor[inside] = -2.0 / (R * (1.0 - u2[inside]) ** 2)
        db = (b * factor)[..., None] * U
        out = np.empty(Z.shape)
        for j in range(m):
            others = np.prod(np.delete(b, j, axis=-1), axis=-1) if m > 1 else 1.0
            out[..., j, :] = db[..., j, :] * np.asarray(others)[..., None]
        return out

    return TestFunctionM(f"bump{m}", m, d, fn, 1.0, np.sqrt(m) * slope, grad, (slope,) * m)


def builtin_family(m, d):
    """The three standard phi_m used by the hierarchy checks."""
    return [cosine_product(m, d), clipped_quadratic_product(m, d), bump_product(m, d)]
