"""Initial one-particle densities f^in: Gaussian, Gaussian mixture, uniform box.

All three have finite moments of every order, in particular the (d+5)-th
moment needed for the chaoticity rate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .transport import DiscreteMeasure


def _sqrt_psd(cov):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
        raise ValueError("covariance must be a symmetric square matrix")
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -1e-12 * max(1.0, vals.max()):
        raise ValueError("covariance must be positive semi-definite")
    return vecs * np.sqrt(np.clip(vals, 0, None))


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0:
            cov = cov * np.eye(mean.size)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("mean and covariance shapes disagree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_root", _sqrt_psd(cov))

    @property
    def dim(self):
        return self.mean.size

    def sample(self, rng, size):
        g = rng.standard_normal(size=(size, self.dim))
        return self.mean + g @ self._root.T

    def cdf_1d(self, x):
        return ndtr((x - self.mean[0]) / np.sqrt(self.cov[0, 0]))

    def quantile_1d(self, q):
        return self.mean[0] + np.sqrt(self.cov[0, 0]) * ndtri(q)

    def spec(self):
        return {"type": "Gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components) or (w < 0).any() or w.sum() <= 0:
            raise ValueError("mixture weights must be non-negative, one per component")
        if len({c.dim for c in self.components}) != 1:
            raise ValueError("mixture components must share a dimension")
        object.__setattr__(self, "weights", w / w.sum())

    @classmethod
    def from_arrays(cls, weights, means, covs):
        return cls(weights, tuple(Gaussian(m, c) for m, c in zip(means, covs)))

    @property
    def dim(self):
        return self.components[0].dim

    def sample(self, rng, size):
        labels = rng.choice(len(self.weights), size=size, p=self.weights)
        g = rng.standard_normal(size=(size, self.dim))
        out = np.empty((size, self.dim))
        for j, comp in enumerate(self.components):
            sel = labels == j
            out[sel] = comp.mean + g[sel] @ comp._root.T
        return out

    def cdf_1d(self, x):
        return sum(w * c.cdf_1d(x) for w, c in zip(self.weights, self.components))

    def quantile_1d(self, q):
        q = np.asarray(q, dtype=float)
        sds = [np.sqrt(c.cov[0, 0]) for c in self.components]
        lo = np.full(q.shape, min(c.mean[0] - 40 * s for c, s in zip(self.components, sds)))
        hi = np.full(q.shape, max(c.mean[0] + 40 * s for c, s in zip(self.components, sds)))
        # bisection to full double resolution
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            below = self.cdf_1d(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def spec(self):
        return {"type": "GaussianMixture", "weights": self.weights.tolist(),
                "means": [c.mean.tolist() for c in self.components],
                "covs": [c.cov.tolist() for c in self.components]}


@dataclass(frozen=True, eq=False)
class Uniform:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.low, dtype=float))
        high = np.atleast_1d(np.asarray(self.high, dtype=float))
        if low.shape != high.shape or (high < low).any():
            raise ValueError("need low <= high componentwise")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def dim(self):
        return self.low.size

    def sample(self, rng, size):
        return self.low + (self.high - self.low) * rng.random(size=(size, self.dim))

    def quantile_1d(self, q):
        return self.low[0] + (self.high[0] - self.low[0]) * np.asarray(q)

    def spec(self):
        return {"type": "Uniform", "low": self.low.tolist(), "high": self.high.tolist()}


def density_from_spec(spec):
    kind = spec.get("type")
    if kind == "Gaussian":
        return Gaussian(spec["mean"], spec["cov"])
    if kind == "GaussianMixture":
        return GaussianMixture.from_arrays(spec["weights"], spec["means"], spec["covs"])
    if kind == "Uniform":
        return Uniform(spec["low"], spec["high"])
    raise ValueError(f"unknown density type {kind!r}")


def quantize(density, n):
    """Deterministic n-point proxy of a 1-D density: atoms at the (i + 1/2)/n quantiles."""
    if density.dim != 1:
        raise ValueError("quantile quantization is only defined for d = 1")
    levels = (np.arange(n) + 0.5) / n
    return DiscreteMeasure.empirical(density.quantile_1d(levels)[:, None])


def sample_measure(density, n, rng):
    return DiscreteMeasure.empirical(density.sample(rng, n))
