"""Exact Monge-Kantorovich-1 (Wasserstein-1) distances between discrete measures.

Ground cost is the Euclidean distance on R^d (and on R^{dm} for product
measures). Routing in :func:`w1_exact`:

* two uniform clouds of equal size -> assignment problem (Hungarian,
  ``scipy.optimize.linear_sum_assignment``);
* anything else -> transportation LP by network simplex (POT's ``emd``),
  certified afterwards by complementary slackness on its dual potentials;
* d = 1 with more than ``MAX_PAIRS`` cost entries -> the monotone
  (north-west corner on sorted supports) coupling, which is optimal on the
  line and needs no cost matrix.

The brute-force and quantile routines at the bottom are independent
oracles for the solvers above.
"""

import csv
import itertools
import math
import os
import sys
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import CapacityError, DimensionError, TransportSolverError
from .rng import STREAM_TEST_FUNCTION, stream

MAX_PAIRS = 4_000_000
MAX_TENSOR_ATOMS = 100_000
CERT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite weighted point cloud sum_i w_i delta_{p_i} in R^d."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 2 or w.shape != (p.shape[0],):
            raise DimensionError(f"points {p.shape} and weights {w.shape} do not match")
        if p.shape[0] == 0:
            raise ValueError("empty measure")
        if not np.isfinite(p).all():
            raise ValueError("points must be finite")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        p.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empirical(cls, points):
        """Uniform measure (1/N) sum_k delta_{z_k}."""
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        return cls(p, np.full(p.shape[0], 1.0 / p.shape[0]))

    @classmethod
    def dirac(cls, point):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), np.ones(1))

    @classmethod
    def normalized(cls, points, weights):
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum())

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def is_uniform(self):
        return bool(np.all(self.weights == self.weights[0]))

    def mean(self):
        return self.weights @ self.points

    def moment(self, r=1.0):
        return float(self.weights @ np.linalg.norm(self.points, axis=1) ** r)

    def integrate(self, phi):
        """<mu, phi> for a function acting on arrays of shape (n, d)."""
        return float(self.weights @ np.asarray(phi(self.points), dtype=float))

    def mixture(self, other, theta):
        """(1 - theta) * self + theta * other."""
        _same_dim(self, other)
        pts = np.vstack([self.points, other.points])
        w = np.concatenate([(1 - theta) * self.weights, theta * other.weights])
        return DiscreteMeasure.normalized(pts, w)

    def permuted(self, order):
        order = np.asarray(order)
        return DiscreteMeasure(self.points[order], self.weights[order])


@dataclass(frozen=True)
class TransportPlan:
    source_idx: np.ndarray
    target_idx: np.ndarray
    mass: np.ndarray
    cost: float

    def marginals(self, n, m):
        a = np.bincount(self.source_idx, weights=self.mass, minlength=n)
        b = np.bincount(self.target_idx, weights=self.mass, minlength=m)
        return a, b


def _same_dim(mu, nu):
    if mu.dim != nu.dim:
        raise DimensionError(f"dimension mismatch: {mu.dim} vs {nu.dim}")


def _load_emd():
    # keep POT from importing torch/jax/tensorflow just to probe backends
    if "ot" not in sys.modules:
        for name in ("PYTORCH", "JAX", "CUPY", "TENSORFLOW"):
            os.environ.setdefault(f"POT_BACKEND_DISABLE_{name}", "1")
    import ot

    return ot.emd


def _assignment(cost):
    n = cost.shape[0]
    rows, cols = linear_sum_assignment(cost)
    mass = np.full(n, 1.0 / n)
    total = math.fsum(cost[rows, cols]) / n
    return total, TransportPlan(rows, cols, mass, total)


def _network_simplex(a, b, cost):
    emd = _load_emd()
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    b = b * (a.sum() / b.sum())
    cost = np.ascontiguousarray(cost, dtype=float)
    plan, log = emd(a, b, cost, numItermax=10_000_000, log=True)
    if log.get("result_code", 1) != 1:
        raise TransportSolverError(f"network simplex did not reach optimality: {log.get('warning')}")
    u, v = np.asarray(log["u"]), np.asarray(log["v"])
    rows, cols = np.nonzero(plan > 0)
    mass = plan[rows, cols]
    total = math.fsum(mass * cost[rows, cols])
    _certify(a, b, cost, rows, cols, total, u, v)
    return total, TransportPlan(rows, cols, mass, total)


def _certify(a, b, cost, rows, cols, total, u, v):
    """Complementary slackness: dual feasibility, zero reduced cost on the plan, no duality gap."""
    scale = 1.0 + float(np.max(np.abs(cost)))
    reduced = cost - u[:, None] - v[None, :]
    if reduced.min() < -CERT_TOL * scale:
        raise TransportSolverError(f"dual infeasible by {-reduced.min():.3e}")
    if len(rows) and np.abs(reduced[rows, cols]).max() > CERT_TOL * scale:
        raise TransportSolverError("positive reduced cost on a transported pair")
    dual = math.fsum(a * u) + math.fsum(b * v)
    if abs(dual - total) > CERT_TOL * scale:
        raise TransportSolverError(f"duality gap {abs(dual - total):.3e}")


def _monotone_1d(x, a, y, b):
    """North-west corner rule on sorted supports: the optimal coupling on the line."""
    ix = np.argsort(x, kind="stable")
    iy = np.argsort(y, kind="stable")
    ca = np.cumsum(a[ix])
    cb = np.cumsum(b[iy])
    ca[-1] = cb[-1] = 1.0
    cuts = np.union1d(ca, cb)
    cuts = cuts[cuts > 0]
    lo = np.concatenate([[0.0], cuts[:-1]])
    mass = cuts - lo
    keep = mass > 0
    mid = 0.5 * (lo + cuts)[keep]
    si = ix[np.minimum(np.searchsorted(ca, mid), len(ca) - 1)]
    ti = iy[np.minimum(np.searchsorted(cb, mid), len(cb) - 1)]
    mass = mass[keep]
    total = math.fsum(mass * np.abs(x[si] - y[ti]))
    return total, TransportPlan(si, ti, mass, total)


def solve_transport(a, b, cost):
    """Optimal transport between weight vectors ``a`` (n) and ``b`` (m) with ground cost ``cost`` (n x m)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (a.size, b.size):
        raise DimensionError(f"cost shape {cost.shape} vs marginals {a.size}, {b.size}")
    if abs(a.sum() - b.sum()) > 1e-9:
        raise ValueError(f"total masses differ: {a.sum()} vs {b.sum()}")
    if a.size * b.size > MAX_PAIRS:
        raise CapacityError(f"{a.size} x {b.size} transport problem exceeds {MAX_PAIRS} pairs")
    if a.size == b.size and np.all(a == a[0]) and np.all(b == a[0]):
        return _assignment(cost)
    return _network_simplex(a, b, cost)


def w1_exact(mu, nu):
    """dist_MK,1(mu, nu) and an optimal plan."""
    _same_dim(mu, nu)
    if mu.size * nu.size > MAX_PAIRS:
        if mu.dim != 1:
            raise CapacityError(f"{mu.size} x {nu.size} supports exceed {MAX_PAIRS} pairs in d={mu.dim}")
        return _monotone_1d(mu.points[:, 0], mu.weights, nu.points[:, 0], nu.weights)
    cost = cdist(mu.points, nu.points)
    return solve_transport(mu.weights, nu.weights, cost)


def w1(mu, nu):
    return w1_exact(mu, nu)[0]


def w1_sorted_1d(mu, nu):
    """W1 on the line as the L1 distance between quantile functions."""
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionError("w1_sorted_1d needs d = 1")

    def quantile_steps(m):
        order = np.argsort(m.points[:, 0], kind="stable")
        return np.cumsum(m.weights[order]), m.points[order, 0]

    ca, xa = quantile_steps(mu)
    cb, xb = quantile_steps(nu)
    levels = np.unique(np.concatenate([ca, cb, [1.0]]))
    levels = levels[levels <= 1.0]
    prev = np.concatenate([[0.0], levels[:-1]])
    width = levels - prev
    mid = 0.5 * (levels + prev)
    qa = xa[np.minimum(np.searchsorted(ca, mid, side="left"), len(xa) - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, mid, side="left"), len(xb) - 1)]
    return math.fsum(width * np.abs(qa - qb))


def w1_brute_force(mu, nu):
    """Minimum over all n! matchings between two uniform clouds of equal size n <= 7."""
    _same_dim(mu, nu)
    n = mu.size
    if nu.size != n or not (mu.is_uniform and nu.is_uniform):
        raise ValueError("brute force needs two uniform measures of equal size")
    if n > 7:
        raise ValueError("brute force limited to n <= 7")
    cost = np.linalg.norm(mu.points[:, None, :] - nu.points[None, :, :], axis=-1)
    best = math.inf
    idx = np.arange(n)
    for perm in itertools.permutations(range(n)):
        best = min(best, math.fsum(cost[idx, list(perm)]))
    return best / n


@dataclass(frozen=True)
class LipschitzTestFunction:
    """phi(z) = min_i (offsets_i + |z - anchors_i|); 1-Lipschitz by construction."""

    anchors: np.ndarray
    offsets: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        dist = np.linalg.norm(z[..., None, :] - self.anchors, axis=-1)
        return np.min(self.offsets + dist, axis=-1)


def _gap(mu, nu, phi):
    return abs(mu.integrate(phi) - nu.integrate(phi))


def w1_dual_lb(mu, nu, trials, seed):
    """Kantorovich-Rubinstein lower bound: best |<mu - nu, phi>| over sampled 1-Lipschitz phi.

    Candidates are the single cones |z - p| at every support point (capped
    at 256 points) and ``trials`` random min-of-cones functions anchored on
    the joint support with random offsets.
    """
    _same_dim(mu, nu)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = stream(seed, STREAM_TEST_FUNCTION)
    support = np.vstack([mu.points, nu.points])
    cones = support if len(support) <= 256 else support[rng.choice(len(support), 256, replace=False)]
    best = 0.0
    for p in cones:
        best = max(best, _gap(mu, nu, LipschitzTestFunction(p[None, :], np.zeros(1))))
    spread = float(np.ptp(support, axis=0).max()) or 1.0
    for _ in range(trials):
        k = int(rng.integers(1, min(len(support), 16) + 1))
        anchors = support[rng.choice(len(support), k, replace=False)]
        offsets = rng.uniform(0.0, spread, size=k)
        best = max(best, _gap(mu, nu, LipschitzTestFunction(anchors, offsets)))
    return best


def product_measure(mu, nu):
    """mu (x) nu on R^{d_mu + d_nu}, atoms ordered with the mu index slowest."""
    if mu.size * nu.size > MAX_TENSOR_ATOMS:
        raise CapacityError("product measure too large")
    pts = np.hstack([np.repeat(mu.points, nu.size, axis=0), np.tile(nu.points, (mu.size, 1))])
    w = np.outer(mu.weights, nu.weights).ravel()
    return DiscreteMeasure.normalized(pts, w)


def tensor_power(mu, m):
    if m < 1:
        raise ValueError("m must be >= 1")
    if mu.size**m > MAX_TENSOR_ATOMS:
        raise CapacityError(f"{mu.size}^{m} atoms exceed {MAX_TENSOR_ATOMS}")
    out = mu
    for _ in range(m - 1):
        out = product_measure(out, mu)
    return out


def marginal(mu, block, d):
    """Push-forward of a product-space measure onto coordinate block ``block`` of width ``d``."""
    pts = mu.points[:, block * d:(block + 1) * d]
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=mu.weights, minlength=len(uniq))
    return DiscreteMeasure.normalized(uniq, w)


def read_point_cloud(path):
    """Read a CSV with header ``weight,z1,...,zd``; weights are normalized unless they already sum to 1."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if header[0] != "weight" or header[1:] != [f"z{i + 1}" for i in range(d)]:
        raise ValueError(f"{path}: expected header weight,z1,...,zd; got {','.join(header)}")
    body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    w = body[:, 0]
    if abs(w.sum() - 1.0) <= 1e-12 and (w >= 0).all():
        return DiscreteMeasure(body[:, 1:], w)
    return DiscreteMeasure.normalized(body[:, 1:], w)


def write_point_cloud(path, mu):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["weight"] + [f"z{i + 1}" for i in range(mu.dim)])
        for w, p in zip(mu.weights, mu.points):
            out.writerow([repr(float(w))] + [repr(float(v)) for v in p])


def write_plan(path, plan):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["source_idx", "target_idx", "mass"])
        for i, j, m in zip(plan.source_idx, plan.target_idx, plan.mass):
            out.writerow([int(i), int(j), repr(float(m))])
