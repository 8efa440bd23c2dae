"""Monte-Carlo representation of the symmetric N-particle law P_N(t) and its marginals.

An :class:`Ensemble` holds S independent draws of Z_N. Expectations under
P_N(t) or its m-body marginal P_{N:m}(t) are sample means over the S draws;
every estimator returns ``(value, stderr)`` with the standard error of the
per-sample values.
"""

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import FlowParams, integrate_flow
from .errors import CapacityError, DimensionError, NumericalBlowUpError
from .rng import STREAM_SAMPLE, STREAM_STRATIFIED, STREAM_SUBSAMPLE, stream
from .transport import MAX_PAIRS, DiscreteMeasure, w1_exact

MAX_INJECTIONS = 120
MAX_ENUMERATED_MAPS = 1_000_000
STRATUM_DRAWS = 4096
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True, eq=False)
class Ensemble:
    samples: np.ndarray  # (S, N, d)
    seed: int = 0
    time: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 3:
            raise DimensionError("ensemble samples must have shape (S, N, d)")
        object.__setattr__(self, "samples", s)

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def n_particles(self):
        return self.samples.shape[1]

    @property
    def dim(self):
        return self.samples.shape[2]

    def pooled(self):
        """All N*S particle positions, a sample of the one-particle marginal."""
        return self.samples.reshape(-1, self.dim)

    def measures(self):
        return [DiscreteMeasure.empirical(z) for z in self.samples]

    def permuted(self, order):
        return replace(self, samples=self.samples[:, np.asarray(order), :])


def sample_product_ensemble(density, N, S, seed):
    """S independent draws of Z_N with i.i.d. coordinates from ``density``.

    Sample ``s`` uses its own stream ``(seed, STREAM_SAMPLE, s)``, so it does
    not depend on S.
    """
    if N < 1 or S < 1:
        raise ValueError("need N >= 1 and S >= 1")
    out = np.empty((S, N, density.dim))
    for s in range(S):
        out[s] = density.sample(stream(seed, STREAM_SAMPLE, s), N)
    return Ensemble(out, seed=seed, time=0.0)


def propagate_ensemble(ens, kernel, params):
    """Map every sample through the N-body flow; sample order is preserved."""
    if ens.dim != kernel.dim:
        raise DimensionError(f"ensemble in R^{ens.dim}, kernel in R^{kernel.dim}")
    try:
        out = integrate_flow(kernel, ens.samples, params)
    except NumericalBlowUpError as exc:
        raise NumericalBlowUpError(exc.step, exc.sample) from exc
    return Ensemble(out, seed=ens.seed, time=ens.time + float(params.t_final))


def combinatorial_prefactor(N, m):
    """(N!/((N-m)! N^m), m(m-1)/(2N)): the injective fraction of maps {1..m} -> {1..N} and its defect bound."""
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    log_frac = math.fsum(math.log1p(-i / N) for i in range(1, m))
    return math.exp(log_frac), m * (m - 1) / (2.0 * N)


def injections(N, m, cap=MAX_INJECTIONS):
    """Deterministic list of at most ``cap`` one-to-one maps {0..m-1} -> {0..N-1}.

    All of them (lexicographic) when there are at most ``cap``, and always
    for m = 1; otherwise strided cyclic maps k -> (r + k*stride) mod N,
    which use every particle index equally often.
    """
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    total = math.perm(N, m)
    if total <= cap or m == 1:
        return np.array(list(itertools.permutations(range(N), m)), dtype=np.intp).reshape(-1, m)
    maps, seen = [], set()
    stride = 1
    while len(maps) < cap and stride < N:
        for r in range(N):
            j = tuple((r + k * stride) % N for k in range(m))
            if len(set(j)) == m and j not in seen:
                seen.add(j)
                maps.append(j)
                if len(maps) == cap:
                    break
        stride += 1
    for j in itertools.permutations(range(N), m):
        if len(maps) == cap:
            break
        if j not in seen:
            seen.add(j)
            maps.append(j)
    return np.array(maps, dtype=np.intp)


def _check_arity(ens, phi):
    m = phi.arity
    if m > ens.n_particles:
        raise ValueError(f"arity m={m} exceeds N={ens.n_particles}")
    if phi.dim != ens.dim:
        raise DimensionError("test function and ensemble dimensions differ")
    return m


def _apply_maps(samples, maps, phi, reducer):
    """reducer(phi values of shape (chunk, n_maps)) for every sample, chunked over samples."""
    S = samples.shape[0]
    n_maps, m = maps.shape
    chunk = max(1, _CHUNK_ELEMENTS // max(1, n_maps * m * samples.shape[2]))
    parts = []
    for start in range(0, S, chunk):
        block = samples[start:start + chunk][:, maps, :]
        parts.append(reducer(phi(block)))
    return np.concatenate(parts)


def _stats(per_sample):
    S = per_sample.shape[0]
    value = float(np.mean(per_sample))
    err = float(np.std(per_sample, ddof=1) / math.sqrt(S)) if S > 1 else float("nan")
    return value, err


def marginal_per_sample(ens, phi):
    m = _check_arity(ens, phi)
    maps = injections(ens.n_particles, m)
    return _apply_maps(ens.samples, maps, phi, lambda v: v.mean(axis=1))


def marginal_pair(ens, phi):
    """Estimate <P_{N:m}(t), phi> = E[phi(z_1, ..., z_m)], symmetrized over fixed injections."""
    return _stats(marginal_per_sample(ens, phi))


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _distinct_rows(rng, N, shape):
    draws = rng.integers(0, N, size=shape)
    while True:
        s = np.sort(draws, axis=-1)
        bad = (np.diff(s, axis=-1) == 0).any(axis=-1)
        if not bad.any():
            return draws
        draws[bad] = rng.integers(0, N, size=(int(bad.sum()), shape[-1]))


def map_sums(ens, phi, seed=0):
    """Per-sample sums of phi(z_{j(1)}, ..., z_{j(m)}) over injective maps J and non-injective maps G.

    Exact enumeration of all N^m maps when N^m <= 1e6. Otherwise the maps
    are stratified by their collision pattern (the set partition of
    {1..m} induced by j); each stratum with b blocks holds N!/(N-b)! maps and
    its sum is enumerated when small, else estimated from
    ``STRATUM_DRAWS`` uniformly drawn maps per sample.
    """
    m = _check_arity(ens, phi)
    N = ens.n_particles
    if N**m <= MAX_ENUMERATED_MAPS:
        maps = np.indices((N,) * m).reshape(m, -1).T
        inj = np.array([len(set(r)) == m for r in maps.tolist()]) if m > 1 else np.ones(len(maps), bool)
        sum_j = _apply_maps(ens.samples, maps[inj], phi, lambda v: v.sum(axis=1))
        if inj.all():
            sum_g = np.zeros(ens.n_samples)
        else:
            sum_g = _apply_maps(ens.samples, maps[~inj], phi, lambda v: v.sum(axis=1))
        return sum_j, sum_g

    rng = stream(seed, STREAM_STRATIFIED)
    sum_j = np.zeros(ens.n_samples)
    sum_g = np.zeros(ens.n_samples)
    for part in _set_partitions(list(range(m))):
        b = len(part)
        block_of = np.empty(m, dtype=np.intp)
        for i, block in enumerate(part):
            block_of[block] = i
        count = math.perm(N, b)
        if count <= STRATUM_DRAWS:
            base = np.array(list(itertools.permutations(range(N), b)), dtype=np.intp)
            stratum = _apply_maps(ens.samples, base[:, block_of], phi, lambda v: v.sum(axis=1))
        else:
            stratum = np.empty(ens.n_samples)
            for s in range(ens.n_samples):
                base = _distinct_rows(rng, N, (STRATUM_DRAWS, b))
                vals = phi(ens.samples[s][base[:, block_of]])
                stratum[s] = count * vals.mean()
        if b == m:
            sum_j += stratum
        else:
            sum_g += stratum
    return sum_j, sum_g


def tensorized_empirical_pair(ens, phi):
    """Estimate < integral of mu_{Z}^{(x)m} P_N(t, dZ), phi > = E[(1/N^m) sum_{j in F(m,N)} phi(z_j)]."""
    m = _check_arity(ens, phi)
    if m == 1:
        # F(1, N) = J(1, N): the same average as the marginal estimator
        return marginal_pair(ens, phi)
    sum_j, sum_g = map_sums(ens, phi, seed=ens.seed)
    return _stats((sum_j + sum_g) / float(ens.n_particles) ** m)


@dataclass
class IdentityCheck:
    N: int
    m: int
    phi_id: str
    lhs: float
    rhs: float
    defect: float
    prefactor: float
    sigma: float

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)

    @property
    def ok(self):
        return self.residual <= 3.0 * self.sigma + 1e-15


def hierarchy_identity(ens, phi):
    """Compare the tensorized empirical average with prefactor * <P_{N:m}, phi> + <R_{N,m}, phi>.

    ``sigma`` combines the three Monte-Carlo standard errors in quadrature.
    """
    m = _check_arity(ens, phi)
    N = ens.n_particles
    scale = float(N) ** m
    sum_j, sum_g = map_sums(ens, phi, seed=ens.seed)
    lhs, se_lhs = _stats((sum_j + sum_g) / scale)
    marg, se_marg = marginal_pair(ens, phi)
    defect, se_def = _stats(sum_g / scale)
    pref, _ = combinatorial_prefactor(N, m)
    sigma = math.sqrt(se_lhs**2 + (pref * se_marg) ** 2 + se_def**2)
    return IdentityCheck(N, m, phi.name, lhs, pref * marg + defect, defect, pref, sigma)


def reference_measure(density, kernel, t, n_ref, dt=None, quantized=True, seed=0):
    """Particle proxy of f(t) L^d: n_ref atoms of f^in (quantiles in d=1, else samples) moved by the n_ref-body flow."""
    from .densities import quantize, sample_measure

    if quantized and density.dim == 1:
        mu0 = quantize(density, n_ref)
    else:
        mu0 = sample_measure(density, n_ref, stream(seed, STREAM_SUBSAMPLE, n_ref))
    pts = integrate_flow(kernel, mu0.points, FlowParams(t_final=t, dt=dt))
    return DiscreteMeasure.empirical(pts)


def chaoticity_distance(ens, reference, seed=0):
    """W1 between the pooled one-particle cloud of ``ens`` and ``reference``.

    In d > 1 the pooled cloud is subsampled (seeded, without replacement)
    until the cost matrix fits the exact solver.
    """
    pooled = ens.pooled()
    if reference.dim != ens.dim:
        raise DimensionError("reference and ensemble dimensions differ")
    if ens.dim > 1 and pooled.shape[0] * reference.size > MAX_PAIRS:
        keep = MAX_PAIRS // reference.size
        if keep < 1:
            raise CapacityError("reference measure alone exceeds solver capacity")
        rng = stream(seed, STREAM_SUBSAMPLE)
        pooled = pooled[np.sort(rng.choice(pooled.shape[0], keep, replace=False))]
    return w1_exact(DiscreteMeasure.empirical(pooled), reference)[0]


def loglog_slope(ns, values):
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class ChaosStudy:
    rows: list
    constant: float
    slope: float
    proxy_error: float

    @property
    def bound_holds(self):
        return all(r["distance"] <= r["bound_rhs"] * (1 + 1e-12) for r in self.rows)


def chaoticity_study(kernel, density, N_list, t, pooled, seed, n_ref=None, dt=None, batches=8):
    """Measure dist_MK,1(P_{N:1}(t), f(t)) for each N with S = ceil(pooled / N) samples.

    The rate constant is calibrated at the smallest N so that
    ``bound_rhs = C e^{2L|t|} N^{-1/(d+4)}`` equals the measured distance
    there. ``stderr`` is the spread of the distance over ``batches``
    disjoint groups of samples.
    """
    N_list = sorted(int(n) for n in N_list)
    d = density.dim
    n_ref = n_ref or 64 * N_list[-1]
    params = FlowParams(t_final=t, dt=dt)
    ref = reference_measure(density, kernel, t, n_ref, dt=dt, seed=seed)
    ref2 = reference_measure(density, kernel, t, 2 * n_ref, dt=dt, seed=seed)
    proxy_error = w1_exact(ref, ref2)[0]
    growth = math.exp(2 * kernel.lipschitz * abs(t))
    rows = []
    for N in N_list:
        S = max(batches, -(-pooled // N))
        ens = propagate_ensemble(sample_product_ensemble(density, N, S, seed), kernel, params)
        dist = chaoticity_distance(ens, ref, seed=seed)
        groups = np.array_split(np.arange(S), batches)
        parts = [chaoticity_distance(Ensemble(ens.samples[g]), ref, seed=seed) for g in groups]
        stderr = float(np.std(parts, ddof=1) / math.sqrt(batches))
        rows.append({"N": N, "S": S, "t": float(t), "distance": dist, "stderr": stderr})
    n0 = rows[0]
    constant = n0["distance"] * n0["N"] ** (1.0 / (d + 4)) / growth
    for r in rows:
        r["bound_rhs"] = constant * growth / r["N"] ** (1.0 / (d + 4))
    slope = loglog_slope([r["N"] for r in rows], [r["distance"] for r in rows])
    return ChaosStudy(rows, constant, slope, proxy_error)
