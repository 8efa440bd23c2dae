"""Laws on measures: finite weighted ensembles of discrete measures.

A :class:`MeasureEnsemble` stands for P in P_1(P_1(R^d)). The nested
distance between two ensembles is the optimal transport cost between their
member lists, the ground cost being the inner W1 between members.
"""

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .densities import GaussianMixture
from .dynamics import integrate_flow
from .errors import CapacityError, DimensionError, NumericalBlowUpError
from .hierarchy import Ensemble
from .parallel import pmap
from .rng import STREAM_MEMBER_DRAW, STREAM_MEMBER_PICK, STREAM_SAMPLE, stream
from .transport import DiscreteMeasure, read_point_cloud, solve_transport, w1_exact, write_point_cloud

MAX_MEMBERS = 256


@dataclass(frozen=True, eq=False)
class MeasureEnsemble:
    members: tuple
    weights: np.ndarray
    seed: int = 0
    time: float = 0.0

    def __post_init__(self):
        members = tuple(self.members)
        w = np.asarray(self.weights, dtype=float)
        if not members:
            raise ValueError("ensemble needs at least one member")
        if w.shape != (len(members),):
            raise DimensionError("one weight per member required")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("member weights must be non-negative and sum to 1")
        if len({m.dim for m in members}) != 1:
            raise DimensionError("all members must share a dimension")
        w.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, members, seed=0, time=0.0):
        members = tuple(members)
        return cls(members, np.full(len(members), 1.0 / len(members)), seed, time)

    @classmethod
    def from_ensemble(cls, ens):
        """The law of the empirical measure mu_{Z_N}, one equally weighted member per sample."""
        return cls.uniform([DiscreteMeasure.empirical(z) for z in ens.samples], ens.seed, ens.time)

    @property
    def dim(self):
        return self.members[0].dim

    def __len__(self):
        return len(self.members)

    def save(self, directory):
        """Member clouds as ``member_XXXX.csv`` plus ``manifest.json`` with weights, seed and time."""
        os.makedirs(directory, exist_ok=True)
        names = []
        for i, m in enumerate(self.members):
            name = f"member_{i:04d}.csv"
            write_point_cloud(os.path.join(directory, name), m)
            names.append(name)
        manifest = {"members": names, "weights": [repr(float(w)) for w in self.weights],
                    "seed": self.seed, "time": repr(float(self.time))}
        with open(os.path.join(directory, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "manifest.json")) as fh:
            manifest = json.load(fh)
        members = [read_point_cloud(os.path.join(directory, n)) for n in manifest["members"]]
        w = np.array([float(x) for x in manifest["weights"]])
        if abs(w.sum() - 1.0) > 1e-12:
            w = w / w.sum()
        return cls(members, w, int(manifest["seed"]), float(manifest["time"]))


def _check_pair(P, Q):
    if P.dim != Q.dim:
        raise DimensionError(f"ensembles live in R^{P.dim} and R^{Q.dim}")
    if len(P) > MAX_MEMBERS or len(Q) > MAX_MEMBERS:
        raise CapacityError(f"nested distance limited to {MAX_MEMBERS} members per ensemble")


def inner_cost_matrix(P, Q):
    """D[i, j] = W1(P.members[i], Q.members[j]), rows computed in parallel."""
    _check_pair(P, Q)

    def row(mu):
        return [w1_exact(mu, nu)[0] for nu in Q.members]

    return np.array(pmap(row, P.members), dtype=float)


def nested_w1(P, Q):
    """Finite-ensemble estimate of the nested Monge-Kantorovich distance between P and Q."""
    D = inner_cost_matrix(P, Q)
    return solve_transport(P.weights, Q.weights, D)[0]


def statistical_pushforward(P, kernel, params):
    """Advance every member as its own weighted particle system; member weights are kept.

    Equal-size uniform members are integrated as one batch.
    """
    if P.dim != kernel.dim:
        raise DimensionError(f"ensemble in R^{P.dim}, kernel in R^{kernel.dim}")
    sizes = {m.size for m in P.members}
    if len(sizes) == 1 and all(m.is_uniform for m in P.members):
        batch = np.stack([m.points for m in P.members])
        try:
            out = integrate_flow(kernel, batch, params)
        except NumericalBlowUpError as exc:
            raise NumericalBlowUpError(exc.step, exc.sample) from exc
        moved = [DiscreteMeasure(p, m.weights) for p, m in zip(out, P.members)]
    else:
        def advance(item):
            i, m = item
            try:
                return DiscreteMeasure(integrate_flow(kernel, m.points, params, weights=m.weights), m.weights)
            except NumericalBlowUpError as exc:
                raise NumericalBlowUpError(exc.step, i) from exc

        moved = pmap(advance, enumerate(P.members))
    return MeasureEnsemble(moved, P.weights, P.seed, P.time + float(params.t_final))


def qn_projection(P, N, S_per_member, seed):
    """Samples of Q_N = integral of f^{(x)N} P(df): pick a member by weight, then N i.i.d. atoms from it.

    ``S_per_member * len(P)`` draws in total. Member picks come from their
    own stream, independent of N, so projections at different N share the
    same member sequence.
    """
    if N < 1 or S_per_member < 1:
        raise ValueError("need N >= 1 and S_per_member >= 1")
    S = S_per_member * len(P)
    picks = stream(seed, STREAM_MEMBER_PICK).choice(len(P), size=S, p=P.weights)
    out = np.empty((S, N, P.dim))
    for s, j in enumerate(picks):
        member = P.members[j]
        rng = stream(seed, STREAM_MEMBER_DRAW, s)
        out[s] = member.points[rng.choice(member.size, size=N, p=member.weights)]
    return Ensemble(out, seed=seed, time=P.time)


def random_mixture_ensemble(M, n_points, dim, seed, n_components=2, spread=1.0, scale=0.5):
    """M equally weighted members; member i is an n_points sample of a random Gaussian mixture."""
    members = []
    for i in range(M):
        rng = stream(seed, STREAM_SAMPLE, i)
        means = rng.normal(0.0, spread, size=(n_components, dim))
        sds = scale * rng.uniform(0.5, 1.5, size=n_components)
        mix = GaussianMixture.from_arrays(rng.dirichlet(np.ones(n_components)), means,
                                          [s * s * np.eye(dim) for s in sds])
        members.append(DiscreteMeasure.empirical(mix.sample(rng, n_points)))
    return MeasureEnsemble.uniform(members, seed=seed)


def translated(P, shift):
    shift = np.asarray(shift, dtype=float)
    return MeasureEnsemble([DiscreteMeasure(m.points + shift, m.weights) for m in P.members],
                           P.weights, P.seed, P.time)


@dataclass
class StabilityReport:
    dist0: float
    dist_t: float
    bound: float
    tol: float
    t: float
    passed: bool

    def to_json(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def nested_stability_check(P0, Q0, kernel, t, params, tol=0.05, dist0=None):
    """Compare nested_w1 of the pushforwards at t with e^{2L|t|} times the initial nested distance.

    Both distances are solved from scratch; the initial optimal coupling is
    not reused. A precomputed ``dist0`` may be passed when sweeping t.
    """
    p = params.with_t(t)
    if dist0 is None:
        dist0 = nested_w1(P0, Q0)
    dist_t = nested_w1(statistical_pushforward(P0, kernel, p), statistical_pushforward(Q0, kernel, p))
    bound = math.exp(2.0 * kernel.lipschitz * abs(t)) * dist0
    ok = dist_t <= bound * (1.0 + tol) + 1e-12
    return StabilityReport(dist0, dist_t, bound, tol, float(t), bool(ok))


def limit_gap(P, kernel, params, N, S_per_member, seed):
    """nested_w1 between V_t#P and the law of mu_{Z_N(t)} started from Q_N.

    Shrinks as N grows when the N-particle laws built from P approach the
    statistical solution.
    """
    ens = qn_projection(P, N, S_per_member, seed)
    moved = integrate_flow(kernel, ens.samples, params)
    approx = MeasureEnsemble.from_ensemble(Ensemble(moved, seed, P.time + float(params.t_final)))
    return nested_w1(approx, statistical_pushforward(P, kernel, params))
