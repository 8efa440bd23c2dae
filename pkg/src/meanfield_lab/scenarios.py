"""Scenario runners behind ``meanfield-lab run``.

Each runner takes a validated config dict and returns a
:class:`ScenarioResult`: a CSV table, a JSON-able report and the overall
pass flag. Pass criteria are decided here, never by the caller.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import densities, ensembles, hierarchy, kernels, spohn, testfunctions, transport
from .dynamics import FlowParams, integrate_flow
from .rng import STREAM_SCENARIO, child_seed, stream


@dataclass
class ScenarioResult:
    header: list
    rows: list
    report: dict = field(default_factory=dict)
    passed: bool = True


SCENARIOS = {
    "dobrushin": "Dobrushin stability: W1 between two evolved empirical measures grows at most by e^{2L|t|}",
    "chaos": "chaoticity estimate: W1(P_{N:1}(t), f(t)) decays at least like N^{-1/(d+4)}",
    "hierarchy-identity": "tensorized empirical measures vs marginals: exact combinatorial identity with defect m(m-1)/(2N)",
    "nested-stability": "stability of the BBGKY hierarchy / statistical solutions in the nested MK-1 distance",
    "qn-convergence": "Q_N = integral of f^{(x)N} Q(df) approaches Q, and N-body laws approach V_t#P",
    "spohn-jacobian": "Jacobian growth bounds for the N-body flow and the L_n generator identity (Spohn uniqueness)",
    "w1-selftest": "exact MK-1 solver against brute force, quantile and duality oracles",
}


def _kernel(cfg, default):
    return kernels.kernel_from_spec(cfg.get("kernel", default))


def _density(cfg, dim):
    if "density" in cfg:
        dens = densities.density_from_spec(cfg["density"])
        if dens.dim != dim:
            raise ValueError(f"density lives in R^{dens.dim} but the kernel in R^{dim}")
        return dens
    return densities.Gaussian(np.zeros(dim), 1.0)


def _tol(cfg, key, default):
    return float(cfg.get("tolerances", {}).get(key, default))


def run_dobrushin(cfg):
    ker = _kernel(cfg, {"variant": "HarmonicVlasov", "params": {"spatial_dim": 1}})
    dens = _density(cfg, ker.dim)
    N = cfg.get("N", [512])[0]
    times = cfg.get("t", [0.25, 0.5, 1.0])
    shift = np.zeros(ker.dim)
    shift[0] = cfg.get("shift", 0.1)
    tol = _tol(cfg, "dobrushin", 0.05)
    seed = cfg["seed"]
    mu0 = dens.sample(stream(seed, STREAM_SCENARIO, 0), N)
    nu0 = dens.sample(stream(seed, STREAM_SCENARIO, 1), N) + shift
    pair = np.stack([mu0, nu0])
    dist0 = transport.w1(transport.DiscreteMeasure.empirical(mu0), transport.DiscreteMeasure.empirical(nu0))
    rows, ok = [], True
    for t in times:
        mu_t, nu_t = integrate_flow(ker, pair, FlowParams(t_final=t, dt=cfg.get("dt")))
        dist = transport.w1(transport.DiscreteMeasure.empirical(mu_t), transport.DiscreteMeasure.empirical(nu_t))
        bound = math.exp(2 * ker.lipschitz * abs(t)) * dist0
        good = dist <= bound * (1 + tol) + 1e-12
        ok &= good
        rows.append([t, dist, bound, int(good)])
    return ScenarioResult(["t", "dist", "bound", "pass"], rows,
                          {"kernel": ker.spec(), "N": N, "dist0": dist0, "tol": tol}, ok)


def run_chaos(cfg):
    ker = _kernel(cfg, {"variant": "Linear", "params": {"dim": 1, "c": 1.0}})
    dens = _density(cfg, ker.dim)
    Ns = cfg.get("N", [8, 16, 32, 64, 128, 256, 512])
    tol = _tol(cfg, "slope", 0.05)
    d = ker.dim
    target = -1.0 / (d + 4) + tol
    rows, studies, ok = [], [], True
    for t in cfg.get("t", [0.5]):
        st = hierarchy.chaoticity_study(ker, dens, Ns, t, cfg.get("pooled", 2**17), cfg["seed"],
                                        n_ref=cfg.get("n_ref"), dt=cfg.get("dt"))
        good = st.bound_holds and st.slope <= target
        ok &= good
        studies.append({"t": t, "slope": st.slope, "slope_limit": target, "C": st.constant,
                        "proxy_error": st.proxy_error, "pass": bool(good)})
        rows += [[r["N"], r["S"], r["t"], r["distance"], r["stderr"], r["bound_rhs"]] for r in st.rows]
    return ScenarioResult(["N", "S", "t", "distance", "stderr", "bound_rhs"], rows,
                          {"kernel": ker.spec(), "studies": studies}, ok)


def run_hierarchy_identity(cfg):
    ker = _kernel(cfg, {"variant": "Linear", "params": {"dim": 1, "c": 1.0}})
    dens = _density(cfg, ker.dim)
    S = cfg.get("S", 10_000)
    t = cfg.get("t", [0.5])[0]
    rows, ok = [], True
    for N in cfg.get("N", [8]):
        ens = hierarchy.sample_product_ensemble(dens, N, S, cfg["seed"])
        ens = hierarchy.propagate_ensemble(ens, ker, FlowParams(t_final=t, dt=cfg.get("dt")))
        for m in cfg.get("m", [2]):
            for phi in testfunctions.builtin_family(m, ker.dim):
                chk = hierarchy.hierarchy_identity(ens, phi)
                ok &= chk.ok
                rows.append([N, m, chk.phi_id, chk.lhs, chk.rhs, chk.defect, chk.sigma])
    pref, bound = hierarchy.combinatorial_prefactor(3, 2)
    exact = pref == 2.0 / 3.0 and bound == 1.0 / 3.0
    ok &= exact
    return ScenarioResult(["N", "m", "phi_id", "lhs", "rhs", "defect", "sigma"], rows,
                          {"kernel": ker.spec(), "S": S, "t": t, "prefactor_3_2": [pref, bound],
                           "prefactor_exact": exact}, ok)


def run_nested_stability(cfg):
    ker = _kernel(cfg, {"variant": "HarmonicVlasov", "params": {"spatial_dim": 1}})
    M = cfg.get("members", 64)
    n = cfg.get("member_points", 64)
    tol = _tol(cfg, "nested", 0.05)
    seed = cfg["seed"]
    P0 = ensembles.random_mixture_ensemble(M, n, ker.dim, child_seed(seed, STREAM_SCENARIO, 0))
    Q0 = ensembles.random_mixture_ensemble(M, n, ker.dim, child_seed(seed, STREAM_SCENARIO, 1))
    params = FlowParams(dt=cfg.get("dt"))
    dist0 = ensembles.nested_w1(P0, Q0)
    rows, reports, ok = [], [], True
    for t in cfg.get("t", [0.25, 0.5]):
        rep = ensembles.nested_stability_check(P0, Q0, ker, t, params, tol=tol, dist0=dist0)
        ok &= rep.passed
        reports.append(rep.to_json())
        rows.append([t, rep.dist0, rep.dist_t, rep.bound, int(rep.passed)])
    return ScenarioResult(["t", "dist0", "dist_t", "bound", "pass"], rows,
                          {"kernel": ker.spec(), "members": M, "member_points": n, "checks": reports}, ok)


def member_ensemble(dens, n_points, seed):
    """One member per mixture component (weights = mixture weights); a single member otherwise.

    Members are quantile proxies in d = 1 and samples of ``n_points`` atoms otherwise.
    """
    comps = dens.components if isinstance(dens, densities.GaussianMixture) else (dens,)
    weights = dens.weights if isinstance(dens, densities.GaussianMixture) else np.ones(1)
    members = []
    for j, c in enumerate(comps):
        if c.dim == 1:
            members.append(densities.quantize(c, n_points))
        else:
            members.append(densities.sample_measure(c, n_points, stream(seed, STREAM_SCENARIO, 10 + j)))
    return ensembles.MeasureEnsemble(members, weights, seed)


def run_qn_convergence(cfg):
    ker = _kernel(cfg, {"variant": "Linear", "params": {"dim": 1, "c": 1.0}})
    default = {"type": "GaussianMixture", "weights": [0.5, 0.5], "means": [[-1.0], [1.0]],
               "covs": [[[1.0]], [[0.25]]]}
    dens = densities.density_from_spec(cfg.get("density", default))
    if dens.dim != ker.dim:
        raise ValueError(f"density lives in R^{dens.dim} but the kernel in R^{ker.dim}")
    seed = cfg["seed"]
    P = member_ensemble(dens, cfg.get("member_points", 1024), seed)
    S = cfg.get("S", 64)
    Ns = cfg.get("N", [16, 256])
    t = cfg.get("t", [0.5])[0]
    params = FlowParams(t_final=t, dt=cfg.get("dt"))
    rows = []
    for N in Ns:
        ens = ensembles.qn_projection(P, N, S, seed)
        d_qn = ensembles.nested_w1(ensembles.MeasureEnsemble.from_ensemble(ens), P)
        d_lim = ensembles.limit_gap(P, ker, params, N, S, seed)
        rows.append([N, S * len(P), d_qn, d_lim])
    drop = _tol(cfg, "qn_decrease", 0.25)
    first, last = rows[0], rows[-1]
    ok = last[2] <= (1 - drop) * first[2] and last[3] < first[3]
    return ScenarioResult(["N", "S", "dist_qn", "dist_limit"], rows,
                          {"kernel": ker.spec(), "t": t, "members": len(P),
                           "required_decrease": drop}, bool(ok))


def run_spohn_jacobian(cfg):
    ker = _kernel(cfg, {"variant": "HarmonicVlasov", "params": {"spatial_dim": 1}})
    tol = _tol(cfg, "jacobian", 1e-3)
    s_values = cfg.get("t", [0.5, 1.0])
    trials = cfg.get("trials", 50)
    rows, report, ok = [], {"kernel": ker.spec(), "sweep": [], "liouville": []}, True
    for n in cfg.get("N", [4, 16]):
        for r in spohn.jacobian_bound_report(ker, n, s_values, trials, cfg["seed"], tol=tol):
            ok &= r.passed
            report["sweep"].append(r.to_json())
            rows.append([r.kernel, n, r.s, r.worst_ratio, r.worst_pointwise_ratio,
                         r.alpha_margin, r.beta_margin, int(r.passed)])
        Z = stream(cfg["seed"], STREAM_SCENARIO, n).standard_normal((n, ker.dim))
        phi = testfunctions.cosine_product(min(2, n), ker.dim)
        for s in s_values:
            li = spohn.liouville_identity_check(ker, Z, phi, s)
            good = li.residual <= 1e-6 and li.generator_residual <= 1e-5
            ok &= good
            report["liouville"].append({"n": n, "s": s, "residual": li.residual,
                                        "generator_residual": li.generator_residual, "pass": good})
    return ScenarioResult(["kernel", "n", "s", "worst_ratio", "worst_pointwise_ratio",
                           "alpha_margin", "beta_margin", "pass"], rows, report, ok)


def _uniform_cloud(rng, n, d):
    return transport.DiscreteMeasure.empirical(rng.normal(size=(n, d)))


def _weighted_cloud(rng, n, d):
    pts = np.round(rng.normal(size=(n, d)), 1) if rng.random() < 0.3 else rng.normal(size=(n, d))
    return transport.DiscreteMeasure.normalized(pts, rng.random(n) + 0.05)


def w1_oracle_suite(seed, trials=200, tol=1e-9):
    """Rows ``[check, instances, worst, pass]`` for the transport oracles.

    ``worst`` is the largest discrepancy (or violation) seen in each check.
    """
    rows = []

    def record(name, count, worst, good):
        rows.append([name, count, worst, int(good)])

    worst = 0.0
    for i in range(trials):
        rng = stream(seed, STREAM_SCENARIO, 100, i)
        n, d = int(rng.integers(1, 8)), int(rng.integers(1, 3))
        mu, nu = _uniform_cloud(rng, n, d), _uniform_cloud(rng, n, d)
        worst = max(worst, abs(transport.w1(mu, nu) - transport.w1_brute_force(mu, nu)))
    record("brute_force", trials, worst, worst <= tol)

    worst = 0.0
    for i in range(trials):
        rng = stream(seed, STREAM_SCENARIO, 101, i)
        mu = _weighted_cloud(rng, int(rng.integers(1, 65)), 1)
        nu = _weighted_cloud(rng, int(rng.integers(1, 65)), 1)
        worst = max(worst, abs(transport.w1(mu, nu) - transport.w1_sorted_1d(mu, nu)))
    record("quantile_1d", trials, worst, worst <= tol)

    worst = -math.inf
    for i in range(trials):
        rng = stream(seed, STREAM_SCENARIO, 102, i)
        d = int(rng.integers(1, 4))
        mu = _weighted_cloud(rng, int(rng.integers(1, 20)), d)
        nu = _weighted_cloud(rng, int(rng.integers(1, 20)), d)
        worst = max(worst, transport.w1_dual_lb(mu, nu, 16, seed + i) - transport.w1(mu, nu))
    record("weak_duality", trials, worst, worst <= tol)

    worst = 0.0
    for i in range(trials):
        rng = stream(seed, STREAM_SCENARIO, 103, i)
        d = int(rng.integers(1, 4))
        a, b = transport.DiscreteMeasure.dirac(rng.normal(size=d)), transport.DiscreteMeasure.dirac(rng.normal(size=d))
        worst = max(worst, transport.w1(a, b) - transport.w1_dual_lb(a, b, 1, seed + i))
    record("dirac_duality_gap", trials, worst, worst <= tol)

    worst = -math.inf
    count = max(1, trials // 2)
    for i in range(count):
        rng = stream(seed, STREAM_SCENARIO, 104, i)
        d, m = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        mu = _weighted_cloud(rng, int(rng.integers(1, 6)), d)
        nu = _weighted_cloud(rng, int(rng.integers(1, 6)), d)
        lhs = transport.w1(transport.tensor_power(mu, m), transport.tensor_power(nu, m))
        worst = max(worst, lhs - m * transport.w1(mu, nu))
    record("tensorization", count, worst, worst <= tol)

    sym, tri = 0.0, -math.inf
    for i in range(count):
        rng = stream(seed, STREAM_SCENARIO, 105, i)
        d = int(rng.integers(1, 3))
        a, b, c = (_weighted_cloud(rng, int(rng.integers(1, 16)), d) for _ in range(3))
        ab, ba = transport.w1(a, b), transport.w1(b, a)
        sym = max(sym, abs(ab - ba))
        tri = max(tri, ab - transport.w1(a, c) - transport.w1(c, b))
    record("symmetry", count, sym, sym <= tol)
    record("triangle", count, tri, tri <= tol)
    return rows


def run_w1_selftest(cfg):
    tol = _tol(cfg, "w1", 1e-9)
    rows = w1_oracle_suite(cfg["seed"], cfg.get("trials", 200), tol)
    return ScenarioResult(["check", "instances", "worst", "pass"], rows, {"tol": tol},
                          all(r[3] for r in rows))


RUNNERS = {
    "dobrushin": run_dobrushin,
    "chaos": run_chaos,
    "hierarchy-identity": run_hierarchy_identity,
    "nested-stability": run_nested_stability,
    "qn-convergence": run_qn_convergence,
    "spohn-jacobian": run_spohn_jacobian,
    "w1-selftest": run_w1_selftest,
}
