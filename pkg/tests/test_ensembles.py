import itertools
import math

import numpy as np
import pytest

from meanfield_lab import ensembles as en
from meanfield_lab.dynamics import FlowParams, integrate_flow
from meanfield_lab.errors import CapacityError, DimensionError
from meanfield_lab.kernels import HarmonicVlasovKernel, LinearKernel, ZeroKernel
from meanfield_lab.transport import DiscreteMeasure, w1_exact


def cloud(seed, n=6, d=1, shift=0.0):
    return DiscreteMeasure.empirical(np.random.default_rng(seed).normal(size=(n, d)) + shift)


def test_nested_self_distance_zero():
    P = en.random_mixture_ensemble(5, 8, 1, seed=1)
    assert en.nested_w1(P, P) == pytest.approx(0.0, abs=1e-12)


def test_nested_singletons_reduce_to_w1():
    a, b = cloud(1), cloud(2)
    P, Q = en.MeasureEnsemble.uniform([a]), en.MeasureEnsemble.uniform([b])
    assert en.nested_w1(P, Q) == pytest.approx(w1_exact(a, b)[0], abs=1e-14)


def test_nested_two_members_brute_force():
    P = en.MeasureEnsemble.uniform([cloud(1), cloud(2, shift=3.0)])
    Q = en.MeasureEnsemble.uniform([cloud(3, shift=1.0), cloud(4, shift=-2.0)])
    D = en.inner_cost_matrix(P, Q)
    brute = min(0.5 * (D[0, p[0]] + D[1, p[1]]) for p in itertools.permutations(range(2)))
    assert en.nested_w1(P, Q) == pytest.approx(brute, abs=1e-12)


def test_nested_validation():
    P = en.MeasureEnsemble.uniform([cloud(1)])
    with pytest.raises(DimensionError):
        en.nested_w1(P, en.MeasureEnsemble.uniform([cloud(1, d=2)]))
    big = en.MeasureEnsemble.uniform([cloud(i, n=2) for i in range(en.MAX_MEMBERS + 1)])
    with pytest.raises(CapacityError):
        en.nested_w1(P, big)
    with pytest.raises(ValueError):
        en.MeasureEnsemble([cloud(1)], [0.5])


def test_pushforward_examples():
    P = en.random_mixture_ensemble(4, 6, 2, seed=2)
    same = en.statistical_pushforward(P, ZeroKernel(2), FlowParams(1.5))
    assert all(np.array_equal(a.points, b.points) for a, b in zip(same.members, P.members))
    assert same.time == 1.5
    dirac = en.MeasureEnsemble.uniform([DiscreteMeasure.dirac([1.0, -2.0])])
    moved = en.statistical_pushforward(dirac, HarmonicVlasovKernel(1), FlowParams(0.7))
    # antisymmetry gives K(z, z) = 0, so a lone atom stays put
    assert np.allclose(moved.members[0].points, [[1.0, -2.0]], atol=1e-15)


def test_pushforward_group_property():
    k = LinearKernel(1, c=0.8)
    P = en.random_mixture_ensemble(3, 5, 1, seed=3)
    p = FlowParams(0.6, dt=1e-3)
    two = en.statistical_pushforward(en.statistical_pushforward(P, k, p), k, p)
    once = en.statistical_pushforward(P, k, FlowParams(1.2, dt=1e-3))
    assert en.nested_w1(two, once) <= 1e-7


def test_weighted_member_pushforward():
    k = LinearKernel(1, c=1.0)
    m = DiscreteMeasure([[0.0], [1.0], [4.0]], [0.5, 0.25, 0.25])
    P = en.MeasureEnsemble.uniform([m, cloud(2, n=3)])
    moved = en.statistical_pushforward(P, k, FlowParams(0.5))
    bary = 0.5 * 0 + 0.25 * 1 + 0.25 * 4
    expect = bary + (m.points - bary) * math.exp(0.5)
    assert np.allclose(moved.members[0].points, expect, atol=1e-10)
    assert np.array_equal(moved.members[0].weights, m.weights)


def test_qn_examples():
    P = en.MeasureEnsemble.uniform([DiscreteMeasure.dirac([2.0])])
    ens = en.qn_projection(P, 5, 7, seed=0)
    assert ens.samples.shape == (7, 5, 1) and (ens.samples == 2.0).all()
    Q = en.random_mixture_ensemble(3, 4, 1, seed=4)
    one = en.qn_projection(Q, 1, 10, seed=1)
    atoms = np.concatenate([m.points for m in Q.members])
    assert np.isin(one.samples.ravel(), atoms.ravel()).all()
    a = en.qn_projection(Q, 3, 4, seed=5)
    b = en.qn_projection(Q, 3, 4, seed=5)
    assert np.array_equal(a.samples, b.samples)


def test_qn_picks_follow_weights():
    P = en.MeasureEnsemble([DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0])], [0.25, 0.75])
    ens = en.qn_projection(P, 1, 2000, seed=6)
    frac = ens.samples.mean()
    assert abs(frac - 0.75) <= 4 * math.sqrt(0.75 * 0.25 / 4000)


def test_stability_examples():
    P = en.random_mixture_ensemble(4, 6, 1, seed=7)
    Q = en.random_mixture_ensemble(4, 6, 1, seed=8)
    zero = en.nested_stability_check(P, Q, ZeroKernel(1), 1.0, FlowParams(1.0))
    assert zero.dist_t == pytest.approx(zero.dist0, abs=1e-12) and zero.passed
    same = en.nested_stability_check(P, P, LinearKernel(1), 1.0, FlowParams(1.0))
    assert same.dist_t == pytest.approx(0.0, abs=1e-10) and same.passed
    shifted = en.nested_stability_check(P, en.translated(P, [0.5]), LinearKernel(1), 1.0, FlowParams(1.0))
    # the linear field ignores translations, so the nested distance is transported unchanged
    assert shifted.dist0 == pytest.approx(0.5, abs=1e-12)
    assert shifted.dist_t == pytest.approx(0.5, abs=1e-8) and shifted.passed
    assert shifted.to_json()["pass"] is True


def test_save_load_round_trip(tmp_path):
    P = en.MeasureEnsemble([cloud(1, d=2), cloud(2, n=3, d=2)], [0.3, 0.7], seed=11, time=0.25)
    P.save(tmp_path)
    Q = en.MeasureEnsemble.load(tmp_path)
    assert Q.seed == 11 and Q.time == 0.25
    assert np.array_equal(Q.weights, P.weights)
    for a, b in zip(P.members, Q.members):
        assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)


def test_thread_count_does_not_change_results(monkeypatch):
    P = en.random_mixture_ensemble(6, 7, 1, seed=9)
    Q = en.random_mixture_ensemble(6, 7, 1, seed=10)
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("MEANFIELD_THREADS", threads)
        out.append((en.inner_cost_matrix(P, Q), en.nested_w1(P, Q)))
    assert np.array_equal(out[0][0], out[1][0]) and out[0][1] == out[1][1]
    monkeypatch.setenv("MEANFIELD_THREADS", "zero")
    with pytest.raises(ValueError):
        en.nested_w1(P, Q)


def test_limit_gap_shrinks():
    P = en.random_mixture_ensemble(4, 16, 1, seed=12)
    k = LinearKernel(1, c=0.5)
    p = FlowParams(0.5)
    small = en.limit_gap(P, k, p, 4, 8, seed=1)
    large = en.limit_gap(P, k, p, 64, 8, seed=1)
    assert large < small


def test_from_ensemble_matches_integrate():
    from meanfield_lab.hierarchy import Ensemble

    z = np.random.default_rng(0).normal(size=(3, 5, 1))
    P = en.MeasureEnsemble.from_ensemble(Ensemble(z))
    moved = en.statistical_pushforward(P, LinearKernel(1), FlowParams(0.4))
    ref = integrate_flow(LinearKernel(1), z, FlowParams(0.4))
    assert all(np.array_equal(m.points, r) for m, r in zip(moved.members, ref))
