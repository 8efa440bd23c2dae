import numpy as np
import pytest

from meanfield_lab.errors import CapacityError, DimensionError
from meanfield_lab.rng import stream
from meanfield_lab.transport import (
    DiscreteMeasure,
    LipschitzTestFunction,
    marginal,
    product_measure,
    read_point_cloud,
    solve_transport,
    tensor_power,
    w1,
    w1_brute_force,
    w1_dual_lb,
    w1_exact,
    w1_sorted_1d,
    write_plan,
    write_point_cloud,
)

pair_02 = DiscreteMeasure.empirical([0.0, 2.0])
pair_13 = DiscreteMeasure.empirical([1.0, 3.0])


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 1)), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[np.inf]]), np.ones(1))
    with pytest.raises(DimensionError):
        DiscreteMeasure(np.zeros((2, 1)), np.ones(3) / 3)
    mu = DiscreteMeasure.empirical([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        mu.points[0, 0] = 5.0


def test_w1_examples():
    d, plan = w1_exact(pair_02, pair_02)
    assert d == 0.0
    assert np.array_equal(plan.source_idx, plan.target_idx)
    assert w1(pair_02, pair_13) == pytest.approx(1.0, abs=1e-12)
    split = DiscreteMeasure.empirical([-1.0, 1.0])
    d, plan = w1_exact(DiscreteMeasure.dirac([0.0]), split)
    assert d == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(plan.mass, [0.5, 0.5])


def test_sorted_examples():
    assert w1_sorted_1d(pair_02, pair_02) == 0.0
    assert w1_sorted_1d(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0])) == 1.0
    assert w1_sorted_1d(pair_02, pair_13) == 1.0
    with pytest.raises(DimensionError):
        w1_sorted_1d(DiscreteMeasure.dirac([0.0, 0.0]), DiscreteMeasure.dirac([0.0, 1.0]))


def test_brute_force_examples():
    assert w1_brute_force(DiscreteMeasure.dirac([0.0, 0.0]), DiscreteMeasure.dirac([3.0, 4.0])) == 5.0
    assert w1_brute_force(pair_02, pair_13) == 1.0
    with pytest.raises(ValueError):
        w1_brute_force(DiscreteMeasure.empirical(np.zeros((8, 1))), DiscreteMeasure.empirical(np.ones((8, 1))))
    with pytest.raises(ValueError):
        w1_brute_force(DiscreteMeasure.normalized([[0.0], [1.0]], [1, 2]), pair_13)


def test_frozen_values():
    # cross-checked against an independent HiGHS LP when frozen
    r = stream(42)
    a = DiscreteMeasure.empirical(r.normal(size=(50, 2)))
    b = DiscreteMeasure.normalized(r.normal(size=(30, 2)) + 0.5, r.random(30))
    assert w1(a, b) == pytest.approx(0.6319629692595964, rel=1e-12)
    a = DiscreteMeasure.empirical(r.normal(size=(40, 2)))
    b = DiscreteMeasure.empirical(r.normal(size=(40, 2)))
    assert w1(a, b) == pytest.approx(0.6264845171310176, rel=1e-12)


def test_plan_marginals_and_cost():
    r = stream(3)
    a = DiscreteMeasure.normalized(r.normal(size=(12, 2)), r.random(12))
    b = DiscreteMeasure.normalized(r.normal(size=(9, 2)), r.random(9))
    d, plan = w1_exact(a, b)
    ma, mb = plan.marginals(a.size, b.size)
    assert np.allclose(ma, a.weights, atol=1e-9) and np.allclose(mb, b.weights, atol=1e-9)
    assert (plan.mass > 0).all()
    cost = np.sum(plan.mass * np.linalg.norm(a.points[plan.source_idx] - b.points[plan.target_idx], axis=1))
    assert cost == pytest.approx(d, abs=1e-12)


def test_monotone_route_above_capacity():
    r = stream(4)
    a = DiscreteMeasure.empirical(r.normal(size=(3000, 1)))
    b = DiscreteMeasure.normalized(r.normal(size=(2000, 1)) + 0.2, r.random(2000))
    d, plan = w1_exact(a, b)
    assert d == pytest.approx(w1_sorted_1d(a, b), abs=1e-12)
    ma, mb = plan.marginals(a.size, b.size)
    assert np.allclose(ma, a.weights, atol=1e-12) and np.allclose(mb, b.weights, atol=1e-12)


def test_capacity_and_mass_errors():
    big = DiscreteMeasure.empirical(np.zeros((2001, 2)))
    with pytest.raises(CapacityError):
        w1_exact(big, big)
    with pytest.raises(ValueError):
        solve_transport(np.array([0.5, 0.5]), np.array([1.0, 0.1]), np.ones((2, 2)))
    with pytest.raises(DimensionError):
        w1(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([0.0, 1.0]))


def test_dual_examples():
    assert w1_dual_lb(pair_02, pair_02, 10, 0) == 0.0
    a, b = DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0])
    assert w1_dual_lb(a, b, 1, 0) == pytest.approx(w1(a, b), abs=1e-12)
    with pytest.raises(ValueError):
        w1_dual_lb(a, b, 0, 0)


def test_lipschitz_test_function():
    phi = LipschitzTestFunction(np.array([[1.0]]), np.zeros(1))
    assert phi(np.array([0.0])) == 1.0 and phi(np.array([1.0])) == 0.0


def test_tensor_power_examples():
    mu = DiscreteMeasure.empirical([[0.0], [1.0]])
    assert tensor_power(mu, 1) is mu
    a = tensor_power(DiscreteMeasure.dirac([2.0, -1.0]), 3)
    assert np.array_equal(a.points, [[2.0, -1.0] * 3]) and a.weights[0] == 1.0
    sq = tensor_power(mu, 2)
    assert sorted(map(tuple, sq.points)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert np.allclose(sq.weights, 0.25)
    with pytest.raises(CapacityError):
        tensor_power(DiscreteMeasure.empirical(np.zeros((400, 1))), 2)
    with pytest.raises(ValueError):
        tensor_power(mu, 0)


def test_marginals_of_product():
    r = stream(5)
    mu = DiscreteMeasure.normalized(r.normal(size=(4, 2)), r.random(4))
    nu = DiscreteMeasure.normalized(r.normal(size=(3, 2)), r.random(3))
    prod = product_measure(mu, nu)
    assert w1(marginal(prod, 0, 2), mu) <= 1e-12
    assert w1(marginal(prod, 1, 2), nu) <= 1e-12


def test_point_cloud_csv(tmp_path):
    mu = DiscreteMeasure.normalized([[0.1, 0.2], [1.0, -3.0]], [1.0, 3.0])
    path = tmp_path / "a.csv"
    write_point_cloud(path, mu)
    back = read_point_cloud(path)
    assert np.array_equal(back.points, mu.points) and np.allclose(back.weights, mu.weights, atol=1e-15)
    bad = tmp_path / "bad.csv"
    bad.write_text("w,x\n1,0\n")
    with pytest.raises(ValueError):
        read_point_cloud(bad)
    _, plan = w1_exact(mu, DiscreteMeasure.dirac([0.0, 0.0]))
    write_plan(tmp_path / "plan.csv", plan)
    assert (tmp_path / "plan.csv").read_text().startswith("source_idx,target_idx,mass\n")


def test_ties_and_duplicates():
    a = DiscreteMeasure.empirical([[0.0], [0.0], [1.0], [1.0]])
    b = DiscreteMeasure.empirical([[0.0], [1.0], [1.0], [1.0]])
    assert w1(a, b) == pytest.approx(0.25, abs=1e-12)
    assert w1(a, b) == pytest.approx(w1_brute_force(a, b), abs=1e-12)
