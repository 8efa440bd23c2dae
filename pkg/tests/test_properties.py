import math

import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from meanfield_lab import ensembles as en
from meanfield_lab.dynamics import FlowParams, barycenter, integrate_flow
from meanfield_lab.hierarchy import combinatorial_prefactor
from meanfield_lab.kernels import (HarmonicVlasovKernel, LinearKernel, SmoothedBiotSavartKernel,
                                   SmoothedVlasovKernel, ZeroKernel, mean_field_force)
from meanfield_lab.transport import DiscreteMeasure, w1_exact

KERNELS = [ZeroKernel(2), LinearKernel(2, c=-0.7), HarmonicVlasovKernel(1),
           SmoothedVlasovKernel(1, potential_name="gaussian", eps=0.8), SmoothedBiotSavartKernel(eps=0.5)]

coord = st.floats(-5, 5, allow_nan=False, allow_subnormal=False)


def points(n, d):
    return arrays(np.float64, (n, d), elements=coord)


@st.composite
def measures(draw, d=1, max_size=5):
    n = draw(st.integers(1, max_size))
    pts = draw(points(n, d))
    raw = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    return DiscreteMeasure.normalized(pts, raw)


def product(mu, nu):
    i, j = np.indices((mu.size, nu.size)).reshape(2, -1)
    return DiscreteMeasure.normalized(np.hstack([mu.points[i], nu.points[j]]), mu.weights[i] * nu.weights[j])


@given(st.sampled_from(KERNELS), points(2, 2))
def test_kernel_antisymmetric_and_lipschitz(kernel, zz):
    z, zp = zz
    assert np.array_equal(kernel(z, zp), -kernel(zp, z))
    shift = np.array([0.3, -0.2])
    lhs = np.linalg.norm(kernel(z + shift, zp) - kernel(z, zp))
    assert lhs <= kernel.lipschitz * np.linalg.norm(shift) * (1 + 1e-9) + 1e-12


@given(st.sampled_from(KERNELS), measures(2), measures(2), st.floats(0, 1), points(1, 2))
def test_mean_field_is_affine_in_the_measure(kernel, mu, nu, theta, z):
    mix = mu.mixture(nu, theta)
    lhs = mean_field_force(kernel, mix, z)
    rhs = (1 - theta) * mean_field_force(kernel, mu, z) + theta * mean_field_force(kernel, nu, z)
    assert np.allclose(lhs, rhs, atol=1e-10)


@given(measures(), measures(), measures())
def test_w1_metric_axioms(a, b, c):
    ab, ba = w1_exact(a, b)[0], w1_exact(b, a)[0]
    assert ab >= 0 and math.isclose(ab, ba, abs_tol=1e-12)
    assert w1_exact(a, a)[0] <= 1e-12
    assert ab <= w1_exact(a, c)[0] + w1_exact(c, b)[0] + 1e-12


@given(measures(2), measures(2), points(1, 2))
def test_w1_weak_duality(mu, nu, anchor):
    dist = w1_exact(mu, nu)[0]
    for f in (lambda p: np.linalg.norm(p - anchor, axis=1), lambda p: np.minimum(np.abs(p[:, 0]), 1.0)):
        gap = abs(mu.weights @ f(mu.points) - nu.weights @ f(nu.points))
        assert gap <= dist + 1e-10


@given(measures(max_size=3), measures(max_size=3), measures(max_size=3), measures(max_size=3))
def test_w1_tensorization(a, b, c, d):
    lhs = w1_exact(product(a, c), product(b, d))[0]
    assert lhs <= w1_exact(a, b)[0] + w1_exact(c, d)[0] + 1e-10


@given(measures(max_size=3), measures(max_size=3))
def test_power_product_bound(mu, nu):
    square = w1_exact(product(mu, mu), product(nu, nu))[0]
    assert square <= 2 * w1_exact(mu, nu)[0] + 1e-10


@given(st.sampled_from([LinearKernel(2, c=0.9), HarmonicVlasovKernel(1), SmoothedBiotSavartKernel(eps=0.5)]),
       arrays(np.float64, (5, 2), elements=st.floats(-2, 2)))
def test_barycenter_is_conserved(kernel, z):
    out = integrate_flow(kernel, z, FlowParams(0.3, dt=0.01))
    assert np.allclose(barycenter(out), barycenter(z), atol=1e-10)


@given(st.integers(1, 60), st.integers(1, 6))
def test_prefactor_bounds_and_monotonicity(N, m):
    if m > N:
        return
    pref, bound = combinatorial_prefactor(N, m)
    assert 0 < pref <= 1 and 1 - pref <= bound + 1e-15
    assert combinatorial_prefactor(N + 1, m)[0] >= pref
    if m + 1 <= N:
        assert combinatorial_prefactor(N, m + 1)[0] <= pref


@st.composite
def small_ensembles(draw):
    members = draw(st.lists(measures(max_size=3), min_size=1, max_size=3))
    return en.MeasureEnsemble.uniform(members)


@given(small_ensembles(), small_ensembles(), small_ensembles())
def test_nested_w1_metric(P, Q, R):
    pq = en.nested_w1(P, Q)
    assert math.isclose(pq, en.nested_w1(Q, P), abs_tol=1e-12)
    assert en.nested_w1(P, P) <= 1e-12
    assert pq <= en.nested_w1(P, R) + en.nested_w1(R, Q) + 1e-12


@given(st.sampled_from(KERNELS[2:]), arrays(np.float64, (2, 6, 2), elements=coord), st.booleans())
def test_specialized_field_matches_pairwise_sum(kernel, z, weighted):
    from meanfield_lab.kernels import InteractionKernel

    w = np.linspace(1.0, 2.0, 6) / np.linspace(1.0, 2.0, 6).sum() if weighted else None
    assert np.allclose(kernel.field(z, w), InteractionKernel.field(kernel, z, w), atol=1e-12)
