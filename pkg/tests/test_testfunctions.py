import numpy as np
import pytest

from meanfield_lab.testfunctions import (
    builtin_family,
    bump_product,
    clipped_norm,
    clipped_quadratic_product,
    cosine_product,
    one,
)


def _fd_grad(phi, Z, eps=1e-6):
    g = np.zeros_like(Z)
    for idx in np.ndindex(Z.shape):
        up, dn = Z.copy(), Z.copy()
        up[idx] += eps
        dn[idx] -= eps
        g[idx] = (phi(up) - phi(dn)) / (2 * eps)
    return g


@pytest.mark.parametrize("phi", [cosine_product(1, 1), cosine_product(3, 2, freq=[0.5, -2.0]),
                                 bump_product(2, 2), bump_product(1, 3, radius=2.0), one(2, 2)],
                         ids=lambda p: p.name)
def test_gradients_match_finite_differences(phi):
    rng = np.random.default_rng(0)
    for _ in range(20):
        Z = 0.6 * rng.normal(size=(phi.arity, phi.dim))
        assert np.abs(phi.grad(Z) - _fd_grad(phi, Z)).max() <= 1e-6


@pytest.mark.parametrize("phi", builtin_family(2, 2) + builtin_family(3, 1)
                         + [clipped_norm(2, 3.0), clipped_norm(1, 2.0, r=2.0)], ids=lambda p: p.name)
def test_bound_and_lipschitz(phi):
    rng = np.random.default_rng(1)
    A = 1.5 * rng.normal(size=(20_000, phi.arity, phi.dim))
    B = A + rng.normal(scale=rng.choice([1e-3, 0.3], size=(20_000, 1, 1)), size=A.shape)
    assert np.abs(phi(A)).max() <= phi.bound
    quot = np.abs(phi(A) - phi(B)) / np.linalg.norm((A - B).reshape(len(A), -1), axis=1)
    assert quot.max() <= phi.lip * (1 + 1e-9)


def test_grad_sup_dominates():
    phi = bump_product(2, 1)
    Z = np.random.default_rng(2).uniform(-1.5, 1.5, size=(50_000, 2, 1))
    g = np.abs(phi.grad(Z)).max(axis=0)[:, 0]
    assert (g <= np.asarray(phi.grad_sup) * (1 + 1e-9)).all()
    assert g.max() >= 0.95 * phi.grad_sup[0]


def test_shape_check():
    with pytest.raises(ValueError):
        cosine_product(2, 1)(np.zeros((3, 1)))
    assert one(2, 1)(np.zeros((4, 2, 1))).shape == (4,)
    assert clipped_quadratic_product(2, 1)(np.array([[5.0], [5.0]])) == 1.0
