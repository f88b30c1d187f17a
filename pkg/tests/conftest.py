import numpy as np
import pytest

from mixcurv.manifolds import Manifold, ProductManifold

KAPPAS = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
CURVED_KAPPAS = [k for k in KAPPAS if k != 0.0]


def random_point(m: Manifold, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """A random point on a component manifold, at curvature-scaled radius."""
    if m.curvature == 0.0:
        return rng.normal(scale=spread, size=m.dim)
    if m.curvature > 0:
        x = rng.normal(size=m.ambient_dim)
        return x * (m.radius / np.linalg.norm(x))
    u = rng.normal(size=m.dim)
    u *= rng.uniform(0.0, 2.0 * spread) * m.radius / np.linalg.norm(u)
    return m.exp_map(m.origin(), np.concatenate([[0.0], u]))


def random_tangent(
    m: Manifold, x: np.ndarray, rng: np.random.Generator, scale: float = 1.0
) -> np.ndarray:
    v = m.project_tangent(x, rng.normal(size=m.ambient_dim))
    n = m.norm(v)
    if n < 1e-12:
        return np.zeros_like(v)
    target = rng.uniform(0.05, 1.0) * scale
    if m.curvature < 0:
        target *= m.radius
    return v * (target / n)


def random_product_point(pm: ProductManifold, rng: np.random.Generator, spread: float = 1.0):
    return pm.join([random_point(m, rng, spread) for m in pm.components])


def random_product_tangent(pm: ProductManifold, x, rng, scale: float = 1.0):
    return pm.join(
        [
            random_tangent(m, xc, rng, scale)
            for m, xc in zip(pm.components, pm.split(x))
        ]
    )


def tangent_basis(m: Manifold, x: np.ndarray) -> np.ndarray:
    """Metric-orthonormal basis of the tangent space at x, rows = vectors."""
    if m.curvature == 0.0:
        return np.eye(m.dim)
    basis = []
    for i in range(m.ambient_dim):
        v = m.project_tangent(x, np.eye(m.ambient_dim)[i])
        for b in basis:
            v = v - m.inner(b, v) * b
        n = m.norm(v)
        if n > 1e-8:
            basis.append(v / n)
        if len(basis) == m.dim:
            break
    assert len(basis) == m.dim
    return np.array(basis)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
