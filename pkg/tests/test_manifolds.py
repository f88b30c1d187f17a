import math

import numpy as np
import pytest

from mixcurv.manifolds import Manifold, ProductManifold

from conftest import (
    CURVED_KAPPAS,
    KAPPAS,
    random_point,
    random_product_point,
    random_product_tangent,
    random_tangent,
    tangent_basis,
)


class TestInner:
    def test_hyperboloid_origin_norm(self):
        m = Manifold(-1, 1)
        assert m.inner([1.0, 0.0], [1.0, 0.0]) == pytest.approx(-1.0)

    def test_euclidean_dot(self):
        m = Manifold(0, 2)
        assert m.inner([1.0, 2.0], [3.0, 4.0]) == pytest.approx(11.0)

    def test_spherical_orthogonal(self):
        m = Manifold(1, 2)
        assert m.inner([1, 0, 0], [0, 1, 0]) == pytest.approx(0.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Manifold(0, 2).inner([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


class TestDistance:
    def test_hyperbolic_geodesic_parametrization(self):
        m = Manifold(-1, 1)
        y = [math.cosh(1.0), math.sinh(1.0)]
        assert m.distance([1.0, 0.0], y) == pytest.approx(1.0, abs=1e-12)

    def test_quarter_great_circle(self):
        m = Manifold(1, 2)
        assert m.distance([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)

    def test_345_triangle(self):
        m = Manifold(0, 2)
        assert m.distance([0.0, 3.0], [4.0, 0.0]) == pytest.approx(5.0)

    def test_off_manifold_rejected(self):
        with pytest.raises(ValueError):
            Manifold(1, 2).distance([2.0, 0, 0], [1.0, 0, 0])

    @pytest.mark.parametrize("kappa", KAPPAS)
    def test_symmetry_and_triangle_inequality(self, kappa, rng):
        m = Manifold(kappa, 3)
        for _ in range(200):
            x, y, z = (random_point(m, rng) for _ in range(3))
            dxy = m.distance(x, y)
            assert dxy == pytest.approx(m.distance(y, x), abs=1e-12)
            assert dxy >= 0
            assert dxy <= m.distance(x, z) + m.distance(z, y) + 1e-7


class TestExpLog:
    def test_zero_vector_is_identity(self, rng):
        for kappa in KAPPAS:
            m = Manifold(kappa, 2)
            x = random_point(m, rng)
            assert np.allclose(m.exp_map(x, np.zeros(m.ambient_dim)), x)

    def test_quarter_rotation(self):
        m = Manifold(1, 2)
        out = m.exp_map([1.0, 0, 0], [0.0, math.pi / 2, 0.0])
        assert np.allclose(out, [0, 1, 0], atol=1e-12)

    def test_hyperbolic_geodesic(self):
        m = Manifold(-1, 1)
        t = 0.73
        np.testing.assert_allclose(
            m.exp_map([1.0, 0.0], [0.0, t]), [math.cosh(t), math.sinh(t)], atol=1e-12
        )

    def test_log_at_same_point_is_zero(self, rng):
        for kappa in KAPPAS:
            m = Manifold(kappa, 2)
            x = random_point(m, rng)
            assert np.allclose(m.log_map(x, x), 0.0, atol=1e-9)

    def test_euclidean_log_is_difference(self, rng):
        m = Manifold(0, 3)
        x, y = rng.normal(size=3), rng.normal(size=3)
        np.testing.assert_allclose(m.log_map(x, y), y - x)

    @pytest.mark.parametrize("kappa", KAPPAS)
    def test_roundtrips(self, kappa, rng):
        m = Manifold(kappa, 3)
        for _ in range(200):
            x = random_point(m, rng)
            y = random_point(m, rng)
            v = random_tangent(m, x, rng)
            # log o exp
            fwd = m.exp_map(x, v)
            np.testing.assert_allclose(m.log_map(x, fwd), v, atol=1e-7)
            # exp o log, skipping near-antipodal spherical pairs
            if kappa > 0 and m.distance(x, y) > math.pi / math.sqrt(kappa) - 1e-3:
                continue
            back = m.exp_map(x, m.log_map(x, y))
            np.testing.assert_allclose(back, y, atol=1e-7)
            assert m.norm(m.log_map(x, y)) == pytest.approx(m.distance(x, y), abs=1e-7)

    def test_exp_distance_matches_tangent_norm(self, rng):
        for kappa in CURVED_KAPPAS:
            m = Manifold(kappa, 3)
            x = random_point(m, rng)
            v = random_tangent(m, x, rng, scale=0.4)
            assert m.distance(x, m.exp_map(x, v)) == pytest.approx(
                m.norm(v), abs=1e-7
            )

    def test_antipodal_log_rejected(self):
        m = Manifold(1, 2)
        with pytest.raises(ValueError):
            m.log_map([1.0, 0, 0], [-1.0, 0, 0])

    def test_non_tangent_rejected(self, rng):
        m = Manifold(-1, 2)
        x = random_point(m, rng)
        with pytest.raises(ValueError):
            m.exp_map(x, x)


class TestParallelTransport:
    def test_transport_to_same_point(self, rng):
        for kappa in KAPPAS:
            m = Manifold(kappa, 2)
            x = random_point(m, rng)
            v = random_tangent(m, x, rng)
            np.testing.assert_allclose(m.parallel_transport(x, x, v), v, atol=1e-12)

    def test_flat_space_unchanged(self, rng):
        m = Manifold(0, 3)
        v = rng.normal(size=3)
        np.testing.assert_allclose(
            m.parallel_transport(rng.normal(size=3), rng.normal(size=3), v), v
        )

    @pytest.mark.parametrize("kappa", KAPPAS)
    def test_isometry(self, kappa, rng):
        m = Manifold(kappa, 3)
        for _ in range(200):
            x, y = random_point(m, rng), random_point(m, rng)
            if kappa > 0 and m.distance(x, y) > math.pi / math.sqrt(kappa) - 1e-3:
                continue
            v = random_tangent(m, x, rng)
            w = m.parallel_transport(x, y, v)
            if kappa != 0.0:
                assert np.abs(m.inner(x, v)) < 1e-8
                assert np.abs(m.inner(y, w)) < 1e-8 * (1 + abs(m.inner(v, v)))
            assert m.inner(w, w) == pytest.approx(m.inner(v, v), abs=1e-8)

    def test_antipodal_rejected(self):
        m = Manifold(1, 2)
        with pytest.raises(ValueError):
            m.parallel_transport([1.0, 0, 0], [-1.0, 0, 0], [0.0, 0, 1])


class TestRiemannianGradient:
    def test_radial_gradient_vanishes(self):
        m = Manifold(1, 2)
        np.testing.assert_allclose(
            m.egrad_to_rgrad([1.0, 0, 0], [1.0, 0, 0]), 0.0, atol=1e-15
        )

    def test_euclidean_identity(self, rng):
        m = Manifold(0, 4)
        g = rng.normal(size=4)
        np.testing.assert_allclose(m.egrad_to_rgrad(rng.normal(size=4), g), g)

    @pytest.mark.parametrize("kappa", CURVED_KAPPAS)
    def test_matches_finite_differences(self, kappa, rng):
        # Oracle: central differences of a fixed scalar field through exp_map,
        # assembled in a metric-orthonormal tangent basis.
        m = Manifold(kappa, 3)
        a = rng.normal(size=m.ambient_dim)
        b = rng.normal(size=m.ambient_dim)

        def field(p):
            return float(a @ p + (b @ p) ** 2)

        def ambient_grad(p):
            return a + 2.0 * (b @ p) * b

        h = 1e-5
        for _ in range(50):
            x = random_point(m, rng)
            rg = m.egrad_to_rgrad(x, ambient_grad(x))
            assert np.abs(m.inner(x, rg)) < 1e-8 * (1 + np.abs(m.inner(rg, rg)))
            basis = tangent_basis(m, x)
            fd = np.zeros(m.dim)
            for i, e in enumerate(basis):
                fd[i] = (field(m.exp_map(x, h * e)) - field(m.exp_map(x, -h * e))) / (
                    2 * h
                )
            fd_vec = basis.T @ fd if kappa >= 0 else sum(c * e for c, e in zip(fd, basis))
            rel = np.linalg.norm(np.asarray(fd_vec) - rg) / max(np.linalg.norm(rg), 1e-9)
            assert rel < 1e-4


class TestOriginProjectValidate:
    def test_origin_examples(self):
        np.testing.assert_allclose(Manifold(-1, 2).origin(), [1, 0, 0])
        np.testing.assert_allclose(Manifold(0, 3).origin(), [0, 0, 0])
        np.testing.assert_allclose(Manifold(2, 2).origin(), [1 / math.sqrt(2), 0, 0])

    def test_spherical_radial_rescale(self):
        np.testing.assert_allclose(Manifold(1, 1).project([2.0, 0.0]), [1.0, 0.0])

    def test_spherical_zero_rejected(self):
        with pytest.raises(ValueError):
            Manifold(1, 2).project([0.0, 0.0, 0.0])

    def test_projection_lands_on_manifold(self, rng):
        for kappa in CURVED_KAPPAS:
            m = Manifold(kappa, 3)
            for _ in range(20):
                p = m.project(rng.normal(size=m.ambient_dim, scale=2.0))
                assert m.constraint_residual(p) < 1e-9

    def test_validate_origin_of_any_signature(self):
        pm = ProductManifold([(-1, 2), (0, 3), (1, 2)])
        assert pm.validate_point(pm.origin())

    def test_validate_reports_offending_component(self):
        pm = ProductManifold([(-1, 2), (1, 2)])
        x = pm.origin()
        x[3] = 2.0
        with pytest.raises(ValueError, match="components \\[1\\]"):
            pm.check_point(x)


class TestProductManifold:
    def test_l2_decomposition(self):
        pm = ProductManifold([(0, 1), (0, 1)])
        assert pm.distance([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)

    def test_identity(self, rng):
        pm = ProductManifold([(-1, 2), (1, 2)])
        x = random_product_point(pm, rng)
        assert pm.distance(x, x) == pytest.approx(0.0, abs=1e-7)

    def test_componentwise_recompute(self, rng):
        # Oracle: recompute each component distance independently and take
        # the l2 norm by hand.
        pm = ProductManifold([(-1, 2), (1, 2)])
        for _ in range(50):
            x = random_product_point(pm, rng)
            y = random_product_point(pm, rng)
            parts = []
            for m, xc, yc in zip(pm.components, pm.split(x), pm.split(y)):
                parts.append(m.distance(xc, yc) ** 2)
            assert pm.distance(x, y) == pytest.approx(math.sqrt(sum(parts)), abs=1e-10)

    def test_product_roundtrip_and_transport(self, rng):
        pm = ProductManifold([(-0.5, 2), (0, 2), (2, 2)])
        for _ in range(50):
            x = random_product_point(pm, rng)
            v = random_product_tangent(pm, x, rng, scale=0.5)
            y = pm.exp_map(x, v)
            assert pm.validate_point(y, atol=1e-9)
            np.testing.assert_allclose(pm.log_map(x, y), v, atol=1e-7)
            w = pm.parallel_transport(x, y, v)
            assert pm.inner(w, w) == pytest.approx(pm.inner(v, v), abs=1e-8)

    def test_signature_bookkeeping(self):
        pm = ProductManifold([(-1, 4), (1, 4)])
        assert pm.ambient_dim == 10
        assert pm.dim == 8
        assert pm.signature == [(-1.0, 4), (1.0, 4)]

    def test_rescale_to_new_curvatures(self, rng):
        pm = ProductManifold([(-1, 2), (1, 2)])
        pm2 = pm.with_curvatures([-2.0, 0.5])
        x = random_product_point(pm, rng)
        y = pm.rescale_to(pm2, x)
        assert pm2.validate_point(y)
