"""Constant-curvature manifolds and their Cartesian products.

A component space is identified by its curvature ``kappa``: negative for
hyperbolic (hyperboloid / Lorentz model), zero for Euclidean, positive for
spherical. Hyperbolic and spherical components of intrinsic dimension d use
d+1 ambient coordinates; Euclidean components use d. Product-manifold points
concatenate the ambient coordinates of their components.

All operations broadcast over leading axes, with the ambient axis last, and
are pure functions of their inputs.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

CONSTRAINT_ATOL = 1e-9
TANGENT_ATOL = 1e-8
# Transcendental arguments may overshoot their domain by at most this much
# before the input is rejected instead of clamped.
BOUNDARY_BAND = 1e-9
_TINY = 1e-15


def _sinhc(s: np.ndarray) -> np.ndarray:
    """sinh(s)/s with the removable singularity at 0 filled in."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-7
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 + s * s / 6.0, np.sinh(safe) / safe)


def _sinc(s: np.ndarray) -> np.ndarray:
    """sin(s)/s (numpy's sinc is normalized by pi)."""
    return np.sinc(np.asarray(s, dtype=float) / np.pi)


def clamp_acos(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) > 1.0 + BOUNDARY_BAND):
        worst = float(np.max(np.abs(c)))
        raise ValueError(f"arc-cosine argument {worst!r} outside [-1, 1] beyond tolerance")
    return np.clip(c, -1.0, 1.0)


def clamp_acosh(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if np.any(c < 1.0 - BOUNDARY_BAND):
        worst = float(np.min(c))
        raise ValueError(f"arc-cosh argument {worst!r} below 1 beyond tolerance")
    return np.maximum(c, 1.0)


def check_distance_matrix(D, atol: float = 1e-9) -> np.ndarray:
    """Validate a dense distance matrix: square, symmetric, zero diagonal,
    nonnegative, finite. Returns the validated array."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix contains non-finite entries")
    if np.any(D < 0):
        i, j = np.argwhere(D < 0)[0]
        raise ValueError(f"negative distance at ({i}, {j})")
    asym = np.abs(D - D.T)
    if np.any(asym > atol):
        i, j = np.unravel_index(np.argmax(asym), D.shape)
        raise ValueError(
            f"asymmetric distances at ({i}, {j}): {D[i, j]!r} vs {D[j, i]!r}"
        )
    if np.any(np.abs(np.diag(D)) > atol):
        i = int(np.argmax(np.abs(np.diag(D))))
        raise ValueError(f"nonzero diagonal at ({i}, {i})")
    return D


class Manifold:
    """A single constant-curvature space.

    Parameters
    ----------
    curvature:
        Sectional curvature. Sign selects the geometry.
    dim:
        Intrinsic dimension (>= 1).
    """

    def __init__(self, curvature: float, dim: int):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.curvature = float(curvature)
        self.dim = dim

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.curvature == 0.0 else self.dim + 1

    @property
    def kind(self) -> str:
        if self.curvature < 0:
            return "hyperbolic"
        if self.curvature > 0:
            return "spherical"
        return "euclidean"

    @property
    def radius(self) -> float:
        """Constraint radius 1/sqrt(|kappa|); inf for Euclidean."""
        if self.curvature == 0.0:
            return math.inf
        return 1.0 / math.sqrt(abs(self.curvature))

    def __repr__(self) -> str:
        return f"Manifold(curvature={self.curvature:g}, dim={self.dim})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Manifold)
            and other.curvature == self.curvature
            and other.dim == self.dim
        )

    def __hash__(self) -> int:
        return hash((self.curvature, self.dim))

    # -- basic algebra -----------------------------------------------------

    def _check_shape(self, *arrays: np.ndarray) -> None:
        for a in arrays:
            if a.shape[-1] != self.ambient_dim:
                raise ValueError(
                    f"expected trailing dimension {self.ambient_dim}, got {a.shape[-1]}"
                )

    def inner(self, u, v) -> np.ndarray:
        """Metric inner product: Minkowski for hyperbolic, dot otherwise."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        self._check_shape(u, v)
        prod = np.sum(u * v, axis=-1)
        if self.curvature < 0:
            prod = prod - 2.0 * u[..., 0] * v[..., 0]
        return prod

    def norm(self, v) -> np.ndarray:
        sq = self.inner(v, v)
        return np.sqrt(np.maximum(sq, 0.0))

    # -- point bookkeeping -------------------------------------------------

    def origin(self) -> np.ndarray:
        x = np.zeros(self.ambient_dim)
        if self.curvature != 0.0:
            x[0] = self.radius
        return x

    def constraint_residual(self, x) -> np.ndarray:
        """Deviation from the defining constraint (0 for valid points)."""
        x = np.asarray(x, dtype=float)
        self._check_shape(x)
        k = self.curvature
        if k == 0.0:
            return np.zeros(x.shape[:-1])
        if k > 0:
            return np.abs(np.linalg.norm(x, axis=-1) - self.radius)
        res = np.abs(self.inner(x, x) - 1.0 / k)
        # The upper sheet is part of the constraint.
        return np.where(x[..., 0] > 0, res, np.inf)

    def check_point(self, x, atol: float = CONSTRAINT_ATOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        res = self.constraint_residual(x)
        if np.any(res > atol):
            raise ValueError(
                f"point off {self.kind} manifold: residual {float(np.max(res)):.3e} > {atol:g}"
            )
        return x

    def check_tangent(self, x, v, atol: float = TANGENT_ATOL) -> np.ndarray:
        """Reject v unless it is metric-orthogonal to the base point x."""
        v = np.asarray(v, dtype=float)
        if self.curvature == 0.0:
            self._check_shape(v)
            return v
        res = np.abs(self.inner(x, v))
        scale = 1.0 + np.sqrt(np.sum(np.asarray(x) ** 2, axis=-1) * np.sum(v**2, axis=-1))
        if np.any(res > atol * scale):
            raise ValueError(
                f"vector not tangent at base point: residual {float(np.max(res)):.3e}"
            )
        return v

    def project(self, ambient) -> np.ndarray:
        """Nearest constraint-satisfying point to an ambient vector."""
        x = np.asarray(ambient, dtype=float)
        self._check_shape(x)
        k = self.curvature
        if k == 0.0:
            return x.copy()
        if k > 0:
            nrm = np.linalg.norm(x, axis=-1, keepdims=True)
            if np.any(nrm < _TINY):
                raise ValueError("cannot project the zero vector onto a sphere")
            return x * (self.radius / nrm)
        q = self.inner(x, x)[..., None]
        out = np.empty_like(x)
        timelike = q[..., 0] < -_TINY
        scaled = x * np.sqrt(np.where(timelike[..., None], (1.0 / -k) / np.where(timelike[..., None], -q, 1.0), 1.0))
        # Radial rescale is undefined for spacelike input; lift the spatial
        # part instead (recompute the time coordinate from the constraint).
        rest_sq = np.sum(x[..., 1:] ** 2, axis=-1)
        lifted = np.concatenate(
            [np.sqrt(1.0 / -k + rest_sq)[..., None], x[..., 1:]], axis=-1
        )
        out = np.where(timelike[..., None], scaled, lifted)
        out[..., 0] = np.abs(out[..., 0])
        return out

    def project_tangent(self, x, v) -> np.ndarray:
        """Metric-orthogonal projection of an ambient vector onto T_x."""
        v = np.asarray(v, dtype=float)
        k = self.curvature
        if k == 0.0:
            return v.copy()
        x = np.asarray(x, dtype=float)
        return v - k * self.inner(x, v)[..., None] * x

    # -- geometry ----------------------------------------------------------

    def distance(self, x, y, validate: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if validate:
            self.check_point(x)
            self.check_point(y)
        k = self.curvature
        if k == 0.0:
            return np.linalg.norm(x - y, axis=-1)
        if k > 0:
            c = k * self.inner(x, y)
            c = clamp_acos(c) if validate else np.clip(c, -1.0, 1.0)
            return np.arccos(c) / math.sqrt(k)
        c = k * self.inner(x, y)
        c = clamp_acosh(c) if validate else np.maximum(c, 1.0)
        return np.arccosh(c) / math.sqrt(-k)

    def exp_map(self, x, v, validate: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if validate:
            self.check_point(x)
            self.check_tangent(x, v)
        k = self.curvature
        if k == 0.0:
            return x + v
        s = math.sqrt(abs(k)) * self.norm(v)[..., None]
        if k > 0:
            return np.cos(s) * x + _sinc(s) * v
        return np.cosh(s) * x + _sinhc(s) * v

    def log_map(self, x, y, validate: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if validate:
            self.check_point(x)
            self.check_point(y)
        k = self.curvature
        if k == 0.0:
            return y - x
        if k > 0:
            c = k * self.inner(x, y)
            if np.any(c < -1.0 + 1e-12):
                raise ValueError("log map undefined for antipodal points")
            c = clamp_acos(c) if validate else np.clip(c, -1.0, 1.0)
        else:
            c = k * self.inner(x, y)
            c = clamp_acosh(c) if validate else np.maximum(c, 1.0)
        d = self.distance(x, y, validate=False)
        w = y - c[..., None] * x
        wn = self.norm(w)[..., None]
        coef = np.where(wn < _TINY, 0.0, d[..., None] / np.where(wn < _TINY, 1.0, wn))
        return coef * w

    def parallel_transport(self, x, y, v, validate: bool = True) -> np.ndarray:
        """Levi-Civita transport of v along the geodesic from x to y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(v, dtype=float)
        if validate:
            self.check_point(x)
            self.check_point(y)
            self.check_tangent(x, v)
        k = self.curvature
        if k == 0.0:
            return v.copy()
        den = 1.0 + k * self.inner(x, y)
        if np.any(np.abs(den) < 1e-12):
            raise ValueError("parallel transport undefined for antipodal points")
        return v - (k * self.inner(y, v) / den)[..., None] * (x + y)

    def egrad_to_rgrad(self, x, g, validate: bool = True) -> np.ndarray:
        """Convert an ambient Euclidean gradient to the Riemannian gradient."""
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        if validate:
            self.check_point(x)
        k = self.curvature
        if k == 0.0:
            return g.copy()
        if k < 0:
            g = g.copy()
            g[..., 0] = -g[..., 0]
        return self.project_tangent(x, g)

    # -- batched helpers ---------------------------------------------------

    def pairwise_distance(self, X, validate: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if validate:
            self.check_point(X)
        d = self.distance(X[:, None, :], X[None, :, :], validate=False)
        np.fill_diagonal(d, 0.0)
        return d


class ProductManifold:
    """Cartesian product of constant-curvature components.

    The signature is the ordered list of (curvature, dim) pairs. Distances
    decompose as the l2 norm of component distances; every pointwise
    operation applies componentwise on the factorized coordinates.
    """

    def __init__(self, components: Iterable[Manifold | tuple[float, int]]):
        comps = []
        for c in components:
            if isinstance(c, Manifold):
                comps.append(c)
            else:
                kappa, dim = c
                comps.append(Manifold(kappa, dim))
        if not comps:
            raise ValueError("a product manifold needs at least one component")
        self.components: list[Manifold] = comps
        self._slices: list[slice] = []
        start = 0
        for m in comps:
            self._slices.append(slice(start, start + m.ambient_dim))
            start += m.ambient_dim
        self.ambient_dim = start
        self.dim = sum(m.dim for m in comps)

    @property
    def signature(self) -> list[tuple[float, int]]:
        return [(m.curvature, m.dim) for m in self.components]

    @property
    def n_components(self) -> int:
        return len(self.components)

    def __repr__(self) -> str:
        parts = ", ".join(f"({m.curvature:g}, {m.dim})" for m in self.components)
        return f"ProductManifold([{parts}])"

    def __eq__(self, other) -> bool:
        return isinstance(other, ProductManifold) and other.signature == self.signature

    def split(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_dim:
            raise ValueError(
                f"expected trailing dimension {self.ambient_dim}, got {x.shape[-1]}"
            )
        return [x[..., s] for s in self._slices]

    def join(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=-1)

    def with_curvatures(self, kappas: Sequence[float]) -> "ProductManifold":
        if len(kappas) != self.n_components:
            raise ValueError("one curvature per component required")
        return ProductManifold(
            [Manifold(k, m.dim) for k, m in zip(kappas, self.components)]
        )

    def rescale_to(self, other: "ProductManifold", x) -> np.ndarray:
        """Move points to a same-shape signature with different curvatures."""
        parts = []
        for m_old, m_new, xc in zip(self.components, other.components, self.split(x)):
            if m_old.dim != m_new.dim or (m_old.curvature == 0) != (m_new.curvature == 0):
                raise ValueError("signatures differ in shape, not just curvature")
            if m_old.curvature == 0:
                parts.append(xc)
            else:
                parts.append(xc * (m_new.radius / m_old.radius))
        return self.join(parts)

    # -- componentwise operations -------------------------------------------

    def origin(self) -> np.ndarray:
        return self.join([m.origin() for m in self.components])

    def point_residuals(self, x) -> np.ndarray:
        """Per-component constraint residuals, stacked on the last axis."""
        return np.stack(
            [m.constraint_residual(xc) for m, xc in zip(self.components, self.split(x))],
            axis=-1,
        )

    def validate_point(self, x, atol: float = CONSTRAINT_ATOL) -> bool:
        return bool(np.all(self.point_residuals(x) <= atol))

    def check_point(self, x, atol: float = CONSTRAINT_ATOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        res = self.point_residuals(x)
        if np.any(res > atol):
            bad = np.max(res.reshape(-1, self.n_components), axis=0)
            which = [i for i, r in enumerate(bad) if r > atol]
            raise ValueError(
                f"point violates constraints in components {which}: residuals "
                + ", ".join(f"{bad[i]:.3e}" for i in which)
            )
        return x

    def project(self, ambient) -> np.ndarray:
        return self.join(
            [m.project(xc) for m, xc in zip(self.components, self.split(ambient))]
        )

    def _apply(self, op: str, *arrays, validate: bool = True) -> np.ndarray:
        splits = [self.split(a) for a in arrays]
        out = [
            getattr(m, op)(*(s[i] for s in splits), validate=validate)
            for i, m in enumerate(self.components)
        ]
        return self.join(out)

    def exp_map(self, x, v, validate: bool = True) -> np.ndarray:
        return self._apply("exp_map", x, v, validate=validate)

    def log_map(self, x, y, validate: bool = True) -> np.ndarray:
        return self._apply("log_map", x, y, validate=validate)

    def parallel_transport(self, x, y, v, validate: bool = True) -> np.ndarray:
        return self._apply("parallel_transport", x, y, v, validate=validate)

    def egrad_to_rgrad(self, x, g, validate: bool = True) -> np.ndarray:
        return self._apply("egrad_to_rgrad", x, g, validate=validate)

    def component_distances(self, x, y, validate: bool = True) -> np.ndarray:
        return np.stack(
            [
                m.distance(xc, yc, validate=validate)
                for m, xc, yc in zip(self.components, self.split(x), self.split(y))
            ],
            axis=-1,
        )

    def distance(self, x, y, validate: bool = True) -> np.ndarray:
        d = self.component_distances(x, y, validate=validate)
        return np.linalg.norm(d, axis=-1)

    def inner(self, u, v) -> np.ndarray:
        return sum(
            m.inner(uc, vc)
            for m, uc, vc in zip(self.components, self.split(u), self.split(v))
        )

    def norm(self, v) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    def pairwise_distance(self, X, validate: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if validate:
            self.check_point(X)
        d = self.distance(X[:, None, :], X[None, :, :], validate=False)
        np.fill_diagonal(d, 0.0)
        return d
