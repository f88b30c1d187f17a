"""Wrapped normal distributions and synthetic mixture datasets.

A wrapped normal on a curved space is a Gaussian in the tangent space at the
origin, parallel-transported to the mean and pushed onto the manifold through
the exponential map. Its log-likelihood inverts that chain and adjusts by the
log-determinant of the exponential map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .manifolds import Manifold, ProductManifold, _sinc, _sinhc

_TINY = 1e-15


def _as_cov_blocks(pm: ProductManifold, covs) -> list[np.ndarray]:
    """Normalize covariance input to one PSD block per component."""
    if isinstance(covs, np.ndarray) and pm.n_components == 1:
        covs = [covs]
    if len(covs) != pm.n_components:
        raise ValueError(f"expected {pm.n_components} covariance blocks, got {len(covs)}")
    blocks = []
    for m, c in zip(pm.components, covs):
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            c = float(c) * np.eye(m.dim)
        elif c.ndim == 1:
            c = np.diag(c)
        if c.shape != (m.dim, m.dim):
            raise ValueError(f"covariance block {c.shape} does not match dim {m.dim}")
        if not np.allclose(c, c.T, atol=1e-10):
            raise ValueError("covariance block is not symmetric")
        if np.min(np.linalg.eigvalsh(c)) < -1e-10:
            raise ValueError("covariance block is not positive semi-definite")
        blocks.append(c)
    return blocks


def _tangent_at_origin(pm: ProductManifold, flat: np.ndarray) -> np.ndarray:
    """Lift intrinsic coordinates to an origin tangent ((0, v) per curved factor)."""
    parts = []
    offset = 0
    for m in pm.components:
        v = flat[..., offset : offset + m.dim]
        offset += m.dim
        if m.curvature != 0.0:
            v = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
        parts.append(v)
    return pm.join(parts)


def _drop_origin_coord(pm: ProductManifold, v: np.ndarray) -> np.ndarray:
    parts = []
    for m, vc in zip(pm.components, pm.split(v)):
        parts.append(vc[..., 1:] if m.curvature != 0.0 else vc)
    return np.concatenate(parts, axis=-1)


def wrapped_normal_sample(
    pm: ProductManifold,
    mean,
    covs,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw from the wrapped normal WN(mean, covs) on a product manifold."""
    mean = pm.check_point(np.asarray(mean, dtype=float))
    blocks = _as_cov_blocks(pm, covs)
    n = 1 if size is None else int(size)
    flat = np.concatenate(
        [
            rng.multivariate_normal(np.zeros(m.dim), c, size=n, method="svd")
            for m, c in zip(pm.components, blocks)
        ],
        axis=-1,
    )
    v = _tangent_at_origin(pm, flat)
    origin = pm.origin()
    u = pm.parallel_transport(origin, mean, v, validate=False)
    # Re-project to absorb rounding drift from the transport/exp chain.
    z = pm.project(pm.exp_map(mean, u, validate=False))
    return z[0] if size is None else z


def wrapped_normal_log_likelihood(pm: ProductManifold, mean, covs, z) -> np.ndarray:
    """Log-density of z under WN(mean, covs).

    Inverts the sampling chain (log map, transport back to the origin, drop
    the constrained coordinate) and corrects the Gaussian log-density by the
    volume change of the exponential map.
    """
    mean = pm.check_point(np.asarray(mean, dtype=float))
    z = pm.check_point(np.asarray(z, dtype=float))
    blocks = _as_cov_blocks(pm, covs)
    u = pm.log_map(mean, z, validate=False)
    v = pm.parallel_transport(mean, pm.origin(), u, validate=False)

    ll = np.zeros(np.broadcast_shapes(mean.shape[:-1], z.shape[:-1]))
    offset_flat = 0
    for m, c, uc, vc in zip(pm.components, blocks, pm.split(u), pm.split(v)):
        flat = vc[..., 1:] if m.curvature != 0.0 else vc
        ll = ll + stats.multivariate_normal.logpdf(flat, mean=np.zeros(m.dim), cov=c)
        if m.curvature != 0.0 and m.dim > 1:
            r = math.sqrt(abs(m.curvature)) * m.norm(uc)
            ratio = _sinhc(r) if m.curvature < 0 else _sinc(r)
            ll = ll - (m.dim - 1) * np.log(np.maximum(ratio, _TINY))
    return ll


@dataclass
class MixtureConfig:
    """Settings for synthetic Gaussian-mixture generation."""

    n_samples: int = 100
    n_clusters: int = 2
    n_classes: int = 2
    variance_scale: float = 0.1
    task: str = "classification"
    seed: int | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 1 <= self.n_classes <= self.n_clusters:
            raise ValueError("need n_clusters >= n_classes >= 1")
        if self.variance_scale <= 0:
            raise ValueError("variance_scale must be positive")
        if self.task not in ("classification", "regression"):
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    cluster_ids: np.ndarray


def _component_scale(m: Manifold) -> float:
    # Curvature-proportional spread degenerates at kappa = 0; Euclidean
    # components use unit scale instead.
    return abs(m.curvature) if m.curvature != 0.0 else 1.0


def _wishart_bartlett(scale: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    df = max(dim, 2)
    A = np.zeros((dim, dim))
    for i in range(dim):
        A[i, i] = math.sqrt(rng.chisquare(df - i))
        A[i, :i] = rng.normal(size=i)
    return scale * (A @ A.T)


def gaussian_mixture(
    pm: ProductManifold, cfg: MixtureConfig, rng: np.random.Generator | None = None
) -> LabeledDataset:
    """Sample a labeled wrapped-Gaussian mixture on a product manifold."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    p_raw = rng.uniform(size=cfg.n_clusters)
    p_norm = p_raw / p_raw.sum()
    # Inverse-CDF categorical draws, one uniform per sample.
    cum = np.cumsum(p_norm)
    cluster_ids = np.searchsorted(cum, rng.uniform(size=cfg.n_samples), side="right")
    cluster_ids = np.minimum(cluster_ids, cfg.n_clusters - 1)

    mean_cov = [_component_scale(m) * np.eye(m.dim) for m in pm.components]
    means = wrapped_normal_sample(pm, pm.origin(), mean_cov, rng, size=cfg.n_clusters)

    cluster_covs = [
        [
            _wishart_bartlett(
                cfg.variance_scale * math.sqrt(_component_scale(m)), m.dim, rng
            )
            for m in pm.components
        ]
        for _ in range(cfg.n_clusters)
    ]

    X = np.empty((cfg.n_samples, pm.ambient_dim))
    for j in range(cfg.n_clusters):
        idx = np.flatnonzero(cluster_ids == j)
        if idx.size:
            X[idx] = wrapped_normal_sample(
                pm, means[j], cluster_covs[j], rng, size=idx.size
            )

    if cfg.task == "classification":
        label_map = np.arange(1, cfg.n_clusters + 1)
        if cfg.n_clusters > cfg.n_classes:
            label_map[cfg.n_classes :] = rng.integers(
                1, cfg.n_classes + 1, size=cfg.n_clusters - cfg.n_classes
            )
        y = label_map[cluster_ids].astype(float)
    else:
        y = assign_regression_labels(
            X, cluster_ids, rng, noise_std=cfg.variance_scale
        )
    return LabeledDataset(X=X, y=y, cluster_ids=cluster_ids)


def assign_regression_labels(
    X, cluster_ids, rng: np.random.Generator, noise_std: float = 0.1
) -> np.ndarray:
    """Per-cluster noisy linear responses, min-max scaled to [0, 1]."""
    X = np.asarray(X, dtype=float)
    cluster_ids = np.asarray(cluster_ids)
    n_clusters = int(cluster_ids.max()) + 1
    slopes = rng.normal(0.0, 2.0, size=(n_clusters, X.shape[1]))
    intercepts = rng.normal(0.0, 20.0, size=n_clusters)
    y = np.einsum("ij,ij->i", X, slopes[cluster_ids]) + intercepts[cluster_ids]
    if noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=y.shape)
    span = y.max() - y.min()
    if span < _TINY:
        return np.full(y.shape, 0.5)
    return (y - y.min()) / span
