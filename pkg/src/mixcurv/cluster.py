"""Fuzzy K-means on product manifolds.

Memberships have a closed form in the cluster centers, so the usual
alternate-minimization collapses into one smooth objective over the centers
alone, minimized by a single Riemannian optimizer run (no inner mean
computations per iteration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .manifolds import ProductManifold
from .optim import RadanHyperparams, radan_step

_TINY = 1e-12


@dataclass
class RFKConfig:
    n_clusters: int = 2
    fuzziness: float = 2.0
    optimizer: RadanHyperparams = field(default_factory=lambda: RadanHyperparams(lr=0.05))
    max_iters: int = 2000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ValueError("n_clusters must be >= 2")
        if self.fuzziness <= 1.0:
            raise ValueError("fuzziness must be > 1")


@dataclass
class RFKResult:
    centers: np.ndarray
    membership: np.ndarray
    objective_history: list[float]


def _center_distances(pm: ProductManifold, X, centers) -> np.ndarray:
    return pm.distance(
        np.asarray(X, dtype=float)[:, None, :],
        np.asarray(centers, dtype=float)[None, :, :],
        validate=False,
    )


def membership(pm: ProductManifold, X, centers, fuzziness: float) -> np.ndarray:
    """Row-stochastic soft assignments; coincident pairs get the hard limit."""
    d = _center_distances(pm, X, centers)
    n, C = d.shape
    U = np.empty((n, C))
    zero = d < _TINY
    hard = zero.any(axis=1)
    U[hard] = zero[hard] / zero[hard].sum(axis=1, keepdims=True)
    soft = ~hard
    if soft.any():
        p = -2.0 / (fuzziness - 1.0)
        ds = d[soft]
        rel = ds / ds.min(axis=1, keepdims=True)
        w = rel**p
        U[soft] = w / w.sum(axis=1, keepdims=True)
    return U


def rfk_objective(pm: ProductManifold, X, centers, fuzziness: float) -> float:
    """Membership-eliminated clustering objective (a function of centers only)."""
    d = _center_distances(pm, X, centers)
    dmin = d.min(axis=1, keepdims=True)
    out = np.zeros(d.shape[0])
    ok = dmin[:, 0] >= _TINY
    if ok.any():
        p = 2.0 / (1.0 - fuzziness)
        rel = d[ok] / dmin[ok]
        inner = (rel**p).sum(axis=1)
        out[ok] = dmin[ok, 0] ** 2 * inner ** (1.0 - fuzziness)
    return float(out.sum())


def naive_objective(pm: ProductManifold, X, centers, U, fuzziness: float) -> float:
    """Classic double-sum objective at explicit memberships."""
    d = _center_distances(pm, X, centers)
    return float((np.asarray(U) ** fuzziness * d**2).sum())


def objective_gradient(pm: ProductManifold, X, centers, fuzziness: float) -> np.ndarray:
    """Per-center Riemannian gradients of the membership-eliminated objective.

    Equals the fixed-membership gradient at the optimal memberships
    (envelope identity): sum_i u_ij^m * d(d_ij^2) = -2 sum_i u_ij^m log_cj(x_i).
    """
    X = np.asarray(X, dtype=float)
    centers = np.asarray(centers, dtype=float)
    U = membership(pm, X, centers, fuzziness)
    W = U**fuzziness
    grads = np.empty_like(centers)
    for j in range(centers.shape[0]):
        logs = pm.log_map(np.broadcast_to(centers[j], X.shape), X, validate=False)
        grads[j] = -2.0 * (W[:, j][:, None] * logs).sum(axis=0)
    return grads


def _kmeanspp_init(pm, X, C, rng) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    for _ in range(C - 1):
        d = _center_distances(pm, X, X[chosen]).min(axis=1)
        w = d**2
        if w.sum() <= 0:
            chosen.append(int(rng.integers(n)))
            continue
        w = w / w.sum()
        chosen.append(int(rng.choice(n, p=w)))
    return X[chosen].copy()


def fit_rfk(pm: ProductManifold, X, cfg: RFKConfig) -> RFKResult:
    """Cluster by minimizing the membership-eliminated objective with the
    adaptive-momentum optimizer; distance-squared-proportional seeding."""
    X = pm.check_point(np.asarray(X, dtype=float), atol=1e-8)
    n = len(X)
    if n < cfg.n_clusters:
        raise ValueError("need at least as many points as clusters")
    rng = np.random.default_rng(cfg.seed)
    centers = _kmeanspp_init(pm, X, cfg.n_clusters, rng)

    # One optimizer state over the stacked centers (a product of C copies).
    pm_stack = ProductManifold(
        [m for _ in range(cfg.n_clusters) for m in pm.components]
    )
    state = None
    flat = centers.reshape(-1)
    history = [rfk_objective(pm, X, centers, cfg.fuzziness)]
    reinitialized = False

    for _ in range(cfg.max_iters):
        U = membership(pm, X, centers, cfg.fuzziness)
        if not reinitialized:
            weak = np.flatnonzero(U.max(axis=0) < 1.0 / cfg.n_clusters)
            if weak.size:
                j = int(weak[0])
                d = _center_distances(pm, X, centers).min(axis=1)
                w = d**2
                centers[j] = (
                    X[int(rng.choice(n, p=w / w.sum()))]
                    if w.sum() > 0
                    else X[int(rng.integers(n))]
                )
                flat = centers.reshape(-1)
                state = None
                reinitialized = True

        grads = objective_gradient(pm, X, centers, cfg.fuzziness)
        state, flat = radan_step(
            pm_stack, state, flat, grads.reshape(-1), cfg.optimizer
        )
        centers = flat.reshape(cfg.n_clusters, -1)
        history.append(rfk_objective(pm, X, centers, cfg.fuzziness))
        if abs(history[-1] - history[-2]) < cfg.tol:
            break

    return RFKResult(
        centers=centers,
        membership=membership(pm, X, centers, cfg.fuzziness),
        objective_history=history,
    )
