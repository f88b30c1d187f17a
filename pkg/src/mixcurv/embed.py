"""Coordinate learning: fit point positions to a target distance matrix.

Coordinates are free parameters on a product manifold, optimized by
Riemannian gradient descent on a relative-distortion loss. Fidelity is
measured by average distortion and, for graphs, mean average precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .manifolds import Manifold, ProductManifold, check_distance_matrix
from .optim import RsgdConfig
from .sampling import wrapped_normal_sample

_TINY = 1e-15
# Constraint tolerance for optimizer iterates (looser than the construction
# tolerance: residual measurement saturates at far coordinates).
ITERATE_ATOL = 1e-8


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


# -- fidelity measures ---------------------------------------------------------


def distortion_loss(pm: ProductManifold, X, D, validate: bool = True) -> float:
    """Sum over pairs of |(embedded / target)^2 - 1|.

    Pairs with zero target distance between distinct points are excluded
    (the ratio is undefined there).
    """
    D = check_distance_matrix(D) if validate else np.asarray(D, dtype=float)
    X = np.asarray(X, dtype=float)
    if validate:
        pm.check_point(X, atol=ITERATE_ATOL)
    delta = pm.pairwise_distance(X, validate=False)
    mask = np.triu(D > 0, k=1)
    if not mask.any():
        raise ValueError("no positive off-diagonal target distances")
    ratio = np.zeros_like(D)
    np.divide(delta, D, out=ratio, where=mask)
    return float(np.abs(ratio[mask] ** 2 - 1.0).sum())


def average_distortion(pm: ProductManifold, X, D, validate: bool = True) -> float:
    """Mean absolute deviation of embedded from target distances (n^2 norm)."""
    D = check_distance_matrix(D) if validate else np.asarray(D, dtype=float)
    if validate:
        pm.check_point(np.asarray(X, dtype=float), atol=ITERATE_ATOL)
    delta = pm.pairwise_distance(X, validate=False)
    return float(np.abs(delta - D).sum() / D.shape[0] ** 2)


def mean_average_precision(pm: ProductManifold, X, adjacency) -> float:
    """How well embedded neighborhoods recover graph neighborhoods.

    For each node, every graph neighbor is scored by the precision of the
    smallest embedded-distance ball that contains it; ties in embedded
    distance are broken by node index.
    """
    A = np.asarray(adjacency)
    A = ((A + A.T) > 0).astype(int)
    np.fill_diagonal(A, 0)
    deg = A.sum(axis=1)
    if np.any(deg == 0):
        raise ValueError(f"isolated nodes: {np.flatnonzero(deg == 0).tolist()}")
    X = np.asarray(X, dtype=float)
    pm.check_point(X, atol=ITERATE_ATOL)
    delta = pm.pairwise_distance(X, validate=False)
    n = A.shape[0]
    total = 0.0
    for a in range(n):
        others = np.array([j for j in range(n) if j != a])
        order = others[np.lexsort((others, delta[a, others]))]
        rank = {int(j): r + 1 for r, j in enumerate(order)}
        neighbors = set(np.flatnonzero(A[a]).tolist())
        score = 0.0
        for b in neighbors:
            r = rank[b]
            ball = set(int(j) for j in order[:r])
            score += len(neighbors & ball) / r
        total += score / deg[a]
    return total / n


# -- graphs ---------------------------------------------------------------------


def graph_to_distance_matrix(edges, n_nodes: int | None = None, weights=None) -> np.ndarray:
    """All-pairs shortest-path distances of an undirected connected graph."""
    edges = np.asarray(edges, dtype=int)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise ValueError("edges must be an (m, 2) array")
    n = int(edges.max()) + 1 if n_nodes is None else int(n_nodes)
    if weights is None:
        w = np.ones(len(edges))
        unweighted = True
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("edge weights must be positive")
        unweighted = bool(np.all(w == 1.0))
    # Duplicate and reversed edges keep the minimum weight.
    dense = np.zeros((n, n))
    for (i, j), wij in zip(edges, w):
        if i == j:
            continue
        cur = dense[i, j]
        dense[i, j] = dense[j, i] = wij if cur == 0.0 else min(cur, wij)
    adj = sp.csr_matrix(dense)
    n_comp, labels = csgraph.connected_components(adj, directed=False)
    if n_comp > 1:
        groups = [np.flatnonzero(labels == c).tolist() for c in range(n_comp)]
        raise ValueError(f"graph is disconnected; components: {groups}")
    D = csgraph.shortest_path(adj, method="D", directed=False, unweighted=unweighted)
    return D


# -- training -------------------------------------------------------------------


@dataclass
class EmbeddingResult:
    X: np.ndarray
    final_manifold: ProductManifold
    loss_history: list[float] = field(default_factory=list)


def _pair_gradient(pm, X, D, sign_weight):
    """Ambient gradient of the masked distortion loss, one row per point.

    ``sign_weight[i, j]`` multiplies the d(delta_ij^2) term in point i's
    gradient; an asymmetric matrix implements one-sided gradient masking.
    """
    G = np.zeros_like(X)
    for m, sl in zip(pm.components, pm._slices):
        Xc = X[:, sl]
        k = m.curvature
        if k == 0.0:
            # d(delta^2)/dx_i = 2 (x_i - x_j)
            row = sign_weight.sum(axis=1, keepdims=True)
            G[:, sl] += 2.0 * (row * Xc - sign_weight @ Xc)
            continue
        inner = Xc @ Xc.T
        if k < 0:
            inner = inner - 2.0 * np.outer(Xc[:, 0], Xc[:, 0])
            c = np.maximum(k * inner, 1.0)
            coef = np.ones_like(c)
            big = c > 1.0 + 1e-12
            coef[big] = np.arccosh(c[big]) / np.sqrt(c[big] ** 2 - 1.0)
        else:
            c = np.clip(k * inner, -1.0, 1.0)
            coef = np.ones_like(c)
            off = c < 1.0 - 1e-12
            coef[off] = np.arccos(c[off]) / np.sqrt(
                np.maximum(1.0 - c[off] ** 2, _TINY)
            )
            # The cut locus (antipodal pairs) makes this coefficient blow
            # up; bounding it keeps near-antipodal dynamics stable.
            np.minimum(coef, 10.0, out=coef)
        contrib = -2.0 * (sign_weight * coef) @ Xc
        if k < 0:
            contrib[:, 0] = -contrib[:, 0]
        G[:, sl] += contrib
    return G


def fit_coordinates(
    pm: ProductManifold,
    D,
    cfg: RsgdConfig,
    rng=None,
    test_indices=None,
    curvature_lr: float = 0.0,
    max_step: float = 1.0,
) -> EmbeddingResult:
    """Learn coordinates whose pairwise distances approximate D.

    Points start from a wrapped normal around the origin with spread 1/dim.
    When ``test_indices`` is given, training runs non-transductively: pairs
    touching a test point contribute no gradient to any training point,
    while test points receive gradients from all pairs.

    ``curvature_lr`` > 0 additionally updates each curved component's
    curvature by gradient steps on log |kappa| (sign fixed), with points
    radially rescaled to the moving constraint set.
    """
    rng = np.random.default_rng(rng)
    D = check_distance_matrix(D)
    n = D.shape[0]
    X = wrapped_normal_sample(
        pm, pm.origin(), [np.eye(m.dim) / pm.dim for m in pm.components], rng, size=n
    )

    mask_grad = np.ones((n, n))
    is_train = np.ones(n, dtype=bool)
    if test_indices is not None:
        test_indices = np.asarray(sorted(set(int(i) for i in test_indices)), dtype=int)
        if test_indices.size and (
            test_indices.min() < 0 or test_indices.max() >= n
        ):
            raise ValueError("test_indices out of range")
        is_train[test_indices] = False
        train = np.flatnonzero(is_train)
        mask_grad[np.ix_(train, test_indices)] = 0.0

    pair_ok = (D > 0).astype(float)
    np.fill_diagonal(pair_ok, 0.0)
    if not pair_ok.any():
        raise ValueError("no positive off-diagonal target distances")
    diam = max(float(D.max()), 1.0)
    inv_d2 = np.zeros_like(D)
    np.divide(1.0, D**2, out=inv_d2, where=pair_ok > 0)

    history: list[float] = []
    log_scales = [
        math.log(abs(m.curvature)) if m.curvature != 0.0 else 0.0
        for m in pm.components
    ]
    initial_log_scales = list(log_scales)

    triu = np.triu(pair_ok > 0, k=1)
    for epoch in range(cfg.total_epochs):
        lr = cfg.lr_at(epoch)
        delta_sq = np.stack(
            [
                m.distance(Xc[:, None, :], Xc[None, :, :], validate=False) ** 2
                for m, Xc in zip(pm.components, (X[:, sl] for sl in pm._slices))
            ]
        )
        ratio = delta_sq.sum(axis=0) * inv_d2
        loss = float(np.abs(ratio - 1.0)[triu].sum())
        history.append(loss)
        if not math.isfinite(loss):
            raise DivergenceError(f"loss diverged at epoch {epoch}", history)
        sign = np.sign(ratio - 1.0)

        sign_weight = sign * inv_d2 * pair_ok * mask_grad
        G = _pair_gradient(pm, X, D, sign_weight)
        rgrad = pm.egrad_to_rgrad(X, G, validate=False)
        # Cap per-point step length where runaway steps can overflow:
        # hyperbolic blocks at a few curvature radii (cosh explodes), flat
        # blocks at the data diameter (no point moves further usefully).
        # Spherical blocks wrap harmlessly and stay uncapped.
        step = -lr * rgrad
        for m, sl in zip(pm.components, pm._slices):
            if m.curvature > 0:
                continue
            cap = max_step * (m.radius if m.curvature < 0 else diam)
            blk = step[:, sl]
            norms = np.sqrt(np.maximum(m.inner(blk, blk), 0.0))
            scale = np.where(norms > cap, cap / np.maximum(norms, _TINY), 1.0)
            step[:, sl] = blk * scale[:, None]
        X = pm.project(pm.exp_map(X, step, validate=False))

        if curvature_lr > 0.0:
            # With points rescaled to follow the constraint set, component
            # squared distances scale as exp(-s), so
            # d loss / d s_c = -sum sign(ratio - 1) * delta_c^2 / D^2.
            # In non-transductive mode only train-train pairs contribute:
            # the shared curvature must not leak test information.
            curv_pairs = triu & np.outer(is_train, is_train)
            changed = False
            for ci, m in enumerate(pm.components):
                if m.curvature == 0.0:
                    continue
                ds = -float((sign * delta_sq[ci] * inv_d2)[curv_pairs].sum())
                move = float(np.clip(curvature_lr * ds, -0.05, 0.05))
                log_scales[ci] = float(
                    np.clip(
                        log_scales[ci] - move,
                        initial_log_scales[ci] - 5.0,
                        initial_log_scales[ci] + 5.0,
                    )
                )
                changed = True
            if changed:
                pm_new = pm.with_curvatures(
                    [
                        math.copysign(math.exp(s), m.curvature)
                        if m.curvature != 0.0
                        else 0.0
                        for s, m in zip(log_scales, pm.components)
                    ]
                )
                X = pm_new.project(pm.rescale_to(pm_new, X))
                pm = pm_new

    return EmbeddingResult(X=X, final_manifold=pm, loss_history=history)
