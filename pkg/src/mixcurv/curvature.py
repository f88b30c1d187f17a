"""Curvature estimation from pairwise distances.

Tree-likeness of a whole metric is measured by four-point hyperbolicity via
Gromov products; local curvature sign by the parallelogram defect of geodesic
triangles; and a product signature matching the data is built greedily by
scoring candidate components with a pluggable pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .manifolds import Manifold, ProductManifold, check_distance_matrix
from .optim import RsgdConfig


def gromov_product(D, x: int, y: int, w: int) -> float:
    """(x, y)_w = (d(w,x) + d(w,y) - d(x,y)) / 2."""
    D = np.asarray(D, dtype=float)
    return 0.5 * (D[w, x] + D[w, y] - D[x, y])


def gromov_matrix(D, base: int = 0) -> np.ndarray:
    """All-pairs Gromov products with respect to a base point."""
    D = check_distance_matrix(D)
    row = D[base]
    return 0.5 * (row[:, None] + row[None, :] - D)


def delta_hyperbolicity(
    D,
    base: int = 0,
    n_samples: int | None = None,
    rng=None,
    all_bases: bool = False,
) -> float:
    """Worst four-point defect: max of (min-max product of G) - G.

    Exact mode runs the full min-max matrix product at the fixed base.
    ``n_samples`` switches to sampled triples, a lower bound on the exact
    value. ``all_bases`` maximizes the exact value over every base point
    (quadratic-times-n cost; intended for small n).
    """
    D = check_distance_matrix(D)
    n = D.shape[0]
    if n < 4:
        raise ValueError("need at least 4 points")
    if all_bases:
        if n > 64:
            raise ValueError("all-bases mode is limited to n <= 64")
        return max(delta_hyperbolicity(D, base=w) for w in range(n))
    G = gromov_matrix(D, base=base)
    if n_samples is not None:
        rng = np.random.default_rng(rng)
        idx = rng.integers(0, n, size=(int(n_samples), 3))
        vals = np.minimum(G[idx[:, 0], idx[:, 1]], G[idx[:, 1], idx[:, 2]]) - G[
            idx[:, 0], idx[:, 2]
        ]
        return float(max(np.max(vals), 0.0))
    best = -math.inf
    buf = np.empty_like(G)
    for i in range(n):
        np.minimum(G[i][:, None], G, out=buf)
        best = max(best, float(np.max(buf.max(axis=0) - G[i])))
    return max(best, 0.0)


def relative_delta(D, delta: float) -> float:
    """2 * delta / diameter; scale-free tree-likeness in [0, 1]."""
    D = np.asarray(D, dtype=float)
    diam = float(D.max())
    if diam <= 0:
        raise ValueError("relative delta undefined for an all-zero matrix")
    return 2.0 * float(delta) / diam


# -- sectional curvature -------------------------------------------------------


def sectional_curvature(m: Manifold, a, b, c) -> float:
    """Parallelogram-law defect of the geodesic triangle (a, b, c).

    Zero in flat space, positive on spheres, negative in hyperbolic space.
    The midpoint of (b, c) is the true geodesic midpoint.
    """
    a = np.asarray(a, dtype=float)
    mid = m.exp_map(b, 0.5 * m.log_map(b, c))
    return float(
        m.distance(a, mid) ** 2
        + m.distance(b, c) ** 2 / 4.0
        - (m.distance(a, b) ** 2 + m.distance(a, c) ** 2) / 2.0
    )


def sectional_curvature_graph(
    D, adjacency, m: int, b: int, c: int, a: int | None = None
):
    """Graph analog of the triangle defect, `m` standing in as midpoint.

    ``b`` and ``c`` must both be neighbors of ``m`` (so m approximates the
    midpoint of the length-2 path b-m-c). With ``a`` given, returns that
    reference node's value; otherwise averages over all a != m, skipping
    any a at zero distance from m.
    """
    D = check_distance_matrix(D)
    A = np.asarray(adjacency)
    if not (A[m, b] > 0 and A[m, c] > 0):
        raise ValueError("b and c must both be adjacent to m")
    if b == c or m in (b, c):
        raise ValueError("m, b, c must be distinct")

    def one(ai: int) -> float:
        dam = D[ai, m]
        if dam == 0.0:
            raise ValueError(f"reference node {ai} coincides with m")
        return float(
            (dam**2 + D[b, c] ** 2 / 4.0 - (D[ai, b] ** 2 + D[ai, c] ** 2) / 2.0)
            / (2.0 * dam)
        )

    if a is not None:
        return one(a)
    n = D.shape[0]
    total = 0.0
    for ai in range(n):
        if ai == m or D[ai, m] == 0.0:
            continue
        total += one(ai)
    return total / (n - 1)


def sectional_curvature_all(D, adjacency) -> list[tuple[int, int, int, float]]:
    """Node-averaged defects for every midpoint node and neighbor pair."""
    A = np.asarray(adjacency)
    n = A.shape[0]
    out = []
    for m in range(n):
        nb = np.flatnonzero(A[m])
        for i in range(len(nb)):
            for j in range(i + 1, len(nb)):
                b, c = int(nb[i]), int(nb[j])
                out.append((m, b, c, sectional_curvature_graph(D, A, m, b, c)))
    return out


# -- greedy signature selection --------------------------------------------------


class PipelineError(RuntimeError):
    """A greedy pipeline evaluation failed; carries the partial signature."""

    def __init__(self, message: str, partial_signature: list):
        super().__init__(message)
        self.partial_signature = partial_signature


@dataclass
class GreedyConfig:
    """Settings for greedy signature construction.

    ``pipeline`` maps (list of components, seed) to a scalar loss; the two
    built-ins embed the distance matrix and score either average distortion
    ("distortion") or a held-out product-tree predictor ("predictor").
    """

    candidates: Sequence[Manifold] = (
        Manifold(-1.0, 2),
        Manifold(0.0, 2),
        Manifold(1.0, 2),
    )
    max_components: int = 3
    pipeline: str | Callable = "distortion"
    seed: int = 0
    embed_cfg: RsgdConfig = field(
        default_factory=lambda: RsgdConfig(
            train_lr=0.02, total_epochs=500, burn_in_epochs=50, final_lr=0.02 / 30
        )
    )
    curvature_lr: float = 4e-4
    prune_quantile: float = 0.05

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("need at least one candidate component")
        if self.max_components < 1:
            raise ValueError("max_components must be >= 1")


def _pipeline_matrices(D, cfg: GreedyConfig):
    """Unit-mean rescaling plus small-target pruning for stable fits.

    Near-duplicate points carry 1/D^2 weights that dominate every gradient;
    zeroing the smallest targets excludes them from the fit (the loss skips
    zero-target pairs) while the returned scale restores scoring units.
    """
    D = check_distance_matrix(D)
    mu = float(D[D > 0].mean())
    Dn = D / mu
    fit_D = Dn.copy()
    off = fit_D[fit_D > 0]
    if cfg.prune_quantile > 0 and off.size:
        cut = np.quantile(off, cfg.prune_quantile)
        fit_D[fit_D < cut] = 0.0
    return Dn, fit_D, mu


def distortion_pipeline(D, cfg: GreedyConfig):
    """Score a signature by the average distortion of a fresh embedding."""
    from .embed import average_distortion, fit_coordinates

    Dn, fit_D, mu = _pipeline_matrices(D, cfg)

    def run(components: list[Manifold], seed: int) -> float:
        pm = ProductManifold(components)
        res = fit_coordinates(
            pm, fit_D, cfg.embed_cfg, rng=seed, curvature_lr=cfg.curvature_lr
        )
        return mu * average_distortion(res.final_manifold, res.X, Dn, validate=False)

    return run


def predictor_pipeline(D, y, cfg: GreedyConfig, task: str = "classification"):
    """Score a signature by a product-tree predictor on a fixed 80/20 split."""
    from .embed import fit_coordinates
    from .trees import DecisionTree

    y = np.asarray(y)

    Dn, fit_D, mu = _pipeline_matrices(D, cfg)

    def run(components: list[Manifold], seed: int) -> float:
        pm = ProductManifold(components)
        res = fit_coordinates(
            pm, fit_D, cfg.embed_cfg, rng=seed, curvature_lr=cfg.curvature_lr
        )
        n = len(y)
        split_rng = np.random.default_rng(seed)
        perm = split_rng.permutation(n)
        cut = max(1, int(0.8 * n))
        tr, te = perm[:cut], perm[cut:]
        tree = DecisionTree(res.final_manifold, task=task, max_depth=3)
        tree.fit(res.X[tr], y[tr])
        if task == "classification":
            return 1.0 - tree.score(res.X[te], y[te])
        pred = tree.predict(res.X[te])
        return float(np.mean((pred - y[te]) ** 2))

    return run


def greedy_signature_search(
    D, cfg: GreedyConfig, y=None
) -> tuple[ProductManifold | None, list[float]]:
    """Grow a product signature one best-scoring candidate at a time.

    Stops when no candidate improves on the incumbent loss or when
    ``max_components`` is reached. Returns the selected signature (None if
    even a single component never got accepted, which cannot happen with a
    finite first-round loss) and the accepted per-step losses.
    """
    if callable(cfg.pipeline):
        run = cfg.pipeline
    elif cfg.pipeline == "distortion":
        run = distortion_pipeline(D, cfg)
    elif cfg.pipeline == "predictor":
        if y is None:
            raise ValueError("predictor pipeline needs labels")
        run = predictor_pipeline(D, y, cfg)
    else:
        raise ValueError(f"unknown pipeline {cfg.pipeline!r}")

    signature: list[Manifold] = []
    losses: list[float] = []
    incumbent = math.inf
    for iteration in range(cfg.max_components):
        best_loss, best_candidate = math.inf, None
        for ci, cand in enumerate(cfg.candidates):
            trial = signature + [cand]
            seed = int(
                np.random.SeedSequence([cfg.seed, iteration, ci]).generate_state(1)[0]
            )
            try:
                loss = float(run(trial, seed))
            except Exception as exc:
                raise PipelineError(
                    f"pipeline failed on candidate {cand!r} at iteration {iteration}",
                    list(signature),
                ) from exc
            if loss < best_loss:
                best_loss, best_candidate = loss, cand
        if best_candidate is None or best_loss >= incumbent:
            break
        signature.append(best_candidate)
        losses.append(best_loss)
        incumbent = best_loss
    return (ProductManifold(signature) if signature else None), losses
