"""Decision trees and random forests for product-manifold features.

Splits are geodesic: within one component and one coordinate, each point is
reduced to the angle of its (reference, coordinate) pair, and a split
boundary is an angle whose level set is a geodesic submanifold (a great
circle on spheres, a hyperbolic geodesic on hyperboloids, an axis-aligned
hyperplane in Euclidean factors under the homogeneous-coordinate view).
Candidate boundaries sit at geodesic midpoints of consecutive sorted angles,
so each is equidistant from its two generating points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .manifolds import Manifold, ProductManifold

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SplitCriterion:
    """One angular decision rule: component index, coordinate, boundary angle.

    ``dim`` indexes the component's coordinates with the reference coordinate
    at position 0 (curved factors use their ambient first coordinate;
    Euclidean factors get an implicit homogeneous 1), so valid values start
    at 1.
    """

    component: int
    dim: int
    theta: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim 0 is the reference coordinate; use dim >= 1")


@dataclass
class TreeNode:
    criterion: Optional[SplitCriterion] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: Optional[np.ndarray] = None  # class counts or [mean]
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.criterion is None


def _angle_coords(m: Manifold, Xc: np.ndarray, dim: int):
    """(reference, coordinate) pairs feeding the projection angle."""
    if not 1 <= dim <= m.dim:
        raise ValueError(f"dim must be in 1..{m.dim}, got {dim}")
    if m.curvature == 0.0:
        x0 = np.ones(len(Xc))
        xd = Xc[:, dim - 1]
    else:
        x0 = Xc[:, 0]
        xd = Xc[:, dim]
    return x0, xd


def project_angle(m: Manifold, Xc, dim: int) -> np.ndarray:
    """Projection angle in [0, pi), folded from the (x0, xd) plane."""
    Xc = np.atleast_2d(np.asarray(Xc, dtype=float))
    x0, xd = _angle_coords(m, Xc, dim)
    if np.any((x0 == 0.0) & (xd == 0.0)):
        raise ValueError("projection angle undefined at the 2D origin")
    return np.mod(np.arctan2(x0, xd), math.pi)


def _full_angle(m: Manifold, Xc, dim: int) -> np.ndarray:
    Xc = np.atleast_2d(np.asarray(Xc, dtype=float))
    x0, xd = _angle_coords(m, Xc, dim)
    return np.arctan2(x0, xd)


def split_indicator(pm: ProductManifold, X, criterion: SplitCriterion) -> np.ndarray:
    """1 where the point's angle falls in [theta, theta + pi), else 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = pm.components[criterion.component]
    Xc = X[:, pm._slices[criterion.component]]
    phi = _full_angle(m, Xc, criterion.dim)
    return (np.mod(phi - criterion.theta, _TWO_PI) < math.pi).astype(int)


def midpoint_angle(kind: str, theta_u: float, theta_v: float) -> float:
    """Geodesic midpoint of two projection angles for one geometry kind."""
    if theta_v < theta_u:
        theta_u, theta_v = theta_v, theta_u
    if kind == "spherical":
        return 0.5 * (theta_u + theta_v)
    if kind == "euclidean":
        # Arithmetic midpoint of the homogeneous coordinates cot(theta).
        cot_sum = 1.0 / math.tan(theta_u) + 1.0 / math.tan(theta_v)
        return math.atan2(2.0, cot_sum)
    if kind == "hyperbolic":
        s = math.sin(theta_u + theta_v)
        if abs(s) < 1e-12:
            return 0.5 * (theta_u + theta_v)
        V = math.cos(theta_u - theta_v) / s
        root = math.sqrt(max(V * V - 1.0, 0.0))
        z = V - root if theta_u + theta_v < math.pi else V + root
        return math.atan2(1.0, z)
    raise ValueError(f"unknown geometry kind {kind!r}")


def _impurity_scores(ind, y_onehot=None, y=None):
    """Weighted impurity of each candidate row-split in an indicator matrix."""
    n = ind.shape[1]
    n1 = ind.sum(axis=1)
    n0 = n - n1
    if y_onehot is not None:
        c1 = ind @ y_onehot
        c0 = y_onehot.sum(axis=0)[None, :] - c1
        with np.errstate(invalid="ignore", divide="ignore"):
            g1 = 1.0 - np.sum((c1 / np.maximum(n1, 1)[:, None]) ** 2, axis=1)
            g0 = 1.0 - np.sum((c0 / np.maximum(n0, 1)[:, None]) ** 2, axis=1)
        return (n1 * g1 + n0 * g0) / n
    s1 = ind @ y
    q1 = ind @ (y * y)
    s0 = y.sum() - s1
    q0 = (y * y).sum() - q1
    with np.errstate(invalid="ignore", divide="ignore"):
        v1 = q1 / np.maximum(n1, 1) - (s1 / np.maximum(n1, 1)) ** 2
        v0 = q0 / np.maximum(n0, 1) - (s0 / np.maximum(n0, 1)) ** 2
    return (n1 * np.maximum(v1, 0.0) + n0 * np.maximum(v0, 0.0)) / n


def _entropy_scores(ind, y_onehot):
    n = ind.shape[1]
    n1 = ind.sum(axis=1)
    n0 = n - n1
    c1 = ind @ y_onehot
    c0 = y_onehot.sum(axis=0)[None, :] - c1

    def ent(c, tot):
        with np.errstate(invalid="ignore", divide="ignore"):
            p = c / np.maximum(tot, 1)[:, None]
            t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        return t.sum(axis=1)

    return (n1 * ent(c1, n1) + n0 * ent(c0, n0)) / n


class DecisionTree:
    """Recursive angular-split tree on product-manifold coordinates.

    Parameters follow familiar conventions: ``task`` selects Gini-scored
    classification or variance-scored regression, ``impurity="entropy"``
    switches classification to information gain.
    """

    def __init__(
        self,
        pm: ProductManifold,
        task: str = "classification",
        max_depth: int = 5,
        min_leaf: int = 1,
        impurity: str = "gini",
    ):
        if task not in ("classification", "regression"):
            raise ValueError(f"unknown task {task!r}")
        if impurity not in ("gini", "entropy"):
            raise ValueError(f"unknown impurity {impurity!r}")
        self.pm = pm
        self.task = task
        self.max_depth = int(max_depth)
        self.min_leaf = int(min_leaf)
        self.impurity = impurity
        self.root_: Optional[TreeNode] = None
        self.classes_: Optional[np.ndarray] = None

    # one (component, dim) pair per angular feature
    def _feature_pairs(self):
        return [
            (ci, d)
            for ci, m in enumerate(self.pm.components)
            for d in range(1, m.dim + 1)
        ]

    def _candidate_splits(self, X, idx, feature_pairs):
        """Yield (criterion, indicator) for midpoints of consecutive angles."""
        for ci, d in feature_pairs:
            m = self.pm.components[ci]
            Xc = X[idx][:, self.pm._slices[ci]]
            psi = project_angle(m, Xc, d)
            uniq = np.unique(psi)
            if uniq.size < 2:
                continue  # degenerate dimension
            thetas = np.array(
                [midpoint_angle(m.kind, a, b) for a, b in zip(uniq, uniq[1:])]
            )
            phi = _full_angle(m, Xc, d)
            ind = (np.mod(phi[None, :] - thetas[:, None], _TWO_PI) < math.pi).astype(
                float
            )
            for t_i in np.argsort(thetas, kind="stable"):
                yield SplitCriterion(ci, d, float(thetas[t_i])), ind[t_i]

    def _leaf(self, y_idx):
        if self.task == "classification":
            counts = np.array(
                [np.count_nonzero(y_idx == c) for c in self.classes_], dtype=float
            )
            return TreeNode(value=counts, n_samples=len(y_idx))
        return TreeNode(value=np.array([y_idx.mean()]), n_samples=len(y_idx))

    def _grow(self, X, y, idx, depth, feature_rng=None, feature_rate=1.0):
        y_idx = y[idx]
        pure = np.unique(y_idx).size == 1
        if depth >= self.max_depth or pure or len(idx) < 2 * self.min_leaf:
            return self._leaf(y_idx)

        pairs = self._feature_pairs()
        if feature_rng is not None and feature_rate < 1.0:
            keep = max(1, int(math.ceil(feature_rate * len(pairs))))
            chosen = feature_rng.choice(len(pairs), size=keep, replace=False)
            pairs = [pairs[i] for i in sorted(chosen)]

        if self.task == "classification":
            onehot = (y_idx[:, None] == self.classes_[None, :]).astype(float)
            score_fn = (
                (lambda ind: _impurity_scores(ind[None, :], y_onehot=onehot)[0])
                if self.impurity == "gini"
                else (lambda ind: _entropy_scores(ind[None, :], onehot)[0])
            )
        else:
            score_fn = lambda ind: _impurity_scores(ind[None, :], y=y_idx)[0]

        best = None
        for criterion, ind in self._candidate_splits(X, idx, pairs):
            n1 = int(ind.sum())
            n0 = len(idx) - n1
            if n1 < self.min_leaf or n0 < self.min_leaf or n1 == 0 or n0 == 0:
                continue
            score = float(score_fn(ind))
            if best is None or score < best[0]:
                best = (score, criterion, ind.astype(bool))
        if best is None:
            return self._leaf(y_idx)

        _, criterion, ind = best
        node = TreeNode(criterion=criterion, n_samples=len(idx))
        node.left = self._grow(X, y, idx[ind], depth + 1, feature_rng, feature_rate)
        node.right = self._grow(X, y, idx[~ind], depth + 1, feature_rng, feature_rate)
        return node

    def fit(self, X, y, _feature_rng=None, _feature_rate=1.0):
        X = self.pm.check_point(np.asarray(X, dtype=float), atol=1e-8)
        y = np.asarray(y)
        if len(X) != len(y):
            raise ValueError("X and y length mismatch")
        if len(X) < 1:
            raise ValueError("need at least one sample")
        if self.task == "classification":
            self.classes_ = np.unique(y)
        self.root_ = self._grow(
            X, y, np.arange(len(X)), 0, _feature_rng, _feature_rate
        )
        return self

    def _route(self, x):
        node = self.root_
        while not node.is_leaf:
            side = split_indicator(self.pm, x[None, :], node.criterion)[0]
            node = node.left if side == 1 else node.right
        return node

    def predict_proba(self, X) -> np.ndarray:
        if self.task != "classification":
            raise ValueError("predict_proba is for classification trees")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.stack([self._route(x).value for x in X])
        return out / out.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.task == "classification":
            return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
        return np.array([self._route(x).value[0] for x in X])

    def score(self, X, y) -> float:
        y = np.asarray(y)
        pred = self.predict(X)
        if self.task == "classification":
            return float(np.mean(pred == y))
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else float(ss_res == 0.0)


@dataclass
class ForestConfig:
    n_trees: int = 10
    max_depth: int = 5
    min_leaf: int = 1
    bootstrap: bool = True
    bootstrap_fraction: float = 1.0
    feature_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0 < self.bootstrap_fraction <= 1.0:
            raise ValueError("bootstrap_fraction must be in (0, 1]")
        if not 0 < self.feature_rate <= 1.0:
            raise ValueError("feature_rate must be in (0, 1]")


class RandomForest:
    """Bootstrap ensemble of angular-split trees; vote or average."""

    def __init__(self, pm: ProductManifold, cfg: ForestConfig, task: str = "classification"):
        self.pm = pm
        self.cfg = cfg
        self.task = task
        self.trees_: list[DecisionTree] = []
        self.classes_: Optional[np.ndarray] = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        n = len(X)
        if self.task == "classification":
            self.classes_ = np.unique(y)
        self.trees_ = []
        seeds = np.random.SeedSequence(self.cfg.seed).spawn(self.cfg.n_trees)
        for ss in seeds:
            rng = np.random.default_rng(ss)
            if self.cfg.bootstrap:
                size = max(1, int(round(self.cfg.bootstrap_fraction * n)))
                idx = rng.integers(0, n, size=size)
            else:
                idx = np.arange(n)
            tree = DecisionTree(
                self.pm,
                task=self.task,
                max_depth=self.cfg.max_depth,
                min_leaf=self.cfg.min_leaf,
            )
            tree.classes_ = self.classes_
            tree.root_ = tree._grow(X, y, idx, 0, rng, self.cfg.feature_rate)
            self.trees_.append(tree)
        return self

    def predict_proba(self, X) -> np.ndarray:
        probs = np.mean([t.predict_proba(X) for t in self.trees_], axis=0)
        return probs

    def predict(self, X) -> np.ndarray:
        if self.task == "classification":
            votes = np.stack([t.predict(X) for t in self.trees_])
            out = []
            for col in votes.T:
                vals, counts = np.unique(col, return_counts=True)
                out.append(vals[np.argmax(counts)])
            return np.array(out)
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def score(self, X, y) -> float:
        y = np.asarray(y)
        pred = self.predict(X)
        if self.task == "classification":
            return float(np.mean(pred == y))
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else float(ss_res == 0.0)
