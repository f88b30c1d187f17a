"""Riemannian first-order optimizers.

Both optimizers step through the exponential map so iterates stay on the
manifold; momentum-style state is parallel-transported to each new point
immediately after the step, so stored tangents are always based at the
current iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifolds import ProductManifold


@dataclass
class RsgdConfig:
    """Schedule for gradient descent with a reduced-rate warmup phase.

    ``final_lr`` optionally decays the rate geometrically from ``train_lr``
    down to ``final_lr`` across the post-warmup epochs; left unset, the
    training rate is constant.
    """

    train_lr: float = 0.01
    burn_in_lr: float | None = None
    total_epochs: int = 1000
    burn_in_epochs: int | None = None
    final_lr: float | None = None

    def __post_init__(self):
        if self.train_lr <= 0:
            raise ValueError("train_lr must be positive")
        if self.burn_in_epochs is None:
            self.burn_in_epochs = self.total_epochs // 10
        if self.burn_in_lr is None:
            self.burn_in_lr = self.train_lr / 10.0
        if self.burn_in_lr <= 0:
            raise ValueError("burn_in_lr must be positive")
        if not 0 <= self.burn_in_epochs <= self.total_epochs:
            raise ValueError("need 0 <= burn_in_epochs <= total_epochs")
        if self.final_lr is not None and not 0 < self.final_lr <= self.train_lr:
            raise ValueError("need 0 < final_lr <= train_lr")

    def lr_at(self, epoch: int) -> float:
        if epoch < self.burn_in_epochs:
            return self.burn_in_lr
        if self.final_lr is None:
            return self.train_lr
        span = max(self.total_epochs - self.burn_in_epochs - 1, 1)
        frac = (epoch - self.burn_in_epochs) / span
        return self.train_lr * (self.final_lr / self.train_lr) ** frac


def rsgd_step(pm: ProductManifold, point, euclidean_grad, lr: float) -> np.ndarray:
    """One descent step: project the ambient gradient, follow the geodesic."""
    g = np.asarray(euclidean_grad, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains NaN or inf")
    rgrad = pm.egrad_to_rgrad(point, g, validate=False)
    return pm.project(pm.exp_map(point, -lr * rgrad, validate=False))


@dataclass
class RadanHyperparams:
    lr: float = 0.01
    beta1: float = 0.98
    beta2: float = 0.92
    beta3: float = 0.99
    eps: float = 1e-8


@dataclass
class RadanState:
    """Optimizer moments, all tangent at ``prev_point``."""

    m: np.ndarray
    v: np.ndarray
    prev_grad: np.ndarray
    n: float
    prev_point: np.ndarray
    step_count: int = 1


def radan_step(
    pm: ProductManifold,
    state: RadanState | None,
    point,
    riemannian_grad,
    hp: RadanHyperparams,
) -> tuple[RadanState, np.ndarray]:
    """Adaptive Nesterov-momentum step with transported gradient differences.

    ``riemannian_grad`` must be tangent at ``point``; ``state`` is the value
    returned by the previous call (None on the first step, which starts from
    m = g, v = 0, n = |g|^2).
    """
    x = np.asarray(point, dtype=float)
    g = np.asarray(riemannian_grad, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains NaN or inf")

    if state is None:
        m = g.copy()
        v = np.zeros_like(g)
        z = g
        n = float(pm.inner(g, g))
        count = 1
    else:
        m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
        diff = g - state.prev_grad
        v = hp.beta2 * state.v + (1.0 - hp.beta2) * diff
        z = g + hp.beta2 * diff
        n = hp.beta3 * state.n + (1.0 - hp.beta3) * float(pm.inner(z, z))
        count = state.step_count + 1

    denom = np.sqrt(max(n, 0.0)) + hp.eps
    if not np.isfinite(denom) or denom <= 0.0:
        raise ValueError("adaptive step denominator underflow")
    u = m + hp.beta2 * v
    new_point = pm.project(pm.exp_map(x, (-hp.lr / denom) * u, validate=False))

    transport = lambda w: pm.parallel_transport(x, new_point, w, validate=False)
    new_state = RadanState(
        m=transport(m),
        v=transport(v),
        prev_grad=transport(g),
        n=n,
        prev_point=new_point,
        step_count=count,
    )
    return new_state, new_point
