"""Unified stereographic model of constant-curvature space.

Points are d-dimensional coordinate vectors x with -kappa * <x, x> < 1: the
Poincare ball for kappa < 0, all of R^d for kappa >= 0 (curvature 0 is plain
Euclidean space). The model is conformal to the ambient hyperboloid / sphere
models, which it is linked to by the projection pair below, and carries a
gyrovector algebra (addition, scaling, matrix actions, midpoints) plus
closed-form distance/exp/log and hyperplane logits.

Every function takes ``kappa`` explicitly and broadcasts over leading axes.
"""

from __future__ import annotations

import math

import numpy as np

from .manifolds import Manifold, clamp_acos

_TINY = 1e-15
DOMAIN_MARGIN = 1e-12
# Below this |kappa| the curved formulas switch to their flat limits.
FLAT_KAPPA = 1e-8


def tan_k(u, kappa: float):
    """Curvature-scaled tangent: tan for positive, tanh for negative kappa."""
    u = np.asarray(u, dtype=float)
    if abs(kappa) < FLAT_KAPPA:
        return u
    sk = math.sqrt(abs(kappa))
    if kappa > 0:
        return np.tan(sk * u) / sk
    return np.tanh(sk * u) / sk


def arctan_k(r, kappa: float):
    r = np.asarray(r, dtype=float)
    if abs(kappa) < FLAT_KAPPA:
        return r
    sk = math.sqrt(abs(kappa))
    if kappa > 0:
        return np.arctan(sk * r) / sk
    return np.arctanh(np.clip(sk * r, 0.0, 1.0 - 1e-15)) / sk


def lambda_factor(x, kappa: float):
    """Conformal factor 2 / (1 + kappa <x, x>)."""
    x = np.asarray(x, dtype=float)
    return 2.0 / (1.0 + kappa * np.sum(x * x, axis=-1))


def check_domain(x, kappa: float):
    x = np.asarray(x, dtype=float)
    if np.any(-kappa * np.sum(x * x, axis=-1) >= 1.0 - DOMAIN_MARGIN):
        raise ValueError("point outside the stereographic domain")
    return x


def mobius_add(x, y, kappa: float):
    """Gyrovector addition x (+) y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xy = np.sum(x * y, axis=-1, keepdims=True)
    xx = np.sum(x * x, axis=-1, keepdims=True)
    yy = np.sum(y * y, axis=-1, keepdims=True)
    num = (1.0 - 2.0 * kappa * xy - kappa * yy) * x + (1.0 + kappa * xx) * y
    den = 1.0 - 2.0 * kappa * xy + kappa**2 * xx * yy
    if np.any(np.abs(den) < DOMAIN_MARGIN):
        raise ValueError("gyro-singular pair: addition denominator vanishes")
    return num / den


def kappa_scale(s, x, kappa: float):
    """Gyrovector scalar multiplication s (x) x."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    nx = np.linalg.norm(x, axis=-1, keepdims=True)
    small = nx < _TINY
    safe = np.where(small, 1.0, nx)
    out = tan_k(s[..., None] * arctan_k(safe, kappa), kappa) * (x / safe)
    return np.where(small, 0.0, out)


# -- distance, exponential and logarithmic maps ------------------------------


def stereo_dist(x, y, kappa: float):
    w = mobius_add(-np.asarray(x, dtype=float), y, kappa)
    return 2.0 * arctan_k(np.linalg.norm(w, axis=-1), kappa)


def stereo_exp(x, v, kappa: float):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv < _TINY
    safe = np.where(small, 1.0, nv)
    lam = lambda_factor(x, kappa)[..., None]
    step = tan_k(lam * nv / 2.0, kappa) * (v / safe)
    return np.where(small, x, mobius_add(x, np.where(small, 0.0, step), kappa))


def stereo_log(x, y, kappa: float):
    x = np.asarray(x, dtype=float)
    w = mobius_add(-x, y, kappa)
    nw = np.linalg.norm(w, axis=-1, keepdims=True)
    small = nw < _TINY
    safe = np.where(small, 1.0, nw)
    lam = lambda_factor(x, kappa)[..., None]
    return np.where(small, 0.0, (2.0 / lam) * arctan_k(safe, kappa) * (w / safe))


def stereo_exp0(v, kappa: float):
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv < _TINY
    safe = np.where(small, 1.0, nv)
    return np.where(small, 0.0, tan_k(safe, kappa) * (v / safe))


def stereo_log0(y, kappa: float):
    y = np.asarray(y, dtype=float)
    ny = np.linalg.norm(y, axis=-1, keepdims=True)
    small = ny < _TINY
    safe = np.where(small, 1.0, ny)
    return np.where(small, 0.0, arctan_k(safe, kappa) * (y / safe))


# -- projections between ambient models and the stereographic model ----------


def stereo_project(m: Manifold, x) -> np.ndarray:
    """Map an ambient-model point onto stereographic coordinates."""
    x = np.asarray(x, dtype=float)
    if m.curvature == 0.0:
        return x.copy()
    m.check_point(x)
    den = 1.0 + math.sqrt(abs(m.curvature)) * x[..., 0:1]
    if np.any(np.abs(den) < DOMAIN_MARGIN):
        raise ValueError("projection undefined at the antipode of the pole")
    return x[..., 1:] / den


def stereo_unproject(s, kappa: float, check: bool = True) -> np.ndarray:
    """Inverse of :func:`stereo_project`; identity for kappa = 0."""
    s = np.asarray(s, dtype=float)
    if kappa == 0.0:
        return s.copy()
    if check:
        check_domain(s, kappa)
    nsq = np.sum(s * s, axis=-1, keepdims=True)
    den = 1.0 + kappa * nsq
    x0 = (1.0 - kappa * nsq) / (math.sqrt(abs(kappa)) * den)
    return np.concatenate([x0, 2.0 * s / den], axis=-1)


# -- matrix actions -----------------------------------------------------------


def right_matmul(X, W, kappa: float):
    """Row-wise gyrovector action of a weight matrix: exp0(log0(x) W)."""
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=float)
    if X.shape[-1] != W.shape[0]:
        raise ValueError(f"shape mismatch: {X.shape} x {W.shape}")
    XW = X @ W
    nx = np.linalg.norm(X, axis=-1, keepdims=True)
    nxw = np.linalg.norm(XW, axis=-1, keepdims=True)
    degenerate = (nx < _TINY) | (nxw < _TINY)
    safe_nx = np.where(nx < _TINY, 1.0, nx)
    safe_nxw = np.where(nxw < _TINY, 1.0, nxw)
    scaled = tan_k((safe_nxw / safe_nx) * arctan_k(safe_nx, kappa), kappa)
    return np.where(degenerate, 0.0, scaled * XW / safe_nxw)


def gyromidpoint(a, X, kappa: float):
    """Weighted gyromidpoint of the rows of X."""
    a = np.asarray(a, dtype=float)
    X = np.asarray(X, dtype=float)
    lam = lambda_factor(X, kappa)
    den = np.sum(a * (lam - 1.0), axis=-1)
    if np.any(np.abs(den) < DOMAIN_MARGIN):
        raise ValueError("degenerate gyromidpoint weights")
    mean = ((a * lam) / den[..., None]) @ X
    return kappa_scale(np.asarray(0.5), mean, kappa)


def left_matmul(A, X, kappa: float):
    """Row-wise gyromidpoint action of a real matrix on stereographic rows."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return gyromidpoint(A, X, kappa)


# -- hyperplane logits ---------------------------------------------------------


def stereo_logits(X, a, p, kappa: float):
    """Signed hyperplane scores generalizing <x, a> + b to curved space.

    ``a`` is the hyperplane normal (a tangent vector at ``p``), ``p`` the
    hyperplane offset point. Rows of ``X`` map to one score each; the zero
    score set is the hyperplane through ``p`` orthogonal to ``a``.
    """
    X = np.asarray(X, dtype=float)
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    na = np.linalg.norm(a)
    if na < _TINY:
        raise ValueError("hyperplane normal must be nonzero")
    z = mobius_add(-p, X, kappa)
    za = z @ a
    if abs(kappa) < FLAT_KAPPA:
        return 4.0 * za
    sk = math.sqrt(abs(kappa))
    zz = np.sum(z * z, axis=-1)
    arg = 2.0 * sk * za / ((1.0 + kappa * zz) * na)
    lam_p = lambda_factor(p, kappa)
    if kappa > 0:
        val = np.arcsin(clamp_acos(arg))
    else:
        val = np.arcsinh(arg)
    return (lam_p * na / sk) * val


def product_logits(component_logits, component_inners):
    """Combine per-component scores: l2 norm signed by the summed inners."""
    L = np.stack(np.broadcast_arrays(*component_logits), axis=-1)
    inner_sum = np.sum(np.stack(np.broadcast_arrays(*component_inners), axis=-1), axis=-1)
    sign = np.where(inner_sum >= 0, 1.0, -1.0)
    return np.linalg.norm(L, axis=-1) * sign


def hyperplane_inner(X, a, p, kappa: float):
    """<-p (+) x, a>, the sign carrier paired with :func:`stereo_logits`."""
    z = mobius_add(-np.asarray(p, dtype=float), X, kappa)
    return z @ np.asarray(a, dtype=float)
