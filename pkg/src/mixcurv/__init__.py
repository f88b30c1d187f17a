"""Machine learning in products of constant-curvature manifolds."""

from .manifolds import Manifold, ProductManifold

__all__ = [
    "Manifold",
    "ProductManifold",
]

__version__ = "0.1.0"
