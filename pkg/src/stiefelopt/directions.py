"""Search directions built from the Euclidean gradient at a feasible point.

Given the ambient gradient ``G`` of the objective at ``X``, two tangent
descent candidates are available:

* ``canonical  = G - X G^T X``      (manifold gradient in the canonical metric)
* ``complement = (I - X X^T) G``    (component of ``G`` orthogonal to span(X))

Both can be written through the skew matrix ``A = G X^T - X G^T``
(``canonical = A X``), and any mix ``H = alpha*canonical + beta*complement``
with ``alpha > 0``, ``beta >= 0`` is a descent direction whose directional
derivative along the projected curve has the closed form implemented in
:func:`descent_derivative`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, frobenius_norm
from .manifold import StiefelPoint

__all__ = ["GradientSplit", "gradient_split", "mixed_direction", "descent_derivative"]


@dataclass(frozen=True)
class GradientSplit:
    """The two tangent components of an ambient gradient, plus the skew factor.

    Attributes
    ----------
    canonical : numpy.ndarray, shape (n, p)
        ``G - X G^T X``.  Its norm is the first-order stationarity measure
        reported by the solver; it vanishes exactly when ``skew`` does.
    complement : numpy.ndarray, shape (n, p)
        ``(I - X X^T) G``, computed as ``G - X (X^T G)`` so no ``n x n``
        intermediate is formed.
    skew : numpy.ndarray, shape (n, n)
        ``A = G X^T - X G^T``; skew-symmetric, and ``canonical = A X``.
    """

    canonical: np.ndarray
    complement: np.ndarray
    skew: np.ndarray


def gradient_split(point: StiefelPoint, grad) -> GradientSplit:
    """Split the ambient gradient ``G`` at ``point`` into tangent components."""
    g = as_matrix(grad, "grad")
    if g.shape != point.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {point.shape}")
    x = point.x
    canonical = g - x @ (g.T @ x)
    complement = g - x @ (x.T @ g)
    skew = g @ x.T - x @ g.T
    return GradientSplit(canonical=canonical, complement=complement, skew=skew)


def mixed_direction(split: GradientSplit, alpha: float, beta: float) -> np.ndarray:
    """Descent direction ``H = alpha*canonical + beta*complement``.

    ``alpha > 0`` and ``beta >= 0`` are required: that is the regime with a
    guaranteed negative directional derivative.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return alpha * split.canonical + beta * split.complement


def descent_derivative(
    point: StiefelPoint, grad, split: GradientSplit, alpha: float, beta: float
) -> float:
    """Directional derivative of the objective along the projected curve.

    For ``Z(tau) = proj(X - tau*H)`` with ``H = alpha*canonical +
    beta*complement``, the derivative at ``tau = 0`` is ``-<G, H>`` and
    expands to::

        -(alpha/2) ||A||_F^2 - beta ||G||_F^2 + beta ||X^T G||_F^2

    which is bounded above by ``-(alpha/2) ||A||_F^2`` (the two beta terms
    can never be positive in sum, since ``||X^T G||_F <= ||G||_F`` at a
    feasible ``X``).  Negative whenever ``alpha > 0`` and ``A != 0``.
    """
    g = as_matrix(grad, "grad")
    if g.shape != point.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {point.shape}")
    skew_sq = frobenius_norm(split.skew) ** 2
    grad_sq = frobenius_norm(g) ** 2
    xtg_sq = frobenius_norm(point.x.T @ g) ** 2
    return -0.5 * alpha * skew_sq - beta * grad_sq + beta * xtg_sq
