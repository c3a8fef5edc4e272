"""Dense linear-algebra helpers shared by the manifold and benchmark code.

Conventions
-----------
* Matrices are ``numpy.float64`` arrays in C (row-major) order.  Every public
  routine normalizes its inputs through :func:`as_matrix` and never mutates
  them.
* Randomness flows through ``numpy.random.Generator`` seeded with PCG64
  (``numpy.random.default_rng``), so a given integer seed reproduces the same
  matrices on every platform for a fixed numpy release.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "as_matrix",
    "as_generator",
    "frobenius_inner",
    "frobenius_norm",
    "ThinSVD",
    "thin_svd",
    "random_orthonormal",
    "householder_reflector",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float64 array in C order.

    Parameters
    ----------
    a : array_like
        Input to validate.
    name : str, optional
        Label used in error messages.

    Returns
    -------
    numpy.ndarray
        The validated array (a view when ``a`` already qualifies).

    Raises
    ------
    ValueError
        If ``a`` is not 2-D or contains NaN/Inf entries.
    """
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_generator(seed=None) -> np.random.Generator:
    """Return a ``numpy.random.Generator`` for ``seed``.

    ``seed`` may be ``None`` (fresh OS entropy), an integer, or an existing
    ``Generator`` (returned unchanged so callers can share one stream).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def frobenius_inner(a, b) -> float:
    """Frobenius inner product ``<A, B> = sum_ij A_ij * B_ij``.

    Both arguments must have identical shapes.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float((a * b).sum())


def frobenius_norm(a) -> float:
    """Frobenius norm ``||A||_F = sqrt(<A, A>)``."""
    return float(np.linalg.norm(as_matrix(a, "a")))


class ThinSVD(NamedTuple):
    """Thin singular value decomposition ``X = U @ diag(sigma) @ V.T``.

    ``u`` is ``(n, p)`` with orthonormal columns, ``sigma`` the ``p``
    singular values in non-increasing order, and ``v`` is ``(p, p)``
    orthogonal.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def thin_svd(x) -> ThinSVD:
    """Thin SVD of a tall (or square) matrix.

    Parameters
    ----------
    x : array_like, shape (n, p)
        Matrix with ``n >= p``.

    Returns
    -------
    ThinSVD
        Factors satisfying ``u @ np.diag(sigma) @ v.T == x`` to roundoff.
    """
    x = as_matrix(x, "x")
    n, p = x.shape
    if n < p:
        raise ValueError(f"thin_svd expects rows >= cols, got shape {x.shape}")
    u, sigma, vt = np.linalg.svd(x, full_matrices=False)
    return ThinSVD(u, sigma, vt.T)


def random_orthonormal(n: int, p: int, rng=None) -> np.ndarray:
    """Draw an ``(n, p)`` matrix with orthonormal columns.

    A standard-normal matrix is drawn from ``rng`` and its thin-SVD
    orthogonal factor ``U @ V.T`` is returned, which is the orthonormal
    matrix nearest to the draw.

    Parameters
    ----------
    n, p : int
        Target shape, ``n >= p >= 1``.
    rng : None, int or numpy.random.Generator, optional
        Seed or generator (see :func:`as_generator`).
    """
    if p < 1 or n < p:
        raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
    rng = as_generator(rng)
    gauss = rng.standard_normal((n, p))
    u, _, vt = np.linalg.svd(gauss, full_matrices=False)
    return np.ascontiguousarray(u @ vt)


def householder_reflector(v) -> np.ndarray:
    """Householder reflection ``I - 2 v v^T / (v^T v)`` for a nonzero vector.

    The result is symmetric and orthogonal.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"v must be 1-D, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite entries")
    vtv = float(v @ v)
    if vtv == 0.0:
        raise ValueError("v must be nonzero")
    return np.eye(v.size) - (2.0 / vtv) * np.outer(v, v)
