"""Tolerance-aware spectral primitives for (possibly rank-deficient) PSD matrices.

Numerical rank, pseudo-determinant and image-membership tests are all decided
from one symmetric eigendecomposition so that every caller sees the same
spectrum and the same rank cutoff.  The cutoff is relative to the largest
eigenvalue: an eigenvalue counts as nonzero iff it exceeds
``rtol * lambda_max``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

# Relative eigenvalue threshold below which a direction is treated as null.
DEFAULT_RANK_RTOL = 1e-9

# Validation tolerances for admitting a matrix as symmetric PSD.
_SYMMETRY_RTOL = 1e-10
_EIG_FLOOR_RTOL = 1e-10


def _check_rtol(rtol: float) -> float:
    rtol = float(rtol)
    if not 0.0 < rtol < 1.0:
        raise ValueError(f"rank tolerance must lie in (0, 1), got {rtol}")
    return rtol


def psd_spectrum(a, name: str = "matrix") -> tuple[NDArray, NDArray]:
    """Validate a symmetric PSD matrix and return its clamped spectrum.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Candidate matrix.  Must be symmetric within ``1e-10 * max|a|`` and
        have no eigenvalue below ``-1e-10 * lambda_max``.
    name : str
        Label used in error messages.

    Returns
    -------
    (w, u)
        Ascending eigenvalues with small negatives clamped to 0, and the
        corresponding orthonormal eigenvectors (columns of ``u``).

    Raises
    ------
    ValueError
        Naming the violated invariant (not square / not symmetric /
        not positive semidefinite).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} is not square: shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > _SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise ValueError(
            f"{name} is not symmetric: max|A - A^T| = {asym:.3e} "
            f"exceeds {_SYMMETRY_RTOL:.0e} * max|A| = {_SYMMETRY_RTOL * scale:.3e}"
        )
    w, u = np.linalg.eigh(a)
    lam_max = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -_EIG_FLOOR_RTOL * max(lam_max, np.finfo(float).tiny):
        raise ValueError(
            f"{name} is not positive semidefinite: smallest eigenvalue "
            f"{w[0]:.3e} is below -{_EIG_FLOOR_RTOL:.0e} * lambda_max"
        )
    return np.clip(w, 0.0, None), u


def numerical_rank(a, rtol: float = DEFAULT_RANK_RTOL) -> int:
    """Count eigenvalues of a PSD matrix above ``rtol * lambda_max``.

    Returns 0 for the zero matrix.
    """
    rtol = _check_rtol(rtol)
    w, _ = psd_spectrum(a)
    if w.size == 0 or w[-1] <= 0.0:
        return 0
    return int(np.count_nonzero(w > rtol * w[-1]))


def pseudo_det(a, rtol: float = DEFAULT_RANK_RTOL) -> float:
    """Product of the eigenvalues above the rank cutoff.

    Equals ``det(a)`` for full-rank input.  The zero matrix yields 1.0
    (empty product), so downstream gain formulas degrade gracefully.
    """
    rtol = _check_rtol(rtol)
    w, _ = psd_spectrum(a)
    if w.size == 0 or w[-1] <= 0.0:
        return 1.0
    nz = w[w > rtol * w[-1]]
    return float(np.prod(nz)) if nz.size else 1.0


def image_contains(a, v, rtol: float = DEFAULT_RANK_RTOL) -> bool:
    """Decide whether vector ``v`` lies in the column space of PSD ``a``.

    The residual of projecting ``v`` onto the above-cutoff eigenvectors is
    compared against ``sqrt(rtol) * ||v||``; residuals scale like the square
    root of eigenvalue cutoffs.  The zero vector is contained in any image.
    """
    rtol = _check_rtol(rtol)
    w, u = psd_spectrum(a)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != w.shape[0]:
        raise ValueError(
            f"vector of dimension {v.shape} does not match matrix dimension {w.shape[0]}"
        )
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        return True
    if w.size == 0 or w[-1] <= 0.0:
        return False
    basis = u[:, w > rtol * w[-1]]
    residual = v - basis @ (basis.T @ v)
    return float(np.linalg.norm(residual)) <= np.sqrt(rtol) * norm_v


def log_det_spd(a) -> float:
    """Natural log-determinant of a strictly positive definite matrix.

    Computed from a Cholesky factorization; accurate to ~1e-8 relative for
    condition numbers up to 1e10.  Raises ``ValueError`` if factorization
    fails, which signals the caller passed an unregularized (singular)
    matrix.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: shape {a.shape}")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "matrix is not strictly positive definite; add the noise "
            "regularization term before taking log-determinants"
        ) from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))
