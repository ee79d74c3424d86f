"""Dense linear-algebra and finite-difference kernels.

Everything here works on plain ``numpy`` float64 arrays; a "matrix" in the
rest of the package is simply a 2-D ndarray.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from .errors import IllConditionedError

log = logging.getLogger(__name__)

__all__ = [
    "SvdResult",
    "StencilSpec",
    "thin_svd",
    "solve_ridge_rows",
    "stencil",
    "fd_derivative",
    "COND_LIMIT",
]

# Largest acceptable condition number of an unregularized Gram matrix.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class SvdResult:
    """Thin singular value decomposition ``a = U @ diag(singular_values) @ Vt``."""

    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray


def _as_finite_matrix(a, name="a"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def thin_svd(a):
    """Thin SVD of a finite matrix.

    Singular values come back in descending order; ``U`` is ``n x p`` and
    ``Vt`` is ``p x k`` with ``p = min(n, k)``.
    """
    a = _as_finite_matrix(a)
    U, s, Vt = la.svd(a, full_matrices=False, lapack_driver="gesdd")
    return SvdResult(U=U, singular_values=s, Vt=Vt)


def solve_ridge_rows(w, targets, gamma=0.0):
    """Solve the Tikhonov-regularized least-squares problem with data ``w``.

    Returns ``X`` minimizing ``0.5 * ||w.T @ X - targets||_F**2
    + 0.5 * sum_i gamma_i * ||X[i]||**2``, i.e.
    ``X = (w @ w.T + diag(gamma))^{-1} @ w @ targets``.  Each column of
    ``targets`` is an independent least-squares problem sharing one
    Cholesky factorization.

    Parameters
    ----------
    w : (q, k) ndarray
        Data matrix; column ``j`` holds the features of sample ``j``.
    targets : (k, m) ndarray
        Right-hand sides, one column per independent problem.
    gamma : float or (q,) array_like
        Non-negative regularization weight, either shared or per feature.

    Returns
    -------
    (q, m) ndarray

    Raises
    ------
    IllConditionedError
        If all weights are zero and ``w @ w.T`` has condition number above
        ``COND_LIMIT`` (or is not positive definite).

    Notes
    -----
    A positive weight that is lost to rounding in ``w @ w.T`` falls back to
    a QR solve of the equivalent stacked system.
    """
    w = _as_finite_matrix(w, "w")
    targets = np.asarray(targets, dtype=np.float64)
    vector_rhs = targets.ndim == 1
    if vector_rhs:
        targets = targets[:, None]
    q, k = w.shape
    if targets.shape[0] != k:
        raise ValueError(f"targets has {targets.shape[0]} rows, expected {k}")

    weights = np.broadcast_to(np.asarray(gamma, dtype=np.float64), (q,))
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("regularization weights must be finite and non-negative")

    gram = w @ w.T
    gram[np.diag_indices(q)] += weights
    if q == 0:
        return np.zeros((0, targets.shape[1]))

    if not np.any(weights > 0):
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise IllConditionedError(
                f"normal equations have condition number {cond:.3e} > {COND_LIMIT:.0e}; "
                "use a positive regularization parameter (gamma/lambda > 0)"
            )
    try:
        factor = la.cho_factor(gram, lower=False, check_finite=False)
        x = la.cho_solve(factor, w @ targets, check_finite=False)
    except la.LinAlgError as exc:
        if not np.any(weights > 0):
            raise IllConditionedError(
                "normal equations are not positive definite; use a positive regularization parameter"
            ) from exc
        # a weight too small to survive rounding in w w^T: solve the stacked
        # least-squares problem by QR instead of squaring the condition number
        log.info("ridge: normal equations lost definiteness to rounding, using QR")
        x = _stacked_lstsq(w, targets, weights)
    return x[:, 0] if vector_rhs else x


def _stacked_lstsq(w, targets, weights):
    """``argmin ||w.T X - targets||^2 + sum_i weights_i ||X[i]||^2`` via QR."""
    q, m = w.shape[0], targets.shape[1]
    a = np.vstack([w.T, np.diag(np.sqrt(weights))])
    b = np.vstack([targets, np.zeros((q, m))])
    return la.lstsq(a, b, check_finite=False, lapack_driver="gelsy")[0]


@dataclass(frozen=True)
class StencilSpec:
    """Fourth-order finite-difference stencil family on a uniform grid.

    ``interior`` applies at offsets -2..2.  ``boundary`` holds the six-point
    one-sided rows for the first and second samples (offsets 0..5 relative
    to the first sample); the last two samples use the mirrored rows, with
    a sign flip for odd derivative orders.
    """

    derivative_order: int
    interior: tuple
    boundary: tuple
    accuracy_order: int = 4


# Exact rational coefficients from the Vandermonde moment conditions.
_FIRST = StencilSpec(
    derivative_order=1,
    interior=(1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
    boundary=(
        (-137 / 60, 5.0, -5.0, 10 / 3, -5 / 4, 1 / 5),
        (-1 / 5, -13 / 12, 2.0, -1.0, 1 / 3, -1 / 20),
    ),
)
_SECOND = StencilSpec(
    derivative_order=2,
    interior=(-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12),
    boundary=(
        (15 / 4, -77 / 6, 107 / 6, -13.0, 61 / 12, -5 / 6),
        (5 / 6, -5 / 4, -1 / 3, 7 / 6, -1 / 2, 1 / 12),
    ),
)


def stencil(derivative_order):
    """Return the frozen fourth-order stencil for a first or second derivative."""
    if derivative_order == 1:
        return _FIRST
    if derivative_order == 2:
        return _SECOND
    raise ValueError(f"derivative_order must be 1 or 2, got {derivative_order}")


def fd_derivative(series, dt, spec=2):
    """Estimate time derivatives of the columns of ``series``.

    Columns are samples at uniform spacing ``dt``.  Interior columns use the
    five-point central stencil; the first two and last two columns use
    six-point one-sided stencils of the same order.

    Parameters
    ----------
    series : (n, k) ndarray
        Time series, one column per sample, ``k >= 6``.
    dt : float
        Sample spacing.
    spec : StencilSpec or int
        Stencil, or the derivative order (1 or 2) to pick the default one.
    """
    if not isinstance(spec, StencilSpec):
        spec = stencil(spec)
    s = np.asarray(series, dtype=np.float64)
    vector = s.ndim == 1
    if vector:
        s = s[None, :]
    k = s.shape[1]
    if k < 6:
        raise ValueError(f"need at least 6 samples for the stencil, got {k}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    p = spec.derivative_order
    c = spec.interior
    out = np.empty_like(s)
    out[:, 2:-2] = (
        c[0] * s[:, :-4] + c[1] * s[:, 1:-3] + c[2] * s[:, 2:-2] + c[3] * s[:, 3:-1] + c[4] * s[:, 4:]
    )
    sign = (-1.0) ** p
    head = s[:, :6]
    tail = s[:, -6:][:, ::-1]
    for i, row in enumerate(spec.boundary):
        row = np.asarray(row)
        out[:, i] = head @ row
        out[:, k - 1 - i] = sign * (tail @ row)
    out /= dt**p
    return out[0] if vector else out
