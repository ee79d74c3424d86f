"""Operator inference: regress projected time derivatives on projected states.

For reduced snapshots ``s_hat_j`` and derivative data ``d_j`` (first or
second time derivative), find

    c_hat, A_hat, H_hat = argmin  sum_j ||c + A s_hat_j + H w(s_hat_j) - d_j||^2
                                  + lambda1 (||c||^2 + ||A||_F^2) + lambda2 ||H||_F^2

with ``w`` the deduplicated quadratic features.  The problem decouples into
one ridge regression per reduced component; all of them share a single
factorization of the regularized Gram matrix.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InstabilityError, NumericalError
from .manifold import QuadFeatureMap, quad_features
from .numerics import solve_ridge_rows

log = logging.getLogger(__name__)


@dataclass
class RomOperators:
    """Reduced operators of ``d^p s_hat / dt^p = c + A s_hat + H w(s_hat)``."""

    c_hat: np.ndarray
    A_hat: np.ndarray
    H_hat: Optional[np.ndarray]
    fmap: QuadFeatureMap
    time_order: int = 1

    def __post_init__(self):
        self.c_hat = np.asarray(self.c_hat, dtype=np.float64).ravel()
        self.A_hat = np.asarray(self.A_hat, dtype=np.float64)
        r = self.c_hat.size
        if self.A_hat.shape != (r, r):
            raise ValueError(f"A_hat has shape {self.A_hat.shape}, expected {(r, r)}")
        if self.fmap.r != r:
            raise ValueError("feature map and operators disagree on r")
        if self.H_hat is not None:
            self.H_hat = np.asarray(self.H_hat, dtype=np.float64)
            if self.H_hat.shape != (r, self.fmap.q):
                raise ValueError(f"H_hat has shape {self.H_hat.shape}, expected {(r, self.fmap.q)}")
        elif self.fmap.q:
            raise ValueError("H_hat is required when the feature map is non-empty")
        if self.time_order not in (1, 2):
            raise ValueError("time_order must be 1 or 2")
        for name in ("c_hat", "A_hat", "H_hat"):
            value = getattr(self, name)
            if value is not None and not np.all(np.isfinite(value)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def r(self):
        return self.c_hat.size

    @property
    def q(self):
        return self.fmap.q

    def stacked(self):
        """``[c A H]`` as one ``r x (1 + r + q)`` matrix."""
        blocks = [self.c_hat[:, None], self.A_hat]
        if self.H_hat is not None:
            blocks.append(self.H_hat)
        return np.hstack(blocks)

    def storage(self):
        """Number of stored operator entries, ``r + r^2 + q r``."""
        return self.r + self.r**2 + self.q * self.r


@dataclass
class OpinfProblem:
    """Projected data for one inference problem."""

    Shat: np.ndarray
    Dhat: np.ndarray
    fmap: Optional[QuadFeatureMap] = None
    lambda1: float = 0.0
    lambda2: float = 0.0
    time_order: int = 1

    def __post_init__(self):
        self.Shat = np.asarray(self.Shat, dtype=np.float64)
        self.Dhat = np.asarray(self.Dhat, dtype=np.float64)
        if self.Shat.shape != self.Dhat.shape:
            raise ValueError(f"Shat {self.Shat.shape} and Dhat {self.Dhat.shape} must match")
        if self.fmap is None:
            self.fmap = QuadFeatureMap.empty(self.Shat.shape[0])
        if self.fmap.r != self.Shat.shape[0]:
            raise ValueError("feature map and data disagree on r")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization parameters must be non-negative")
        unknowns = 1 + self.Shat.shape[0] + self.fmap.q
        if self.Shat.shape[1] <= unknowns:
            log.warning("opinf: %d samples for %d unknowns per row; problem is not overdetermined",
                        self.Shat.shape[1], unknowns)

    @property
    def r(self):
        return self.Shat.shape[0]


def data_matrix(Shat, fmap):
    """Rows ``[1; Shat; w(Shat)]``: ``(1 + r + q) x k``."""
    Shat = np.asarray(Shat, dtype=np.float64)
    rows = [np.ones((1, Shat.shape[1])), Shat]
    if fmap is not None and fmap.q:
        rows.append(quad_features(Shat, fmap))
    return np.vstack(rows)


def _regularization(r, q, lambda1, lambda2):
    return np.concatenate([np.full(1 + r, float(lambda1)), np.full(q, float(lambda2))])


def _split(O, r, fmap, time_order):
    H = O[:, 1 + r:] if fmap.q else None
    return RomOperators(O[:, 0], O[:, 1:1 + r], H, fmap, time_order)


def infer_quadratic(problem):
    """Infer ``(c, A, H)``; ``H`` is skipped for an empty feature map.

    ``lambda1`` weights ``[c A]``, ``lambda2`` weights ``H``.
    """
    r, fmap = problem.r, problem.fmap
    D = data_matrix(problem.Shat, fmap)
    reg = _regularization(r, fmap.q, problem.lambda1, problem.lambda2)
    O = solve_ridge_rows(D, problem.Dhat.T, reg).T
    return _split(O, r, fmap, problem.time_order)


def infer_linear(problem):
    """Infer ``(c, A)`` only, regularized with ``lambda1``."""
    linear = OpinfProblem(
        problem.Shat, problem.Dhat, QuadFeatureMap.empty(problem.r),
        problem.lambda1, 0.0, problem.time_order,
    )
    return infer_quadratic(linear)


def infer_rowwise(problem):
    """Same solution as :func:`infer_quadratic`, one reduced component at a time."""
    r, fmap = problem.r, problem.fmap
    D = data_matrix(problem.Shat, fmap)
    reg = _regularization(r, fmap.q, problem.lambda1, problem.lambda2)
    O = np.vstack([solve_ridge_rows(D, problem.Dhat[i], reg) for i in range(r)])
    return _split(O, r, fmap, problem.time_order)


def intrusive_galerkin(A_full, manifold, time_order=1):
    """Galerkin projection of a linear full-order operator onto a manifold.

    ``c = V^T A s_ref``, ``A_hat = V^T A V``, ``H = V^T A Vbar``.  Intended
    as a reference for testing the non-intrusive path.
    """
    A_full = np.asarray(A_full, dtype=np.float64)
    n = manifold.n
    if A_full.shape != (n, n):
        raise ValueError(f"A_full has shape {A_full.shape}, expected {(n, n)}")
    VtA = manifold.V.T @ A_full
    H = VtA @ manifold.vbar if manifold.q else None
    return RomOperators(VtA @ manifold.s_ref, VtA @ manifold.V, H, manifold.fmap, time_order)


@dataclass
class SweepResult:
    best: dict
    table: list


def max_workers():
    """Worker cap from ``QMROM_THREADS`` (default: CPU count)."""
    value = os.environ.get("QMROM_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            log.warning("ignoring non-integer QMROM_THREADS=%r", value)
    return os.cpu_count() or 1


_REG_KEYS = ("gamma", "lambda1", "lambda2")


def _reg_key(candidate):
    return tuple(float(candidate.get(k, 0.0)) for k in _REG_KEYS)


def sweep_hyperparameters(candidates: Sequence[dict], evaluate: Callable[[dict], float], tie_tol=1e-12):
    """Pick the candidate with the smallest training error.

    ``evaluate`` returns the error of one candidate; a non-finite value or
    a :class:`NumericalError` marks the candidate unstable and removes it
    from the argmin.  Errors within ``tie_tol`` of each other are resolved
    toward the larger ``(gamma, lambda1, lambda2)``.

    Returns a :class:`SweepResult` whose ``table`` lists every candidate with
    its error and stability flag, in input order.
    """
    candidates = [dict(c) for c in candidates]
    if not candidates:
        raise ValueError("empty hyperparameter grid")

    def run(candidate):
        try:
            err = float(evaluate(candidate))
            note = ""
        except (NumericalError, InstabilityError) as exc:
            err, note = math.inf, str(exc)
        return err, note

    workers = min(max_workers(), len(candidates))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, candidates))
    else:
        outcomes = [run(c) for c in candidates]

    table = []
    for cand, (err, note) in zip(candidates, outcomes):
        stable = math.isfinite(err)
        table.append({**cand, "error": err, "stable": stable, "note": note})

    stable_rows = [row for row in table if row["stable"]]
    if not stable_rows:
        detail = "; ".join(f"{_reg_key(r)}: {r['note'] or 'non-finite error'}" for r in table)
        raise InstabilityError(f"every candidate was unstable ({detail})")
    lowest = min(row["error"] for row in stable_rows)
    ties = [row for row in stable_rows if row["error"] - lowest <= tie_tol]
    best = max(ties, key=_reg_key)
    best = {k: v for k, v in best.items() if k not in ("error", "stable", "note")}
    return SweepResult(best=best, table=table)
