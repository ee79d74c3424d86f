"""Group-sparse column selection for the quadratic basis.

Solves

    min_Vbar  0.5 * ||W.T @ Vbar.T - E.T||_F^2 + lambda_group * sum_j ||Vbar[:, j]||_2

with a proximal-gradient method (SpaRSA): a gradient step on the smooth
term, row-wise group shrinkage of ``Vbar.T``, step halving until the
objective decreases, and a mild step increase after each accepted step.
The regularization weight is swept from large to small with warm starts;
the supports found along the way drive column selection, and the chosen
columns are then refitted without the sparsity penalty ("debiasing").

Everything works on ``X = Vbar.T`` (``q x n``), whose rows are the groups.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SolverError
from .manifold import QuadFeatureMap, fit_vbar, quad_features

log = logging.getLogger(__name__)


@dataclass
class SparsaConfig:
    """Solver settings.

    ``lambda_grid`` and ``alpha_bar`` are derived from the data when left as
    ``None``: the grid runs geometrically from the smallest weight that
    zeroes every column down to ``lambda_ratio`` times it, and the initial
    step is the inverse Lipschitz constant ``1 / ||W||_2^2``.
    """

    lambda_grid: Optional[np.ndarray] = None
    alpha_bar: Optional[float] = None
    eps_tol: float = 1e-6
    max_iters: int = 5000
    max_backtracks: int = 50
    alpha_floor: Optional[float] = None
    n_lambdas: int = 20
    lambda_ratio: float = 1e-4

    def validate(self):
        if self.lambda_grid is not None:
            grid = np.asarray(self.lambda_grid, dtype=np.float64)
            if grid.ndim != 1 or grid.size == 0:
                raise ValueError("lambda_grid must be a non-empty 1-D sequence")
            if np.any(grid < 0) or np.any(np.diff(grid) >= 0):
                raise ValueError("lambda_grid must be non-negative and strictly descending")
        if self.alpha_bar is not None and not self.alpha_bar > 0:
            raise ValueError("alpha_bar must be positive")
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("max_iters and max_backtracks must be at least 1")


@dataclass
class SparsaResult:
    lambdas: np.ndarray
    vbar_path: list = field(default_factory=list)
    selected: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    support_monotone: bool = True

    def support_sizes(self):
        return [len(s) for s in self.selected]


def group_prox(r_alpha, alpha, lam):
    """Row-wise group shrinkage.

    Row ``j`` becomes zero when ``||row_j||_2 <= alpha * lam`` and is scaled
    by ``1 - alpha * lam / ||row_j||_2`` otherwise.
    """
    r_alpha = np.asarray(r_alpha, dtype=np.float64)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    thresh = alpha * lam
    norms = np.linalg.norm(r_alpha, axis=1)
    keep = norms > thresh
    scale = np.zeros_like(norms)
    scale[keep] = 1.0 - thresh / norms[keep]
    return r_alpha * scale[:, None]


class _Quadratic:
    """Smooth part ``0.5 ||W.T X - E.T||^2`` evaluated through Gram matrices."""

    def __init__(self, W, E):
        self.G = W @ W.T
        self.B = W @ E.T
        self.c = 0.5 * float(np.vdot(E, E))

    def value(self, X):
        return 0.5 * float(np.vdot(X, self.G @ X)) - float(np.vdot(X, self.B)) + self.c

    def grad(self, X):
        return self.G @ X - self.B


def objective(X, W, E, lam):
    """``F_lambda`` for ``X = Vbar.T``, computed from the explicit residual."""
    resid = W.T @ X - E.T
    return 0.5 * float(np.vdot(resid, resid)) + lam * float(np.linalg.norm(X, axis=1).sum())


def lambda_max(W, E):
    """Smallest weight whose minimizer is ``Vbar = 0``."""
    B = np.asarray(W) @ np.asarray(E).T
    return float(np.linalg.norm(B, axis=1).max()) if B.size else 0.0


def default_lambda_grid(W, E, n_lambdas=20, ratio=1e-4):
    lmax = lambda_max(W, E)
    if lmax == 0:
        raise ValueError("projection error is orthogonal to every feature; nothing to select")
    return lmax * np.logspace(0.0, np.log10(ratio), n_lambdas)


def _solve_one(quad, X, lam, alpha_bar, cfg, alpha_floor):
    penalty = lambda Z: lam * float(np.linalg.norm(Z, axis=1).sum())
    F = quad.value(X) + penalty(X)
    trace = [F]
    alpha = alpha_bar
    for it in range(cfg.max_iters):
        grad = quad.grad(X)
        for _ in range(cfg.max_backtracks):
            X_new = group_prox(X - alpha * grad, alpha, lam)
            F_new = quad.value(X_new) + penalty(X_new)
            if F_new < F:
                break
            if np.array_equal(X_new, X):
                # exact fixed point of the prox-gradient map
                log.info("sparsa: fixed point reached at lambda=%.3e (iteration %d), stopping", lam, it)
                return X, trace, it
            alpha *= 0.5
            if alpha < alpha_floor:
                break

        if not F_new < F:
            if alpha < alpha_floor or F_new - F <= 1e-13 * max(abs(F), 1.0):
                log.info("sparsa: step floor reached at lambda=%.3e (iteration %d), stopping", lam, it)
                return X, trace, it
            raise SolverError(
                f"objective did not decrease at lambda={lam:.3e} after {cfg.max_backtracks} "
                f"backtracks (alpha={alpha:.3e}); trace tail {trace[-5:]}"
            )
        X, F = X_new, F_new
        trace.append(F)
        alpha = min(1.5 * alpha, alpha_bar)
        # relative decrease over the last five accepted steps
        if len(trace) > 6:
            old = trace[-6]
            if old == 0 or (old - F) / abs(old) <= cfg.eps_tol:
                return X, trace, it + 1
    return X, trace, cfg.max_iters


def sparsa_solve(W, E, cfg=None, X0=None):
    """Run the continuation path over ``cfg.lambda_grid`` (descending).

    Parameters
    ----------
    W : (q, k) ndarray
        Quadratic feature matrix of the encoded snapshots.
    E : (n, k) ndarray
        Linear projection error.
    cfg : SparsaConfig, optional
    X0 : (q, n) ndarray, optional
        Starting point for the first weight; zero by default.
    """
    cfg = cfg or SparsaConfig()
    cfg.validate()
    W = np.asarray(W, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    if W.shape[1] != E.shape[1]:
        raise ValueError("W and E must have the same number of columns (snapshots)")
    q, n = W.shape[0], E.shape[0]

    grid = (
        np.asarray(cfg.lambda_grid, dtype=np.float64)
        if cfg.lambda_grid is not None
        else default_lambda_grid(W, E, cfg.n_lambdas, cfg.lambda_ratio)
    )
    quad = _Quadratic(W, E)
    if cfg.alpha_bar is not None:
        alpha_bar = float(cfg.alpha_bar)
    else:
        top = float(np.linalg.eigvalsh(quad.G)[-1]) if q else 1.0
        alpha_bar = 1.0 / top if top > 0 else 1.0
    alpha_floor = cfg.alpha_floor if cfg.alpha_floor is not None else 1e-12 * alpha_bar

    X = np.zeros((q, n)) if X0 is None else np.array(X0, dtype=np.float64)
    result = SparsaResult(lambdas=grid)
    for lam in grid:
        X, trace, iters = _solve_one(quad, X, float(lam), alpha_bar, cfg, alpha_floor)
        support = np.flatnonzero(np.linalg.norm(X, axis=1) > 0).tolist()
        result.vbar_path.append(X.T.copy())
        result.selected.append(support)
        result.objective_trace.append(trace)
        result.iterations.append(iters)

    sizes = result.support_sizes()
    result.support_monotone = all(a <= b for a, b in zip(sizes, sizes[1:]))
    if not result.support_monotone:
        log.warning("sparsa: support size is not monotone along the lambda path: %s", sizes)
    return result


def select_columns(result, q_target):
    """Support from the smallest weight whose support has at most ``q_target`` columns.

    Walking the path from large to small weights, the last entry within
    budget is returned.  Falls back to the smallest available support when
    every entry exceeds the budget.
    """
    if q_target < 0:
        raise ValueError("q_target must be non-negative")
    if not result.selected:
        raise ValueError("empty SpaRSA result")
    if q_target == 0:
        return []
    chosen = None
    for support in result.selected:
        if len(support) <= q_target:
            chosen = support
    if chosen is None:
        chosen = min(result.selected, key=len)
    return list(chosen)


def refine_path(W, E, result, q_target, cfg=None, max_bisections=40):
    """Insert extra weights where the support jumps past ``q_target``.

    A coarse grid can step from a support below the budget straight to one
    above it.  This bisects (geometrically) between the last within-budget
    weight and the next one until a support of exactly ``q_target`` columns
    appears or ``max_bisections`` solves have been spent.  New entries are
    merged into ``result`` in descending weight order; ``result`` is
    returned for chaining.
    """
    cfg = cfg or SparsaConfig()
    W = np.asarray(W, dtype=np.float64)
    E = np.asarray(E, dtype=np.float64)
    q_target = min(int(q_target), W.shape[0])
    sizes = result.support_sizes()
    if q_target <= 0 or q_target in sizes:
        return result
    within = [i for i, s in enumerate(sizes) if s <= q_target]
    if not within or within[-1] + 1 >= len(sizes):
        return result
    i = within[-1]
    lo_lam, hi_lam = float(result.lambdas[i]), float(result.lambdas[i + 1])
    X_lo = result.vbar_path[i].T.copy()
    quad = _Quadratic(W, E)
    alpha_bar = cfg.alpha_bar or 1.0 / float(np.linalg.eigvalsh(quad.G)[-1])
    alpha_floor = cfg.alpha_floor if cfg.alpha_floor is not None else 1e-12 * alpha_bar

    entries = []
    for _ in range(max_bisections):
        lam = np.sqrt(lo_lam * hi_lam) if hi_lam > 0 else 0.5 * lo_lam
        X, trace, iters = _solve_one(quad, X_lo.copy(), lam, alpha_bar, cfg, alpha_floor)
        support = np.flatnonzero(np.linalg.norm(X, axis=1) > 0).tolist()
        entries.append((lam, X.T.copy(), support, trace, iters))
        if len(support) == q_target:
            break
        if len(support) < q_target:
            lo_lam, X_lo = lam, X
        else:
            hi_lam = lam

    merged = list(zip(result.lambdas.tolist(), result.vbar_path, result.selected,
                      result.objective_trace, result.iterations)) + entries
    merged.sort(key=lambda e: -e[0])
    result.lambdas = np.array([e[0] for e in merged])
    result.vbar_path = [e[1] for e in merged]
    result.selected = [e[2] for e in merged]
    result.objective_trace = [e[3] for e in merged]
    result.iterations = [e[4] for e in merged]
    sizes = result.support_sizes()
    result.support_monotone = all(a <= b for a, b in zip(sizes, sizes[1:]))
    log.info("sparsa: refined path with %d extra weights around q_target=%d", len(entries), q_target)
    return result


def debias(basis, S_shifted, selected, gamma=0.0):
    """Refit ``Vbar`` on the selected feature columns only.

    ``selected`` is either a :class:`QuadFeatureMap` or a list of column
    positions in the full map's ordering.
    """
    r = basis.r
    fmap = selected if isinstance(selected, QuadFeatureMap) else QuadFeatureMap.from_columns(r, selected)
    if fmap.q == 0:
        raise ValueError("debiasing needs at least one selected column")
    return fit_vbar(basis, S_shifted, fmap, gamma)


def selection_data(basis, S_shifted):
    """Full feature matrix ``W`` and projection error ``E`` for a basis."""
    S_shifted = np.asarray(S_shifted, dtype=np.float64)
    shat = basis.V.T @ S_shifted
    E = S_shifted - basis.V @ shat
    W = quad_features(shat, QuadFeatureMap.full(basis.r))
    return W, E


def write_path_csv(result, path):
    """Dump the support path and final objective per weight."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["lambda", "support_size", "iterations", "objective", "support"])
        for lam, sup, its, tr in zip(result.lambdas, result.selected, result.iterations, result.objective_trace):
            out.writerow([repr(float(lam)), len(sup), its, repr(float(tr[-1])), " ".join(str(c + 1) for c in sup)])


def write_trace_csv(result, path):
    """Per-iteration objective values, one row per (lambda, iteration)."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["lambda", "iteration", "objective"])
        for lam, tr in zip(result.lambdas, result.objective_trace):
            for i, f in enumerate(tr):
                out.writerow([repr(float(lam)), i, repr(float(f))])
