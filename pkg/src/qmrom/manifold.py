"""Linear (POD) and quadratic solution-manifolds learned from snapshots.

A quadratic manifold maps reduced coordinates ``s_hat`` (length ``r``) to a
full state

    s = s_ref + V @ s_hat + Vbar @ w(s_hat)

where ``w`` collects the products ``s_hat[i] * s_hat[j]`` for a chosen list
of index pairs ``i <= j`` (all of them for the full quadratic manifold, a
subset for a quasi-quadratic one).  ``Vbar`` is fitted to the part of the
data the POD basis misses, so ``V.T @ Vbar == 0`` by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import solve_ridge_rows, thin_svd

REF_MODES = ("initial", "time_mean")


@dataclass
class SnapshotSet:
    """Snapshot matrix with its time grid and optional derivative data.

    ``states`` is ``n x k`` with one state per column.  Several trajectories
    may be concatenated; ``params`` then labels each column with the
    parameter value of its trajectory, and times only need to increase
    within a trajectory.
    """

    states: np.ndarray
    times: np.ndarray
    params: Optional[np.ndarray] = None
    derivatives: Optional[np.ndarray] = None
    derivative_order: Optional[int] = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.times = np.asarray(self.times, dtype=np.float64).ravel()
        if self.states.ndim != 2:
            raise ValueError("states must be a 2-D array")
        n, k = self.states.shape
        if k < 2:
            raise ValueError(f"need at least 2 snapshots, got {k}")
        if self.times.shape != (k,):
            raise ValueError(f"times has length {self.times.size}, expected {k}")
        if self.params is not None:
            self.params = np.asarray(self.params, dtype=np.float64).ravel()
            if self.params.shape != (k,):
                raise ValueError("params must label every snapshot column")
        for seg in self.segments():
            if np.any(np.diff(self.times[seg]) <= 0):
                raise ValueError("times must be strictly increasing within each trajectory")
        if self.derivatives is not None:
            self.derivatives = np.asarray(self.derivatives, dtype=np.float64)
            if self.derivatives.shape != (n, k):
                raise ValueError("derivatives must have the same shape as states")
            if self.derivative_order not in (1, 2):
                raise ValueError("derivative_order must be 1 or 2 when derivatives are given")

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def k(self):
        return self.states.shape[1]

    def segments(self):
        """Column slices of the individual trajectories."""
        if self.params is None:
            return [slice(0, self.states.shape[1])]
        breaks = np.flatnonzero(np.diff(self.params) != 0) + 1
        edges = np.concatenate([[0], breaks, [self.params.size]])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True)
class QuadFeatureMap:
    """Ordered list of index pairs ``(i, j)``, ``i <= j``, defining ``w(s_hat)``.

    Indices are zero-based.  The full map lists the upper-triangular pairs
    lexicographically: (0,0), (0,1), ..., (0,r-1), (1,1), ..., (r-1,r-1).
    """

    r: int
    pairs: tuple = ()
    _left: np.ndarray = field(init=False, repr=False, compare=False)
    _right: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if self.r < 0:
            raise ValueError("r must be non-negative")
        for i, j in pairs:
            if not 0 <= i <= j < self.r:
                raise ValueError(f"invalid pair ({i}, {j}) for r={self.r}")
        if len(set(pairs)) != len(pairs):
            raise ValueError("pairs must be unique")
        if list(pairs) != sorted(pairs):
            raise ValueError("pairs must be sorted lexicographically")
        object.__setattr__(self, "pairs", pairs)
        left = np.array([p[0] for p in pairs], dtype=np.intp)
        right = np.array([p[1] for p in pairs], dtype=np.intp)
        object.__setattr__(self, "_left", left)
        object.__setattr__(self, "_right", right)

    @classmethod
    def full(cls, r):
        i, j = np.triu_indices(r)
        return cls(r, tuple(zip(i.tolist(), j.tolist())))

    @classmethod
    def empty(cls, r):
        return cls(r, ())

    @classmethod
    def from_columns(cls, r, columns):
        """Subset of the full map given by column positions in its ordering."""
        full = cls.full(r).pairs
        return cls(r, tuple(full[c] for c in sorted(set(int(c) for c in columns))))

    @property
    def q(self):
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def columns(self):
        """Positions of these pairs within the full map's ordering."""
        lookup = {p: c for c, p in enumerate(QuadFeatureMap.full(self.r).pairs)}
        return [lookup[p] for p in self.pairs]

    def __call__(self, shat):
        return quad_features(shat, self)


@dataclass
class PodBasis:
    """POD basis ``V`` (``n x r``) with the full singular-value spectrum."""

    V: np.ndarray
    singular_values: np.ndarray
    s_ref: np.ndarray
    ref_mode: str = "time_mean"

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def r(self):
        return self.V.shape[1]

    def truncate(self, r):
        if not 1 <= r <= self.r:
            raise ValueError(f"cannot truncate a basis of size {self.r} to {r}")
        return PodBasis(self.V[:, :r], self.singular_values, self.s_ref, self.ref_mode)


@dataclass
class QuadraticManifold:
    """POD basis plus quadratic correction ``Vbar`` (``n x q``)."""

    pod: PodBasis
    vbar: np.ndarray
    fmap: QuadFeatureMap
    gamma: float = 0.0

    def __post_init__(self):
        self.vbar = np.asarray(self.vbar, dtype=np.float64)
        if self.vbar.shape != (self.pod.n, self.fmap.q):
            raise ValueError(
                f"vbar has shape {self.vbar.shape}, expected {(self.pod.n, self.fmap.q)}"
            )
        if self.fmap.r != self.pod.r:
            raise ValueError("feature map and basis disagree on r")
        if self.fmap.q:
            leak = np.abs(self.pod.V.T @ self.vbar).max()
            if leak > 1e-8 * max(1.0, np.linalg.norm(self.vbar)):
                raise ValueError(f"vbar is not orthogonal to V (max |V^T vbar| = {leak:.3e})")

    @property
    def V(self):
        return self.pod.V

    @property
    def s_ref(self):
        return self.pod.s_ref

    @property
    def n(self):
        return self.pod.n

    @property
    def r(self):
        return self.pod.r

    @property
    def q(self):
        return self.fmap.q


def center(S, ref_mode="time_mean"):
    """Shift snapshots by a reference state.

    ``ref_mode="initial"`` uses the first column, ``"time_mean"`` the
    row-wise mean.  Returns ``(s_ref, S - s_ref[:, None])``.
    """
    S = np.asarray(S, dtype=np.float64)
    if ref_mode == "initial":
        s_ref = S[:, 0].copy()
    elif ref_mode == "time_mean":
        s_ref = S.mean(axis=1)
    else:
        raise ValueError(f"ref_mode must be one of {REF_MODES}, got {ref_mode!r}")
    return s_ref, S - s_ref[:, None]


def _fix_signs(U):
    # Largest-magnitude entry of each column made positive.
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def pod(S_shifted, r, s_ref=None, ref_mode="time_mean"):
    """Leading ``r`` left singular vectors of the centered snapshot matrix.

    Column signs are fixed so the largest-magnitude entry of each basis
    vector is positive.  ``s_ref`` defaults to zero.
    """
    S_shifted = np.asarray(S_shifted, dtype=np.float64)
    n, k = S_shifted.shape
    if not 1 <= r <= min(n, k):
        raise ValueError(f"r must lie in [1, {min(n, k)}], got {r}")
    svd = thin_svd(S_shifted)
    V = _fix_signs(svd.U[:, :r])
    if s_ref is None:
        s_ref = np.zeros(n)
    return PodBasis(V=V, singular_values=svd.singular_values, s_ref=np.asarray(s_ref, float), ref_mode=ref_mode)


def fit_pod(S, r, ref_mode="time_mean"):
    """Center ``S`` and compute its rank-``r`` POD basis in one call."""
    s_ref, shifted = center(S, ref_mode)
    return pod(shifted, r, s_ref=s_ref, ref_mode=ref_mode), shifted


def _basis(obj):
    return obj.pod if isinstance(obj, QuadraticManifold) else obj


def encode(basis, s):
    """Reduced coordinates ``V.T @ (s - s_ref)`` of a state or of every column."""
    b = _basis(basis)
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != b.n:
        raise ValueError(f"state has length {s.shape[0]}, basis expects {b.n}")
    if s.ndim == 1:
        return b.V.T @ (s - b.s_ref)
    return b.V.T @ (s - b.s_ref[:, None])


def quad_features(shat, fmap):
    """Products ``shat[i] * shat[j]`` for every pair of ``fmap``.

    ``shat`` is a length-``r`` vector or an ``r x k`` matrix (column-wise).
    """
    shat = np.asarray(shat, dtype=np.float64)
    if shat.shape[0] != fmap.r:
        raise ValueError(f"reduced state has length {shat.shape[0]}, map expects r={fmap.r}")
    return shat[fmap._left] * shat[fmap._right]


def projection_error(basis, S_shifted):
    """Part of the centered data outside ``span(V)``: ``S - V @ (V.T @ S)``."""
    V = _basis(basis).V
    S_shifted = np.asarray(S_shifted, dtype=np.float64)
    return S_shifted - V @ (V.T @ S_shifted)


def fit_vbar(basis, S_shifted, fmap=None, gamma=0.0):
    """Fit the quadratic correction by regularized least squares.

    Solves ``min 0.5 ||W.T @ Vbar.T - E.T||_F^2 + 0.5 * gamma * ||Vbar||_F^2``
    with ``E`` the projection error and ``W`` the feature matrix of the
    encoded snapshots.  One shared factorization handles all ``n`` rows.
    """
    b = _basis(basis)
    if fmap is None:
        fmap = QuadFeatureMap.full(b.r)
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    S_shifted = np.asarray(S_shifted, dtype=np.float64)
    shat = b.V.T @ S_shifted
    E = S_shifted - b.V @ shat
    if fmap.q == 0:
        return QuadraticManifold(b, np.zeros((b.n, 0)), fmap, float(gamma))
    W = quad_features(shat, fmap)
    vbar_t = solve_ridge_rows(W, E.T, gamma)
    return QuadraticManifold(b, vbar_t.T, fmap, float(gamma))


def linear_manifold(basis):
    """Wrap a POD basis as a manifold with no quadratic terms."""
    b = _basis(basis)
    return QuadraticManifold(b, np.zeros((b.n, 0)), QuadFeatureMap.empty(b.r), 0.0)


def decode(manifold, shat):
    """Full state(s) ``s_ref + V @ shat + Vbar @ w(shat)``."""
    if isinstance(manifold, PodBasis):
        manifold = linear_manifold(manifold)
    shat = np.asarray(shat, dtype=np.float64)
    if shat.shape[0] != manifold.r:
        raise ValueError(f"reduced state has length {shat.shape[0]}, expected {manifold.r}")
    out = manifold.V @ shat
    if manifold.q:
        out = out + manifold.vbar @ quad_features(shat, manifold.fmap)
    if shat.ndim == 1:
        return manifold.s_ref + out
    return manifold.s_ref[:, None] + out


def retained_energy_linear(basis, r_eval=None):
    """Relative cumulative energy ``sum_{i<=r} sigma_i^2 / sum_i sigma_i^2``."""
    b = _basis(basis)
    r_eval = b.r if r_eval is None else int(r_eval)
    if not 0 <= r_eval <= b.singular_values.size:
        raise ValueError(f"r_eval={r_eval} outside [0, {b.singular_values.size}]")
    sq = b.singular_values**2
    total = sq.sum()
    if total == 0:
        return 1.0
    return float(sq[:r_eval].sum() / total)


def retained_energy_quadratic(manifold, S, r_eval=None):
    """Snapshot energy captured by the quadratic reconstruction.

    ``||V V^T S_c + Vbar w(V^T S_c)||_F^2 / ||S_c||_F^2`` with
    ``S_c = S - s_ref``.  If ``r_eval`` is smaller than the manifold's
    dimension, the basis is truncated and ``Vbar`` refitted with the same
    ``gamma`` and the full feature map.
    """
    S = np.asarray(S, dtype=np.float64)
    if r_eval is not None and r_eval != manifold.r:
        if not 1 <= r_eval <= manifold.r:
            raise ValueError(f"r_eval={r_eval} outside [1, {manifold.r}]")
        basis = manifold.pod.truncate(r_eval)
        S_c = S - basis.s_ref[:, None]
        manifold = fit_vbar(basis, S_c, QuadFeatureMap.full(r_eval), manifold.gamma)
    S_c = S - manifold.s_ref[:, None]
    total = np.linalg.norm(S_c) ** 2
    if total == 0:
        return 1.0
    approx = decode(manifold, encode(manifold, S)) - manifold.s_ref[:, None]
    return float(np.linalg.norm(approx) ** 2 / total)


def relative_error(S, S_approx):
    """``||S - S_approx||_F / ||S||_F``."""
    S = np.asarray(S, dtype=np.float64)
    denom = np.linalg.norm(S)
    if denom == 0:
        return float(np.linalg.norm(S_approx))
    return float(np.linalg.norm(S - S_approx) / denom)


def reconstruction_error(manifold, S):
    """Relative error of ``decode(encode(S))`` against the snapshots."""
    return relative_error(S, decode(manifold, encode(manifold, S)))

