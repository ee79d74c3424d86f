"""Benchmark snapshot generators.

* ``helix``: a closed curve in R^3 that a 2-D linear subspace cannot hold.
* ``advection``: exact Gaussian-pulse solutions of ``s_t + c s_x = 0`` on (0, 1),
  with time derivatives in closed form.
* ``wave2d``: a small finite-difference solve of ``s_tt = Laplace(s)`` on
  ``[0, 4 pi] x [0, 2 pi]`` with homogeneous Neumann boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .manifold import SnapshotSet

PROBLEMS = ("helix", "advection", "wave2d")

PARAM_RANGE = (0.05, 0.25)
TRAINING_MUS = (0.05, 0.10, 0.15, 0.20, 0.25)
_PULSE_VAR = 0.0002


def helix_snapshots(k=100, endpoint=False):
    """Samples of ``(cos t, sin t, cos(2t)/2)``.

    By default ``t_j = 2 pi j / k`` for ``j = 0..k-1``; ``endpoint=True``
    spaces ``k`` samples over the closed interval ``[0, 2 pi]`` instead.
    """
    if k < 3:
        raise ValueError("need at least 3 samples")
    if endpoint:
        t = np.linspace(0.0, 2.0 * np.pi, k)
    else:
        t = 2.0 * np.pi * np.arange(k) / k
    S = np.vstack([np.cos(t), np.sin(t), 0.5 * np.cos(2.0 * t)])
    return SnapshotSet(S, t)


@dataclass
class AdvectionSpec:
    c: float = 10.0
    mu: float = 0.1
    n: int = 1024
    k: int = 1000
    t_final: float = 0.1

    def __post_init__(self):
        if self.n < 8 or self.k < 4:
            raise ConfigError("advection needs n >= 8 and k >= 4")
        lo, hi = PARAM_RANGE
        if not lo <= self.mu <= hi:
            raise ConfigError(f"mu={self.mu} outside the parameter range {PARAM_RANGE}")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")

    def grid(self):
        """Cell-centre grid on (0, 1) and sample times on (0, t_final]."""
        x = (np.arange(self.n) + 0.5) / self.n
        t = self.t_final * np.arange(1, self.k + 1) / self.k
        return x, t


def advection_solution(x, t, mu, c=10.0):
    """Exact solution and its time derivative at every ``(x_i, t_j)``.

    Returns two ``len(x) x len(t)`` arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    xi = x[:, None] - c * t[None, :] - mu
    s = np.exp(-(xi**2) / _PULSE_VAR) / np.sqrt(_PULSE_VAR * np.pi)
    ds_dt = s * (2.0 * c * xi / _PULSE_VAR)
    return s, ds_dt


def advection_initial(x, mu):
    return np.exp(-((np.asarray(x) - mu) ** 2) / _PULSE_VAR) / np.sqrt(_PULSE_VAR * np.pi)


def advection_snapshots(spec):
    """Exact snapshots and closed-form time derivatives for one parameter."""
    x, t = spec.grid()
    s, ds = advection_solution(x, t, spec.mu, spec.c)
    return SnapshotSet(s, t, params=np.full(t.size, spec.mu), derivatives=ds, derivative_order=1)


def advection_training_set(mus=TRAINING_MUS, n=1024, k=1000, c=10.0, t_final=0.1):
    """Trajectories for several parameters, concatenated column-wise."""
    parts = [advection_snapshots(AdvectionSpec(c=c, mu=m, n=n, k=k, t_final=t_final)) for m in mus]
    return SnapshotSet(
        np.hstack([p.states for p in parts]),
        np.concatenate([p.times for p in parts]),
        params=np.concatenate([p.params for p in parts]),
        derivatives=np.hstack([p.derivatives for p in parts]),
        derivative_order=1,
    )


def sample_parameters(count, seed):
    """``count`` pseudo-random parameters drawn uniformly from the range."""
    rng = np.random.default_rng(seed)
    return rng.uniform(*PARAM_RANGE, size=int(count))


def advection_matrix(n, c=10.0):
    """First-order periodic upwind discretization of ``-c d/dx`` with ``h = 1/n``."""
    if n < 4:
        raise ValueError("need n >= 4")
    h = 1.0 / n
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, idx] = -c / h
    A[idx, (idx - 1) % n] = c / h
    return A


@dataclass
class WaveSpec:
    """Desk-scale wave problem on ``[0, 4 pi] x [0, 2 pi]``.

    The grid is cell-centred with ``nx x ny`` cells; ``substeps`` internal
    leapfrog steps are taken between consecutive snapshots.  ``width`` is
    the denominator in the Gaussian pulse ``exp(-|x - x0|^2 / width)``.
    """

    nx: int = 96
    ny: int = 48
    x0: tuple = field(default=(np.pi, np.pi))
    t_final: float = 10.0
    k: int = 1000
    width: float = 0.0072
    amplitude: float = 1.0
    substeps: int = 2
    lx: float = 4.0 * np.pi
    ly: float = 2.0 * np.pi

    def __post_init__(self):
        if self.nx < 16 or self.ny < 8:
            raise ConfigError("wave grid must be at least 16 x 8")
        if self.k < 2 or self.substeps < 1:
            raise ConfigError("need k >= 2 and substeps >= 1")
        if not np.isclose(self.lx / self.nx, self.ly / self.ny):
            raise ConfigError("wave grid cells must be square")
        if self.cfl() > 1.0:
            raise ConfigError(
                f"CFL number {self.cfl():.3f} exceeds 1; increase substeps or k"
            )

    @property
    def h(self):
        return self.lx / self.nx

    @property
    def n(self):
        return self.nx * self.ny

    @property
    def snapshot_dt(self):
        return self.t_final / (self.k - 1)

    @property
    def dt_internal(self):
        return self.snapshot_dt / self.substeps

    def cfl(self):
        return self.dt_internal * np.sqrt(2.0) / self.h

    def grid(self):
        xc = (np.arange(self.nx) + 0.5) * self.h
        yc = (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xc, yc, indexing="ij")

    def times(self):
        return np.linspace(0.0, self.t_final, self.k)

    def center_index(self):
        """Flat index of the cell at (or just past) the domain centre."""
        return (self.nx // 2) * self.ny + self.ny // 2

    def initial_state(self):
        X, Y = self.grid()
        r2 = (X - self.x0[0]) ** 2 + (Y - self.x0[1]) ** 2
        return self.amplitude * np.exp(-r2 / self.width)


def neumann_laplacian(u, h):
    """Five-point Laplacian with mirrored ghost cells (zero normal flux)."""
    p = np.pad(u, 1, mode="symmetric")
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * u) / (h * h)


def wave_snapshots(spec):
    """Leapfrog solve from the Gaussian pulse at rest; ``k`` snapshots on ``[0, T]``.

    States are flattened in C order (x index major).
    """
    dt = spec.dt_internal
    dt2 = dt * dt
    h = spec.h
    u0 = spec.initial_state()
    prev = u0
    cur = u0 + 0.5 * dt2 * neumann_laplacian(u0, h)
    out = np.empty((spec.n, spec.k))
    out[:, 0] = u0.ravel()
    step = 1
    for j in range(1, spec.k):
        target = j * spec.substeps
        while step < target:
            prev, cur = cur, 2.0 * cur - prev + dt2 * neumann_laplacian(cur, h)
            step += 1
        out[:, j] = cur.ravel()
    return SnapshotSet(out, spec.times())


def generate(problem, **kwargs):
    """Snapshot set for a named problem (``helix``, ``advection``, ``wave2d``)."""
    if problem == "helix":
        return helix_snapshots(**kwargs)
    if problem == "advection":
        return advection_training_set(**kwargs)
    if problem == "wave2d":
        return wave_snapshots(WaveSpec(**kwargs))
    raise ConfigError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
