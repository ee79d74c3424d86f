"""Time integration of inferred reduced models and state reconstruction.

First-order models ``ds/dt = c + A s + H w(s)`` use an IMEX Euler step (linear
part implicit, quadratic part explicit).  Second-order models
``d^2 s/dt^2 = c + A s + H w(s)`` use explicit central differences with a
Taylor start.  Both integrators advance a batch of initial conditions
(columns) together and flag each column that blows up.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as la

from .errors import IntegrationError
from .manifold import decode, encode, quad_features

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e8
SCHEMES = ("imex", "explicit")


@dataclass
class RomSimConfig:
    """Integration settings.

    ``initial_state`` is a full-order state (length ``n``); for second-order
    models ``initial_velocity`` is its time derivative (zero if omitted).
    """

    dt: float
    t_final: float
    initial_state: np.ndarray
    initial_velocity: Optional[np.ndarray] = None
    record_stride: int = 1
    scheme: str = "imex"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= self.dt:
            raise ValueError(f"t_final={self.t_final} must be at least dt={self.dt}")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be at least 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


@dataclass
class Trajectory:
    times: np.ndarray
    reduced_states: np.ndarray
    reconstructed: Optional[np.ndarray] = None
    stable: bool = True
    blowup_time: Optional[float] = None

    def __len__(self):
        return self.times.size


def rhs(ops, shat):
    """``c + A shat + H w(shat)`` for a vector or for each column of a matrix."""
    shat = np.asarray(shat, dtype=np.float64)
    c = ops.c_hat if shat.ndim == 1 else ops.c_hat[:, None]
    out = c + ops.A_hat @ shat
    if ops.H_hat is not None and ops.q:
        out = out + ops.H_hat @ quad_features(shat, ops.fmap)
    return out


def n_steps(dt, t_final):
    steps = t_final / dt
    n = int(round(steps))
    if abs(steps - n) > 1e-9 * max(1.0, steps):
        n = int(np.floor(steps))
    return n


class _Monitor:
    """Tracks per-column blow-up against ``factor * (1 + ||s_0||)``."""

    def __init__(self, Z0, dt, factor=BLOWUP_FACTOR):
        self.limit = factor * (1.0 + np.linalg.norm(Z0, axis=0))
        self.alive = np.ones(Z0.shape[1], dtype=bool)
        self.blowup_step = np.full(Z0.shape[1], -1)
        self.dt = dt

    def check(self, step, *arrays):
        Z = arrays[0]
        with np.errstate(over="ignore", invalid="ignore"):
            norms = np.sqrt(np.einsum("ij,ij->j", Z, Z))
        bad = self.alive & ~(norms <= self.limit)
        if bad.any():
            self.alive[bad] = False
            self.blowup_step[bad] = step
            for arr in arrays:
                arr[:, bad] = 0.0
        return self.alive.any()


def _package(times, records, monitor, dt):
    out = []
    for col in range(records.shape[2]):
        states = records[:, :, col].T
        step = monitor.blowup_step[col]
        if step >= 0:
            keep = times < step * dt - 0.5 * dt
            out.append(Trajectory(times[keep], states[:, keep], stable=False, blowup_time=step * dt))
        else:
            out.append(Trajectory(times.copy(), states))
    return out


def _record_plan(dt, t_final, stride):
    total = n_steps(dt, t_final)
    rec_steps = np.arange(0, total + 1, stride)
    return total, rec_steps, rec_steps * dt


def integrate_first_order_batch(ops, shat0, dt, t_final, record_stride=1, scheme="imex"):
    """Integrate ``ds/dt = c + A s + H w(s)`` from every column of ``shat0``.

    IMEX step: ``(I - dt A) s_{n+1} = s_n + dt (c + H w(s_n))``; the
    ``r x r`` system is factorized once.  ``scheme="explicit"`` switches to
    forward Euler.  Returns one :class:`Trajectory` per column.
    """
    if ops.time_order != 1:
        raise ValueError("first-order integrator needs time_order=1 operators")
    Z = np.array(shat0, dtype=np.float64, ndmin=2)
    if Z.shape[0] != ops.r:
        Z = Z.T
    r = ops.r
    total, rec_steps, times = _record_plan(dt, t_final, int(record_stride))
    records = np.empty((rec_steps.size, r, Z.shape[1]))
    records[0] = Z
    c = ops.c_hat[:, None]
    quad = ops.H_hat is not None and ops.q > 0

    if scheme == "imex":
        lhs = np.eye(r) - dt * ops.A_hat
        cond = np.linalg.cond(lhs)
        if not np.isfinite(cond) or cond > 1e14:
            raise IntegrationError(
                f"I - dt*A_hat is singular (cond={cond:.2e}); try a smaller dt"
            )
        step_op = la.solve(lhs, np.eye(r))
    elif scheme != "explicit":
        raise ValueError(f"scheme must be one of {SCHEMES}")

    monitor = _Monitor(Z, dt)
    nxt = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, total + 1):
            forcing = c + ops.H_hat @ quad_features(Z, ops.fmap) if quad else c
            if scheme == "imex":
                Z = step_op @ (Z + dt * forcing)
            else:
                Z = Z + dt * (forcing + ops.A_hat @ Z)
            if not monitor.check(step, Z):
                records[nxt:] = 0.0
                break
            if nxt < rec_steps.size and step == rec_steps[nxt]:
                records[nxt] = Z
                nxt += 1
    return _package(times, records, monitor, dt)


def integrate_second_order_batch(ops, shat0, vhat0, dt, t_final, record_stride=1):
    """Central-difference integration of ``d^2 s/dt^2 = c + A s + H w(s)``.

    Start: ``s_1 = s_0 + dt v_0 + dt^2/2 f(s_0)``; then
    ``s_{n+1} = 2 s_n - s_{n-1} + dt^2 f(s_n)``.
    """
    if ops.time_order != 2:
        raise ValueError("second-order integrator needs time_order=2 operators")
    Z0 = np.array(shat0, dtype=np.float64, ndmin=2)
    if Z0.shape[0] != ops.r:
        Z0 = Z0.T
    V0 = np.zeros_like(Z0) if vhat0 is None else np.array(vhat0, dtype=np.float64, ndmin=2)
    if V0.shape != Z0.shape:
        V0 = V0.T
    total, rec_steps, times = _record_plan(dt, t_final, int(record_stride))
    records = np.empty((rec_steps.size, ops.r, Z0.shape[1]))
    records[0] = Z0
    dt2 = dt * dt

    monitor = _Monitor(Z0, dt)
    prev = Z0.copy()
    nxt = 1
    with np.errstate(over="ignore", invalid="ignore"):
        cur = Z0 + dt * V0 + 0.5 * dt2 * rhs(ops, Z0)
        for step in range(1, total + 1):
            if step > 1:
                prev, cur = cur, 2.0 * cur - prev + dt2 * rhs(ops, cur)
            if not monitor.check(step, cur, prev):
                records[nxt:] = 0.0
                break
            if nxt < rec_steps.size and step == rec_steps[nxt]:
                records[nxt] = cur
                nxt += 1
    return _package(times, records, monitor, dt)


def _initial_reduced(cfg, manifold):
    s0 = np.asarray(cfg.initial_state, dtype=np.float64)
    return encode(manifold, s0)


def integrate_first_order(ops, cfg, manifold):
    """Simulate a first-order model from ``s_hat_0 = V^T (s_0 - s_ref)``."""
    z0 = _initial_reduced(cfg, manifold)
    (traj,) = integrate_first_order_batch(ops, z0[:, None], cfg.dt, cfg.t_final, cfg.record_stride, cfg.scheme)
    if not traj.stable:
        log.warning("rom: blow-up at t=%.6g", traj.blowup_time)
    return traj


def integrate_second_order(ops, cfg, manifold):
    """Simulate a second-order model; initial reduced velocity is ``V^T v_0``."""
    z0 = _initial_reduced(cfg, manifold)
    v0 = None
    if cfg.initial_velocity is not None:
        v0 = (manifold.V.T @ np.asarray(cfg.initial_velocity, dtype=np.float64))[:, None]
    (traj,) = integrate_second_order_batch(ops, z0[:, None], v0, cfg.dt, cfg.t_final, cfg.record_stride)
    if not traj.stable:
        log.warning("rom: blow-up at t=%.6g", traj.blowup_time)
    return traj


def integrate(ops, cfg, manifold):
    """Dispatch on ``ops.time_order``."""
    if ops.time_order == 1:
        return integrate_first_order(ops, cfg, manifold)
    return integrate_second_order(ops, cfg, manifold)


def reconstruct(manifold, trajectory):
    """Decode every recorded reduced state; the trajectory is left untouched."""
    return decode(manifold, trajectory.reduced_states)
