"""Learning pipeline and benchmark experiments.

:func:`learn` runs the full chain from snapshots to a reduced model:
centering, POD, choice of ``r``, encoding, optional column selection,
the quadratic correction, projected derivatives and operator inference.
The remaining helpers evaluate models on the three benchmark problems and
collect the results into small report objects.
"""

from __future__ import annotations

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InstabilityError
from .manifold import (
    QuadFeatureMap,
    center,
    decode,
    encode,
    fit_pod,
    fit_vbar,
    linear_manifold,
    pod,
    quad_features,
    reconstruction_error,
    relative_error,
    retained_energy_linear,
    retained_energy_quadratic,
)
from .numerics import fd_derivative
from .opinf import OpinfProblem, infer_quadratic, sweep_hyperparameters
from .problems import (
    TRAINING_MUS,
    AdvectionSpec,
    WaveSpec,
    advection_solution,
    advection_training_set,
    helix_snapshots,
    sample_parameters,
    wave_snapshots,
)
from .rom import integrate_first_order_batch, integrate_second_order_batch
from .sparsa import SparsaConfig, debias, refine_path, select_columns, selection_data, sparsa_solve

log = logging.getLogger(__name__)


class StageLog:
    """Emits ``stage=<name> wall_ms=<int> key=value ...`` lines.

    Keys added inside the ``with`` block via the yielded dict are appended
    to the line.  ``self.current`` names the stage in progress so callers
    can report where a failure happened.
    """

    def __init__(self, emit=None):
        self.emit = emit or (lambda line: log.info("%s", line))
        self.current = None
        self.lines = []

    @contextmanager
    def stage(self, name, **fields):
        self.current = name
        start = time.perf_counter()
        yield fields
        wall = int(round(1000.0 * (time.perf_counter() - start)))
        parts = [f"stage={name}", f"wall_ms={wall}"]
        parts += [f"{k}={_fmt(v)}" for k, v in fields.items()]
        line = " ".join(parts)
        self.lines.append(line)
        self.emit(line)
        self.current = None


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return str(v)


def choose_r(singular_values, kappa):
    """Smallest ``r`` whose cumulative energy reaches ``kappa``.

    ``kappa >= 1`` returns the numerical rank of the centered data.
    """
    sv = np.asarray(singular_values, dtype=np.float64)
    if not 0 < kappa:
        raise ConfigError(f"energy tolerance kappa must be positive, got {kappa}")
    if sv.size == 0 or sv[0] == 0:
        raise ConfigError("centered snapshot matrix is zero; cannot choose r")
    tol = sv[0] * max(sv.size, 1) * np.finfo(float).eps * 10
    rank = int(np.count_nonzero(sv > tol))
    if kappa >= 1.0:
        return rank
    energy = np.cumsum(sv**2) / np.sum(sv**2)
    return min(int(np.searchsorted(energy, kappa - 1e-15)) + 1, rank)


@dataclass
class LearnResult:
    manifold: object
    ops: object
    S_shifted: np.ndarray
    selection: Optional[object] = None
    selected_columns: Optional[list] = None
    full_basis: Optional[object] = None


def project_derivatives(manifold, snapshots, time_order):
    """Reduced derivative data: projected exact derivatives when present,
    otherwise finite differences of the encoded trajectories."""
    if snapshots.derivatives is not None and snapshots.derivative_order == time_order:
        return manifold.V.T @ snapshots.derivatives
    shat = encode(manifold, snapshots.states)
    out = np.empty_like(shat)
    for sl in snapshots.segments():
        t = snapshots.times[sl]
        steps = np.diff(t)
        if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-8, atol=0):
            raise ConfigError("finite-difference derivatives need uniformly spaced snapshot times")
        out[:, sl] = fd_derivative(shat[:, sl], float(steps[0]), time_order)
    return out


def learn(
    snapshots,
    r=None,
    kappa=None,
    gamma=0.0,
    lambda1=0.0,
    lambda2=0.0,
    quadratic=True,
    q_target=None,
    ref_mode="time_mean",
    time_order=None,
    sparsa_cfg=None,
    stages=None,
    infer=True,
    pod_data=None,
):
    """Fit a (quasi-)quadratic manifold and infer reduced operators.

    Parameters
    ----------
    snapshots : SnapshotSet
    r : int, optional
        Reduced dimension; chosen from ``kappa`` when omitted.
    kappa : float, optional
        Cumulative energy tolerance used when ``r`` is not given.
    gamma, lambda1, lambda2 : float
        Regularization of the manifold fit and of the linear and quadratic
        operator blocks.
    quadratic : bool
        ``False`` gives the plain POD subspace and a linear model.
    q_target : int, optional
        Number of quadratic columns to keep via SpaRSA selection.
    time_order : {1, 2}, optional
        Order of the reduced model; defaults to the order of the stored
        derivatives, or 1.
    pod_data : tuple, optional
        ``(full_basis, S_shifted)`` from an earlier call on the same data
        (``LearnResult.full_basis`` and ``.S_shifted``); skips the SVD.
    """
    stages = stages or StageLog()
    S = snapshots.states
    if time_order is None:
        time_order = snapshots.derivative_order or 1

    if pod_data is not None:
        full_basis, S_shifted = pod_data
        if full_basis.ref_mode != ref_mode or S_shifted.shape != S.shape:
            raise ValueError("cached POD does not match the data or ref_mode")
    with stages.stage("center", ref_mode=ref_mode, n=snapshots.n, k=snapshots.k):
        if pod_data is None:
            s_ref, S_shifted = center(S, ref_mode)
    with stages.stage("svd") as info:
        if pod_data is None:
            full_basis = pod(S_shifted, min(S.shape), s_ref=s_ref, ref_mode=ref_mode)
        info["sigma_1"] = full_basis.singular_values[0]
    with stages.stage("choose_r") as info:
        if r is None:
            if kappa is None:
                raise ConfigError("either r or kappa must be given")
            r = choose_r(full_basis.singular_values, kappa)
        if not 1 <= r <= min(S.shape):
            raise ConfigError(f"r={r} must lie in [1, {min(S.shape)}]")
        basis = full_basis.truncate(r)
        info["r"] = r
        info["energy"] = retained_energy_linear(full_basis, r)

    selection = chosen = None
    with stages.stage("encode", r=r):
        W, E = selection_data(basis, S_shifted)
    if quadratic and q_target is not None and q_target < W.shape[0]:
        with stages.stage("select", q_target=q_target) as info:
            selection = sparsa_solve(W, E, sparsa_cfg)
            refine_path(W, E, selection, q_target, sparsa_cfg)
            chosen = select_columns(selection, q_target)
            info["selected"] = [c + 1 for c in chosen] or "none"
    with stages.stage("fit_vbar", gamma=gamma) as info:
        if not quadratic:
            manifold = linear_manifold(basis)
        elif chosen is not None:
            manifold = debias(basis, S_shifted, chosen, gamma) if chosen else linear_manifold(basis)
        else:
            manifold = fit_vbar(basis, S_shifted, QuadFeatureMap.full(r), gamma)
        info["q"] = manifold.q

    ops = None
    if infer:
        with stages.stage("project", time_order=time_order):
            Shat = encode(manifold, S)
            Dhat = project_derivatives(manifold, snapshots, time_order)
        with stages.stage("opinf", lambda1=lambda1, lambda2=lambda2):
            problem = OpinfProblem(Shat, Dhat, manifold.fmap, lambda1, lambda2, time_order)
            ops = infer_quadratic(problem)
    return LearnResult(manifold, ops, S_shifted, selection, chosen, full_basis)


def operator_sweep(manifold, snapshots, evaluate, lambda1_grid, lambda2_grid=(0.0,), time_order=None):
    """Grid search over the operator regularization for a fixed manifold.

    ``evaluate(manifold, ops)`` returns a training error (``inf`` or a
    numerical error marks the candidate unstable).  Returns the
    :class:`~qmrom.opinf.SweepResult`; the best candidate's operators are
    stored under ``best["ops"]``.
    """
    if time_order is None:
        time_order = snapshots.derivative_order or 1
    Shat = encode(manifold, snapshots.states)
    Dhat = project_derivatives(manifold, snapshots, time_order)
    l2_grid = lambda2_grid if manifold.q else (0.0,)
    candidates = [
        {"gamma": manifold.gamma, "lambda1": float(a), "lambda2": float(b)}
        for a in lambda1_grid for b in l2_grid
    ]

    def fit(cand):
        problem = OpinfProblem(Shat, Dhat, manifold.fmap, cand["lambda1"], cand["lambda2"], time_order)
        return infer_quadratic(problem)

    result = sweep_hyperparameters(candidates, lambda cand: evaluate(manifold, fit(cand)))
    result.best["ops"] = fit(result.best)
    return result


# -- reports ---------------------------------------------------------------

@dataclass
class EvalReport:
    """Per-parameter relative errors with robust summary statistics.

    Quartiles and median use stable runs only; unstable runs carry ``nan``.
    """

    params: np.ndarray
    errors: np.ndarray
    stable: np.ndarray
    energy_table: Optional[list] = None
    singular_values: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        self.stable = np.asarray(self.stable, dtype=bool)
        if not self.stable.any():
            raise InstabilityError(f"all {self.stable.size} test runs were unstable")

    @property
    def n_unstable(self):
        return int((~self.stable).sum())

    def quartiles(self):
        return tuple(float(v) for v in np.percentile(self.errors[self.stable], [25, 50, 75]))

    @property
    def median(self):
        return self.quartiles()[1]

    def rows(self):
        return [(float(p), float(e), int(s)) for p, e, s in zip(self.params, self.errors, self.stable)]


# -- helix -----------------------------------------------------------------

HELIX_SUBSETS = ((1,), (2,), (3,), (1, 2), (2, 3), (1, 3), (1, 2, 3))


def helix_table(k=100, endpoint=False, gamma=0.0):
    """Reconstruction errors of the linear and all quasi-quadratic fits.

    Returns a dict keyed by ``"linear"`` and by one-based column tuples.
    """
    S = helix_snapshots(k, endpoint=endpoint).states
    basis, S_shifted = fit_pod(S, 2, "initial")
    table = {"linear": reconstruction_error(linear_manifold(basis), S)}
    for subset in HELIX_SUBSETS:
        fmap = QuadFeatureMap.from_columns(2, [c - 1 for c in subset])
        table[subset] = reconstruction_error(fit_vbar(basis, S_shifted, fmap, gamma), S)
    return table


# -- advection -------------------------------------------------------------

@dataclass
class AdvectionExperiment:
    """Desk-scale transport setup.

    Training data: ``k`` exact samples on ``(0, t_data]`` for each training
    parameter.  Test: ROMs integrated with step ``dt`` to ``t_final`` and
    compared to the exact solution every ``record_dt``.
    """

    n: int = 1024
    k: int = 1000
    c: float = 10.0
    t_data: float = 0.1
    train_mus: tuple = TRAINING_MUS
    n_test: int = 20
    seed: int = 0
    dt: float = 1e-5
    t_final: float = 0.08
    record_dt: float = 1e-4

    def training_set(self):
        return advection_training_set(self.train_mus, self.n, self.k, self.c, self.t_data)

    def test_mus(self):
        return sample_parameters(self.n_test, self.seed)

    def grid(self):
        return AdvectionSpec(c=self.c, n=self.n, k=self.k, t_final=self.t_data).grid()[0]

    @property
    def stride(self):
        stride = int(round(self.record_dt / self.dt))
        if stride < 1 or not math.isclose(stride * self.dt, self.record_dt, rel_tol=1e-9):
            raise ConfigError("record_dt must be a positive multiple of dt")
        return stride


def advection_errors(manifold, ops, exp, mus):
    """Relative space-time error of the ROM for each parameter in ``mus``."""
    x = exp.grid()
    mus = np.asarray(mus, dtype=np.float64)
    S0 = np.column_stack([advection_solution(x, np.zeros(1), m, exp.c)[0][:, 0] for m in mus])
    Z0 = encode(manifold, S0)
    trajs = integrate_first_order_batch(ops, Z0, exp.dt, exp.t_final, exp.stride)
    errors = np.full(mus.size, np.nan)
    stable = np.zeros(mus.size, dtype=bool)
    for i, (mu, traj) in enumerate(zip(mus, trajs)):
        if not traj.stable:
            continue
        t = traj.times[1:]
        exact, _ = advection_solution(x, t, mu, exp.c)
        approx = decode(manifold, traj.reduced_states[:, 1:])
        errors[i] = relative_error(exact, approx)
        stable[i] = True
    return errors, stable


def advection_report(manifold, ops, exp, mus=None):
    mus = exp.test_mus() if mus is None else np.asarray(mus)
    errors, stable = advection_errors(manifold, ops, exp, mus)
    return EvalReport(mus, errors, stable)


def energy_table(manifold, S, r_values):
    """``(r, linear energy, quadratic energy)`` rows using refits at each ``r``."""
    rows = []
    for r in r_values:
        lin = retained_energy_linear(manifold.pod, r)
        quad = retained_energy_quadratic(manifold, S, r) if manifold.q else lin
        rows.append((int(r), lin, quad))
    return rows


# -- wave ------------------------------------------------------------------

def wave_rom_trajectory(manifold, ops, spec, dt=0.01, record_stride=1):
    """Integrate a second-order ROM from the pulse at rest."""
    z0 = encode(manifold, spec.initial_state().ravel())
    (traj,) = integrate_second_order_batch(ops, z0[:, None], None, dt, spec.t_final, record_stride)
    return traj


def point_trace(manifold, traj, point):
    """Reconstructed value of state entry ``point`` along a trajectory."""
    if not 0 <= point < manifold.n:
        raise ValueError(f"point index {point} outside [0, {manifold.n})")
    Z = traj.reduced_states
    value = manifold.s_ref[point] + manifold.V[point] @ Z
    if manifold.q:
        value = value + manifold.vbar[point] @ quad_features(Z, manifold.fmap)
    return value


def trace_comparison(manifold, traj, fom_times, fom_states, point):
    """``(times, rom, fom)`` with the FOM trace interpolated to ROM times."""
    rom = point_trace(manifold, traj, point)
    fom = np.interp(traj.times, fom_times, fom_states[point])
    return traj.times, rom, fom


def trace_rms(manifold, ops, snapshots, spec, point=None, dt=0.01):
    """RMS gap between ROM and FOM traces at ``point`` (domain centre by default).

    Returns ``inf`` for a ROM that blows up before ``spec.t_final``.
    """
    point = spec.center_index() if point is None else point
    traj = wave_rom_trajectory(manifold, ops, spec, dt)
    if not traj.stable:
        return math.inf
    _, rom, fom = trace_comparison(manifold, traj, snapshots.times, snapshots.states, point)
    return float(np.sqrt(np.mean((rom - fom) ** 2)))


def wave_training_error(manifold, ops, snapshots, spec, dt=0.01):
    """Relative state error of the ROM against the training snapshots."""
    traj = wave_rom_trajectory(manifold, ops, spec, dt)
    if not traj.stable:
        return math.inf
    Z = np.vstack([np.interp(snapshots.times, traj.times, row) for row in traj.reduced_states])
    return relative_error(snapshots.states, decode(manifold, Z))


def wave_data(spec=None):
    spec = spec or WaveSpec()
    return spec, wave_snapshots(spec)
