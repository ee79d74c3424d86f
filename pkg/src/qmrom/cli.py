"""Command-line driver.

Subcommands::

    gen       generate a snapshot file for a benchmark problem
    pipeline  snapshots -> manifold -> reduced operators -> model file
    select    SpaRSA column-selection path for a given r
    simulate  integrate a saved model
    evaluate  relative errors on test data (median and quartiles)
    energy    linear vs quadratic retained energy over a range of r
    trace     ROM and reference values at one state entry over time
    sweep     grid search over gamma, lambda1, lambda2 on training error

Settings come from a ``key = value`` config file (``--config``); the
``--r``, ``--q``, ``--gamma``, ``--lambda1``, ``--lambda2`` and ``--seed``
flags override it.  Exit codes: 0 success, 1 configuration or input error,
2 numerical failure, 3 every test run unstable.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import matio
from .errors import (
    ConfigError,
    FormatError,
    IllConditionedError,
    InstabilityError,
    IntegrationError,
    NumericalError,
    SolverError,
)
from .experiments import (
    AdvectionExperiment,
    EvalReport,
    StageLog,
    advection_report,
    energy_table,
    learn,
    operator_sweep,
    point_trace,
    project_derivatives,
)
from .manifold import QuadFeatureMap, decode, encode, fit_pod, fit_vbar, linear_manifold, relative_error
from .problems import (
    PROBLEMS,
    TRAINING_MUS,
    WaveSpec,
    advection_solution,
    advection_training_set,
    helix_snapshots,
    wave_snapshots,
)
from .rom import SCHEMES, integrate_first_order_batch, integrate_second_order_batch
from .sparsa import SparsaConfig, refine_path, select_columns, selection_data, sparsa_solve, write_path_csv, write_trace_csv

log = logging.getLogger("qmrom")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_UNSTABLE = 0, 1, 2, 3

_HINTS = {
    IllConditionedError: "add regularization (gamma, lambda1 or lambda2)",
    SolverError: "loosen eps_tol or raise the iteration limit",
    IntegrationError: "reduce dt",
    InstabilityError: "increase lambda1/lambda2 or reduce dt",
    FormatError: "regenerate the input file",
    ConfigError: "check the config file and flags",
}


# -- problem settings ------------------------------------------------------

def _wave_spec(values):
    x0 = values.get_floats("x0")
    return WaveSpec(
        nx=values.get_int("nx", 96),
        ny=values.get_int("ny", 48),
        x0=tuple(x0) if x0 else (np.pi, np.pi),
        t_final=values.get_float("data_t_final", 10.0),
        k=values.get_int("k", 1000),
        width=values.get_float("width", 0.0072),
        substeps=values.get_int("substeps", 2),
    )


def generate_snapshots(cfg):
    """Snapshot set and its provenance metadata for ``cfg["problem"]``."""
    problem = cfg.get_str("problem", required=True)
    meta = {"problem": problem}
    if problem == "helix":
        k = cfg.get_int("k", 100)
        meta["k"] = str(k)
        return helix_snapshots(k), meta
    if problem == "advection":
        mus = cfg.get_floats("mu", list(TRAINING_MUS))
        n, k = cfg.get_int("n", 1024), cfg.get_int("k", 1000)
        c, t_data = cfg.get_float("c", 10.0), cfg.get_float("data_t_final", 0.1)
        meta.update(n=str(n), k=str(k), c=repr(c), data_t_final=repr(t_data), mu=",".join(repr(m) for m in mus))
        return advection_training_set(mus, n, k, c, t_data), meta
    if problem == "wave2d":
        spec = _wave_spec(cfg)
        meta.update(nx=str(spec.nx), ny=str(spec.ny), k=str(spec.k), data_t_final=repr(spec.t_final),
                    x0=",".join(repr(v) for v in spec.x0), width=repr(spec.width), substeps=str(spec.substeps))
        return wave_snapshots(spec), meta
    raise ConfigError(f"unknown problem {problem!r}; expected one of {', '.join(PROBLEMS)}")


def _merged(cfg, meta):
    """Config values with file metadata filling in anything not set."""
    values = {k: v for k, v in meta.items() if k != "kind"}
    values.update(cfg.values)
    return matio.RunConfig(values, cfg.source)


def load_or_generate(cfg, path):
    if path:
        return matio.load_snapshots(path)
    return generate_snapshots(cfg)


def _advection_experiment(cfg, n):
    return AdvectionExperiment(
        n=n,
        k=cfg.get_int("k", 1000),
        c=cfg.get_float("c", 10.0),
        t_data=cfg.get_float("data_t_final", 0.1),
        n_test=cfg.get_int("mu_test", 20),
        seed=cfg.get_int("seed", 0),
        dt=cfg.get_float("dt", 1e-5),
        t_final=cfg.get_float("t_final", 0.08),
        record_dt=cfg.get_float("record_dt", 1e-4),
    )


# -- commands --------------------------------------------------------------

def cmd_gen(cfg, output, stages):
    with stages.stage("gen", problem=cfg.get_str("problem", required=True)) as info:
        snapshots, meta = generate_snapshots(cfg)
        matio.save_snapshots(snapshots, output, meta)
        info.update(n=snapshots.n, k=snapshots.k, output=output)
    return snapshots


def _default_time_order(snapshots, meta):
    if snapshots.derivatives is not None:
        return snapshots.derivative_order
    return 2 if meta.get("problem") == "wave2d" else 1


def cmd_pipeline(cfg, input_path, output_dir, stages):
    """Snapshots to a saved model, writing one artifact per stage."""
    os.makedirs(output_dir, exist_ok=True)
    with stages.stage("load") as info:
        snapshots, meta = load_or_generate(cfg, input_path)
        cfg = _merged(cfg, meta)
        info.update(n=snapshots.n, k=snapshots.k)
    quadratic = cfg.get_str("manifold", "quadratic")
    if quadratic not in ("quadratic", "linear"):
        raise ConfigError("manifold must be 'quadratic' or 'linear'")
    time_order = cfg.get_int("time_order", _default_time_order(snapshots, meta))
    gamma, lam1, lam2 = (cfg.get_float(k, 0.0) for k in ("gamma", "lambda1", "lambda2"))
    result = learn(
        snapshots,
        r=cfg.get_int("r"),
        kappa=cfg.get_float("kappa"),
        gamma=gamma,
        lambda1=lam1,
        lambda2=lam2,
        quadratic=quadratic == "quadratic",
        q_target=cfg.get_int("q_target"),
        ref_mode=cfg.get_str("ref_mode", "time_mean"),
        time_order=time_order,
        stages=stages,
    )
    m = result.manifold
    with stages.stage("save") as info:
        out = lambda name: os.path.join(output_dir, name)
        matio.write_matrix_csv(result.full_basis.singular_values, out("singular_values.csv"))
        matio.write_matrix_binary(m.V, out("basis.qmrm"))
        matio.write_matrix_binary(m.vbar, out("vbar.qmrm"))
        if result.selection is not None:
            write_path_csv(result.selection, out("sparsa_path.csv"))
        extra = {k: v for k, v in meta.items()}
        extra.update(lambda1=repr(lam1), lambda2=repr(lam2))
        matio.save_model(m, result.ops, out("model.qmdl"), extra)
        info.update(r=m.r, q=m.q, output=out("model.qmdl"))
    return result


def cmd_select(cfg, input_path, output_dir, stages):
    os.makedirs(output_dir, exist_ok=True)
    snapshots, meta = load_or_generate(cfg, input_path)
    r = cfg.get_int("r", required=True)
    q_target = cfg.get_int("q_target", required=True)
    with stages.stage("select", r=r, q_target=q_target) as info:
        basis, S_shifted = fit_pod(snapshots.states, r, cfg.get_str("ref_mode", "time_mean"))
        W, E = selection_data(basis, S_shifted)
        sparsa_cfg = SparsaConfig(eps_tol=cfg.get_float("eps_tol", 1e-6), n_lambdas=cfg.get_int("n_lambdas", 20))
        res = sparsa_solve(W, E, sparsa_cfg)
        refine_path(W, E, res, q_target, sparsa_cfg)
        chosen = select_columns(res, q_target)
        write_path_csv(res, os.path.join(output_dir, "sparsa_path.csv"))
        write_trace_csv(res, os.path.join(output_dir, "sparsa_trace.csv"))
        pairs = QuadFeatureMap.from_columns(r, chosen).pairs if chosen else ()
        matio.write_table_csv(
            ["column", "i", "j"],
            [(c + 1, i + 1, j + 1) for c, (i, j) in zip(chosen, pairs)],
            os.path.join(output_dir, "selected.csv"),
        )
        info["selected"] = [c + 1 for c in chosen] or "none"
    return chosen


def _initial_states(cfg, manifold, meta, snapshots_path=None):
    """Full-order initial conditions (columns) and their labels."""
    problem = cfg.get_str("problem", meta.get("problem"))
    if snapshots_path:
        ss, _ = matio.load_snapshots(snapshots_path)
        cols = [sl.start for sl in ss.segments()]
        labels = ss.params[cols] if ss.params is not None else np.zeros(len(cols))
        return ss.states[:, cols], labels
    if problem == "advection":
        mus = cfg.get_floats("mu")
        if not mus:
            raise ConfigError("simulate needs 'mu' (or --input) for the advection problem")
        x = (np.arange(manifold.n) + 0.5) / manifold.n
        c = cfg.get_float("c", 10.0)
        S0 = np.column_stack([advection_solution(x, np.zeros(1), mu, c)[0][:, 0] for mu in mus])
        return S0, np.asarray(mus)
    if problem == "wave2d":
        return _wave_spec(cfg).initial_state().ravel()[:, None], np.zeros(1)
    raise ConfigError("simulate needs --input snapshots or a problem with a known initial state")


def _simulate(ops, manifold, S0, dt, t_final, stride, scheme="imex"):
    Z0 = encode(manifold, S0)
    if ops.time_order == 1:
        return integrate_first_order_batch(ops, Z0, dt, t_final, stride, scheme)
    return integrate_second_order_batch(ops, Z0, None, dt, t_final, stride)


def _load_model(path):
    if not path:
        raise ConfigError("a model file is required (--model)")
    manifold, ops = matio.load_model(path)
    return manifold, ops, matio.load_model_metadata(path)


def _need_ops(ops):
    if ops is None:
        raise ConfigError("model file has no reduced operators; run the pipeline with inference")
    return ops


def cmd_simulate(cfg, model_path, input_path, output_dir, stages):
    manifold, ops, meta = _load_model(model_path)
    ops = _need_ops(ops)
    cfg = _merged(cfg, meta)
    dt = cfg.get_float("dt", required=True)
    t_final = cfg.get_float("t_final", required=True)
    stride = cfg.get_int("record_stride", 1)
    scheme = cfg.get_str("scheme", "imex")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}, got {scheme!r}")
    os.makedirs(output_dir, exist_ok=True)
    with stages.stage("simulate", dt=dt, t_final=t_final, scheme=scheme) as info:
        S0, labels = _initial_states(cfg, manifold, meta, input_path)
        trajs = _simulate(ops, manifold, S0, dt, t_final, stride, scheme)
        for i, traj in enumerate(trajs):
            rows = [(t, *z) for t, z in zip(traj.times, traj.reduced_states.T)]
            header = ["t"] + [f"s{j + 1}" for j in range(manifold.r)]
            matio.write_table_csv(header, rows, os.path.join(output_dir, f"trajectory_{i}.csv"))
            matio.write_matrix_binary(decode(manifold, traj.reduced_states), os.path.join(output_dir, f"states_{i}.qmrm"))
        info["stable"] = sum(t.stable for t in trajs)
        info["runs"] = len(trajs)
    if not any(t.stable for t in trajs):
        raise InstabilityError(f"all {len(trajs)} simulations blew up")
    return trajs


def cmd_evaluate(cfg, model_path, input_path, stages):
    """Relative error of a saved model on its problem's test data."""
    manifold, ops, meta = _load_model(model_path)
    cfg = _merged(cfg, meta)
    problem = cfg.get_str("problem")
    with stages.stage("evaluate", problem=problem or "snapshots") as info:
        if input_path or problem == "helix":
            # reconstruction of stored (or regenerated) snapshots
            ss = matio.load_snapshots(input_path)[0] if input_path else helix_snapshots(cfg.get_int("k", 100))
            err = relative_error(ss.states, decode(manifold, encode(manifold, ss.states)))
            report = EvalReport([0.0], [err], [True])
        elif problem == "advection":
            exp = _advection_experiment(cfg, manifold.n)
            report = advection_report(manifold, _need_ops(ops), exp)
        elif problem == "wave2d":
            spec = _wave_spec(cfg)
            ss = wave_snapshots(spec)
            (traj,) = _simulate(_need_ops(ops), manifold, ss.states[:, :1], cfg.get_float("dt", 0.01), spec.t_final, 1)
            if traj.stable:
                Z = np.vstack([np.interp(ss.times, traj.times, row) for row in traj.reduced_states])
                report = EvalReport([0.0], [relative_error(ss.states, decode(manifold, Z))], [True])
            else:
                report = EvalReport([0.0], [math.nan], [False])
        else:
            raise ConfigError("evaluate needs --input snapshots or a known problem")
        q1, med, q3 = report.quartiles()
        info.update(median=med, q1=q1, q3=q3, unstable=report.n_unstable)
    return report


def write_report(report, path):
    matio.write_table_csv(["param", "error", "stable"], report.rows(), path)


def cmd_energy(cfg, model_path, input_path, output, stages):
    """Energy table for r in [r_min, r_max] with the model's gamma and reference."""
    meta = {}
    gamma = cfg.get_float("gamma", 0.0)
    ref_mode = cfg.get_str("ref_mode", "time_mean")
    q_model = None
    if model_path:
        manifold, _, meta = _load_model(model_path)
        gamma, ref_mode, q_model = manifold.gamma, manifold.pod.ref_mode, manifold.q
    cfg = _merged(cfg, meta)
    snapshots, _ = load_or_generate(cfg, input_path)
    S = snapshots.states
    r_max = cfg.get_int("r_max", cfg.get_int("r", min(S.shape)))
    r_min = cfg.get_int("r_min", 1)
    if not 1 <= r_min <= r_max <= min(S.shape):
        raise ConfigError(f"r range [{r_min}, {r_max}] outside [1, {min(S.shape)}]")
    with stages.stage("energy", r_min=r_min, r_max=r_max, gamma=gamma) as info:
        basis, S_shifted = fit_pod(S, r_max, ref_mode)
        if q_model == 0:
            top = linear_manifold(basis)
        else:
            top = fit_vbar(basis, S_shifted, QuadFeatureMap.full(r_max), gamma)
        rows = energy_table(top, S, range(r_min, r_max + 1))
        matio.write_table_csv(["r", "linear", "quadratic"], rows, output)
        sv_path = os.path.splitext(output)[0] + "_singular_values.csv"
        matio.write_matrix_csv(basis.singular_values, sv_path)
        info["rows"] = len(rows)
    return rows


def cmd_trace(cfg, model_path, input_path, output, stages):
    """ROM and reference values of one state entry (domain centre by default)."""
    manifold, ops, meta = _load_model(model_path)
    ops = _need_ops(ops)
    cfg = _merged(cfg, meta)
    problem = cfg.get_str("problem")
    stride = cfg.get_int("record_stride", 1)
    with stages.stage("trace") as info:
        if input_path:
            ref, _ = matio.load_snapshots(input_path)
        elif problem == "wave2d":
            spec = _wave_spec(cfg)
            ref = wave_snapshots(spec)
        else:
            raise ConfigError("trace needs --input reference snapshots or problem = wave2d")
        default_point = _wave_spec(cfg).center_index() if problem == "wave2d" else manifold.n // 2
        point = cfg.get_int("point", default_point)
        if not 0 <= point < manifold.n:
            raise ConfigError(f"point index {point} outside [0, {manifold.n})")
        dt = cfg.get_float("dt", float(ref.times[1] - ref.times[0]))
        t_final = cfg.get_float("t_final", float(ref.times[-1] - ref.times[0]))
        (traj,) = _simulate(ops, manifold, ref.states[:, :1], dt, t_final, stride)
        rom = point_trace(manifold, traj, point)
        t = traj.times + ref.times[0]
        fom = np.interp(t, ref.times, ref.states[point])
        matio.write_table_csv(["t", "fom", "rom"], list(zip(t, fom, rom)), output)
        info.update(point=point, stable=int(traj.stable), rows=t.size)
    if not traj.stable:
        raise InstabilityError(f"ROM blew up at t={traj.blowup_time:.6g}")
    return t, fom, rom


def training_error(manifold, ops, snapshots, dt):
    """Mean relative error of ROM runs started from each trajectory's first snapshot.

    The ROM state is interpolated linearly to the snapshot times, so ``dt``
    need not divide the snapshot spacing.
    """
    segs = snapshots.segments()
    starts = [sl.start for sl in segs]
    Z0 = encode(manifold, snapshots.states[:, starts])
    t_final = max(float(snapshots.times[sl.stop - 1] - snapshots.times[sl.start]) for sl in segs)
    if ops.time_order == 1:
        trajs = integrate_first_order_batch(ops, Z0, dt, t_final + dt)
    else:
        # initial velocity from the first-derivative stencil
        V0 = project_derivatives(manifold, snapshots, 1)[:, starts]
        trajs = integrate_second_order_batch(ops, Z0, V0, dt, t_final + dt)
    errors = []
    for sl, traj in zip(segs, trajs):
        if not traj.stable:
            return math.inf
        t = snapshots.times[sl] - snapshots.times[sl.start]
        Z = np.vstack([np.interp(t, traj.times, row) for row in traj.reduced_states])
        errors.append(relative_error(snapshots.states[:, sl], decode(manifold, Z)))
    return float(np.mean(errors))


def cmd_sweep(cfg, input_path, output_dir, stages):
    """Grid search; writes ``sweep.csv``, ``best.cfg`` and the best model."""
    os.makedirs(output_dir, exist_ok=True)
    snapshots, meta = load_or_generate(cfg, input_path)
    cfg = _merged(cfg, meta)
    r = cfg.get_int("r", required=True)
    dt = cfg.get_float("dt", required=True)
    quadratic = cfg.get_str("manifold", "quadratic") == "quadratic"
    gammas = cfg.get_floats("gamma_grid", [cfg.get_float("gamma", 0.0)])
    l1_grid = cfg.get_floats("lambda1_grid", [cfg.get_float("lambda1", 0.0)])
    l2_grid = cfg.get_floats("lambda2_grid", [cfg.get_float("lambda2", 0.0)])
    time_order = cfg.get_int("time_order", _default_time_order(snapshots, meta))
    ref_mode = cfg.get_str("ref_mode", "time_mean")

    table, best = [], None
    pod_data = None
    with stages.stage("sweep", r=r, candidates=len(gammas) * len(l1_grid) * len(l2_grid)) as info:
        for gamma in gammas if quadratic else [0.0]:
            res = learn(snapshots, r=r, gamma=gamma, quadratic=quadratic, ref_mode=ref_mode,
                        time_order=time_order, infer=False, pod_data=pod_data, stages=StageLog(lambda _: None))
            pod_data = (res.full_basis, res.S_shifted)
            evaluate = lambda m, o: training_error(m, o, snapshots, dt)
            try:
                sweep = operator_sweep(res.manifold, snapshots, evaluate, l1_grid, l2_grid, time_order)
            except InstabilityError as exc:
                log.warning("sweep: gamma=%g: %s", gamma, exc)
                table += [{"gamma": gamma, "lambda1": a, "lambda2": b, "error": math.inf, "stable": False}
                          for a in l1_grid for b in (l2_grid if res.manifold.q else [0.0])]
                continue
            table += sweep.table
            err = min(row["error"] for row in sweep.table if row["stable"])
            if best is None or err < best[0] or (err == best[0] and gamma > best[1]["gamma"]):
                best = (err, sweep.best, res.manifold)
        if best is None:
            raise InstabilityError("every sweep candidate was unstable")
        err, choice, manifold = best
        rows = [(row["gamma"], row["lambda1"], row["lambda2"], row["error"], int(row["stable"])) for row in table]
        matio.write_table_csv(["gamma", "lambda1", "lambda2", "error", "stable"], rows,
                              os.path.join(output_dir, "sweep.csv"))
        best_cfg = {k: repr(float(choice[k])) for k in ("gamma", "lambda1", "lambda2")}
        matio.atomic_write(os.path.join(output_dir, "best.cfg"),
                           "".join(f"{k} = {v}\n" for k, v in best_cfg.items()), mode="w")
        extra = dict(meta)
        extra.update(lambda1=best_cfg["lambda1"], lambda2=best_cfg["lambda2"])
        matio.save_model(manifold, choice["ops"], os.path.join(output_dir, "model.qmdl"), extra)
        info.update(best_error=err, **best_cfg)
    return choice, table


# -- entry point -----------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="qmrom", description="Quadratic-manifold operator inference")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output_help):
        p.add_argument("--config", help="key = value run configuration")
        p.add_argument("--input", help="snapshot file (.qmdl)")
        p.add_argument("--output", required=True, help=output_help)
        p.add_argument("--r", type=int)
        p.add_argument("--q", type=int, help="number of quadratic columns to select")
        p.add_argument("--gamma", type=float)
        p.add_argument("--lambda1", type=float)
        p.add_argument("--lambda2", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--problem", choices=PROBLEMS)
        return p

    common(sub.add_parser("gen", help="generate snapshots"), "snapshot file to write")
    common(sub.add_parser("pipeline", help="learn a model"), "output directory")
    common(sub.add_parser("select", help="column selection path"), "output directory")
    common(sub.add_parser("sweep", help="hyperparameter grid search"), "output directory")
    for name, help_text, out in (
        ("simulate", "integrate a model", "output directory"),
        ("evaluate", "test errors of a model", "report CSV"),
        ("energy", "energy table", "energy CSV"),
        ("trace", "time series at one state entry", "trace CSV"),
    ):
        p = common(sub.add_parser(name, help=help_text), out)
        p.add_argument("--model", help="model file (.qmdl)")
        if name == "trace":
            p.add_argument("--point", type=int, help="state index to monitor")
    return parser


def _config_from_args(args):
    cfg = matio.load_run_config(args.config) if args.config else matio.RunConfig(source="<flags>")
    overrides = {
        "r": args.r, "q_target": args.q, "gamma": args.gamma, "lambda1": args.lambda1,
        "lambda2": args.lambda2, "seed": args.seed, "problem": args.problem,
        "point": getattr(args, "point", None),
    }
    overrides = {k: (repr(v) if isinstance(v, float) else v) for k, v in overrides.items()}
    return cfg.with_overrides(overrides)


def run(args, stages):
    cfg = _config_from_args(args)
    cmd = args.command
    if cmd == "gen":
        cmd_gen(cfg, args.output, stages)
    elif cmd == "pipeline":
        cmd_pipeline(cfg, args.input, args.output, stages)
    elif cmd == "select":
        cmd_select(cfg, args.input, args.output, stages)
    elif cmd == "sweep":
        cmd_sweep(cfg, args.input, args.output, stages)
    elif cmd == "simulate":
        cmd_simulate(cfg, args.model, args.input, args.output, stages)
    elif cmd == "evaluate":
        report = cmd_evaluate(cfg, args.model, args.input, stages)
        write_report(report, args.output)
        q1, med, q3 = report.quartiles()
        print(f"median={med:.6g} q1={q1:.6g} q3={q3:.6g} unstable={report.n_unstable}")
    elif cmd == "energy":
        cmd_energy(cfg, args.model, args.input, args.output, stages)
    elif cmd == "trace":
        cmd_trace(cfg, args.model, args.input, args.output, stages)


def exit_code(exc):
    if isinstance(exc, InstabilityError):
        return EXIT_UNSTABLE
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_CONFIG


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    stages = StageLog(lambda line: print(line, file=sys.stderr, flush=True))
    try:
        run(args, stages)
    except (ConfigError, FormatError, NumericalError, InstabilityError, OSError, ValueError) as exc:
        stage = stages.current or args.command
        hint = next((h for cls, h in _HINTS.items() if isinstance(exc, cls)), "check the inputs")
        print(f"error: stage={stage}: {exc} (hint: {hint})", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
