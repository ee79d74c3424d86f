import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from qmrom.errors import SolverError
from qmrom.manifold import QuadFeatureMap, fit_pod, fit_vbar, reconstruction_error
from qmrom.numerics import solve_ridge_rows
from qmrom.sparsa import (
    SparsaConfig,
    SparsaResult,
    debias,
    default_lambda_grid,
    group_prox,
    lambda_max,
    objective,
    refine_path,
    select_columns,
    selection_data,
    sparsa_solve,
    write_path_csv,
    write_trace_csv,
)


def _prox_oracle(row, alpha, lam):
    """Minimize 0.5 ||x - row||^2 + alpha * lam * ||x|| numerically."""
    f = lambda x: 0.5 * np.sum((x - row) ** 2) + alpha * lam * np.sqrt(np.sum(x**2) + 1e-30)
    best = min(
        (minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
         for x0 in (row, np.zeros_like(row) + 1e-9)),
        key=lambda res: res.fun,
    )
    return best.x


# -- prox -------------------------------------------------------------------

def test_prox_lambda_zero_is_identity(rng):
    X = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(group_prox(X, 0.7, 0.0), X)


def test_prox_boundary_row_is_zero():
    X = np.array([[3.0, 4.0]])
    np.testing.assert_array_equal(group_prox(X, 1.0, 5.0), 0.0)
    np.testing.assert_array_equal(group_prox(X, 2.5, 2.0), 0.0)


def test_prox_worked_example():
    out = group_prox(np.array([[3.0, 4.0]]), 1.0, 1.0)
    np.testing.assert_allclose(out, [[2.4, 3.2]], rtol=1e-15)
    np.testing.assert_allclose(out[0], _prox_oracle(np.array([3.0, 4.0]), 1.0, 1.0), atol=1e-8)


@given(
    arrays(np.float64, (2,), elements=st.floats(-5, 5)),
    st.floats(0.1, 2.0),
    st.floats(0.0, 3.0),
)
def test_prox_matches_numerical_minimizer(row, alpha, lam):
    got = group_prox(row[None, :], alpha, lam)[0]
    np.testing.assert_allclose(got, _prox_oracle(row, alpha, lam), atol=1e-6)


def test_prox_rejects_bad_args():
    with pytest.raises(ValueError):
        group_prox(np.ones((1, 2)), 0.0, 1.0)
    with pytest.raises(ValueError):
        group_prox(np.ones((1, 2)), 1.0, -1.0)


# -- solver -----------------------------------------------------------------

def _random_problem(rng, q=4, n=5, k=30):
    W = rng.standard_normal((q, k))
    E = rng.standard_normal((n, k))
    return W, E


def test_huge_lambda_zeroes_everything(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E, SparsaConfig(lambda_grid=[2.0 * lambda_max(W, E)]))
    assert res.selected == [[]]
    np.testing.assert_array_equal(res.vbar_path[0], 0.0)


def test_lambda_max_zeroes_first_prox_step(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E, SparsaConfig(lambda_grid=[lambda_max(W, E)]))
    assert res.selected == [[]]


def test_lambda_zero_matches_ridge_solution(rng):
    W, E = _random_problem(rng, q=3, n=4, k=40)
    res = sparsa_solve(W, E, SparsaConfig(lambda_grid=[0.0], eps_tol=1e-14, max_iters=20000))
    X = res.vbar_path[0].T
    oracle = solve_ridge_rows(W, E.T, 0.0)
    assert np.linalg.norm(X - oracle) <= 1e-6 * np.linalg.norm(oracle)


def test_objective_nonincreasing(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E)
    for trace in res.objective_trace:
        assert all(b < a or b == a for a, b in zip(trace, trace[1:]))
        assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_objective_trace_matches_explicit_form(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E)
    for lam, vbar, trace in zip(res.lambdas, res.vbar_path, res.objective_trace):
        assert objective(vbar.T, W, E, lam) == pytest.approx(trace[-1], rel=1e-9, abs=1e-9)


def test_planted_support_recovered():
    rng = np.random.default_rng(7)
    q, n, k = 8, 6, 64
    Q, _ = np.linalg.qr(rng.standard_normal((k, q)))
    W = 3.0 * Q.T  # orthogonal rows
    X_true = np.zeros((q, n))
    planted = [1, 4, 6]
    X_true[planted] = rng.standard_normal((3, n)) + 2.0
    E = (W.T @ X_true).T + 1e-3 * rng.standard_normal((n, k))
    res = sparsa_solve(W, E)
    assert planted in res.selected


def test_support_monotone_flag(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E)
    sizes = res.support_sizes()
    assert res.support_monotone == all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_default_grid_shape(rng):
    W, E = _random_problem(rng)
    grid = default_lambda_grid(W, E)
    assert grid.size == 20
    assert grid[0] == pytest.approx(lambda_max(W, E))
    assert grid[-1] == pytest.approx(1e-4 * lambda_max(W, E))
    assert np.all(np.diff(grid) < 0)


def test_config_validation():
    with pytest.raises(ValueError):
        SparsaConfig(lambda_grid=[1.0, 2.0]).validate()
    with pytest.raises(ValueError):
        SparsaConfig(alpha_bar=0.0).validate()
    with pytest.raises(ValueError):
        SparsaConfig(eps_tol=0.0).validate()
    with pytest.raises(ValueError):
        sparsa_solve(np.ones((2, 3)), np.ones((2, 4)))


def test_divergence_raises_solver_error(rng):
    W, E = _random_problem(rng)
    cfg = SparsaConfig(lambda_grid=[1e-3], alpha_bar=1e6, max_backtracks=1)
    with pytest.raises(SolverError, match="did not decrease"):
        sparsa_solve(W, E, cfg)


def test_floor_accept_is_logged(rng, caplog):
    W, E = _random_problem(rng, q=2, n=2, k=10)
    cfg = SparsaConfig(lambda_grid=[0.0], eps_tol=1e-300, max_iters=100000)
    with caplog.at_level(logging.INFO, logger="qmrom.sparsa"):
        res = sparsa_solve(W, E, cfg)
    # the strict-decrease test can no longer be met; the solver stops and says so
    assert res.iterations[0] < cfg.max_iters
    assert any("stopping" in rec.getMessage() for rec in caplog.records)
    # objective-based stopping resolves X to about sqrt(machine eps)
    oracle = solve_ridge_rows(W, E.T, 0.0)
    assert np.linalg.norm(res.vbar_path[0].T - oracle) <= 1e-6 * np.linalg.norm(oracle)


# -- selection --------------------------------------------------------------

def _result(selected):
    return SparsaResult(lambdas=np.linspace(1.0, 0.1, len(selected)), selected=selected)


def test_select_zero_target():
    assert select_columns(_result([[], [2], [0, 2]]), 0) == []


def test_select_full_target_returns_smallest_lambda_support():
    assert select_columns(_result([[], [2], [0, 2], [0, 1, 2]]), 3) == [0, 1, 2]
    assert select_columns(_result([[], [2], [0, 2], [0, 1, 2]]), 5) == [0, 1, 2]


def test_select_budget_and_fallback():
    assert select_columns(_result([[], [2], [0, 2]]), 1) == [2]
    assert select_columns(_result([[1, 2], [0, 1, 2]]), 1) == [1, 2]
    with pytest.raises(ValueError):
        select_columns(_result([]), 1)
    with pytest.raises(ValueError):
        select_columns(_result([[]]), -1)


def test_helix_selects_s2_squared(helix):
    basis, Sc = fit_pod(helix.states, 2, "initial")
    W, E = selection_data(basis, Sc)
    res = sparsa_solve(W, E)
    refine_path(W, E, res, 1)
    assert select_columns(res, 1) == [2]
    assert np.all(np.diff(res.lambdas) < 0)


def test_refine_path_noop_when_budget_hit(rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E)
    before = len(res.lambdas)
    target = res.support_sizes()[len(res.lambdas) // 2]
    refine_path(W, E, res, target)
    assert len(res.lambdas) == before


# -- debiasing --------------------------------------------------------------

def test_debias_full_map_equals_fit_vbar(helix):
    basis, Sc = fit_pod(helix.states, 2, "initial")
    a = debias(basis, Sc, [0, 1, 2], 1e-3)
    b = fit_vbar(basis, Sc, QuadFeatureMap.full(2), 1e-3)
    np.testing.assert_array_equal(a.vbar, b.vbar)


def test_debias_helix_quasi_vector(helix):
    basis, Sc = fit_pod(helix.states, 2, "initial")
    m = debias(basis, Sc, QuadFeatureMap(2, ((1, 1),)), 0.0)
    np.testing.assert_allclose(m.vbar[:, 0], [0.1638, 0, -0.4308], atol=1e-3)
    assert np.abs(m.V.T @ m.vbar).max() <= 1e-8 * max(1.0, np.linalg.norm(m.vbar))


def test_debias_helix_pair_subset_error(helix):
    basis, Sc = fit_pod(helix.states, 2, "initial")
    m = debias(basis, Sc, QuadFeatureMap(2, ((0, 0), (1, 1))), 0.0)
    assert abs(reconstruction_error(m, helix.states) - 0.0258) <= 5e-3


def test_debias_needs_columns(helix):
    basis, Sc = fit_pod(helix.states, 2, "initial")
    with pytest.raises(ValueError):
        debias(basis, Sc, [], 0.0)


def test_csv_dumps(tmp_path, rng):
    W, E = _random_problem(rng)
    res = sparsa_solve(W, E)
    write_path_csv(res, tmp_path / "path.csv")
    write_trace_csv(res, tmp_path / "trace.csv")
    lines = (tmp_path / "path.csv").read_text().splitlines()
    assert lines[0] == "lambda,support_size,iterations,objective,support"
    assert len(lines) == 1 + len(res.lambdas)
    trace_rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(trace_rows) == 1 + sum(len(t) for t in res.objective_trace)
