from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from qmrom.errors import IllConditionedError
from qmrom.numerics import fd_derivative, solve_ridge_rows, stencil, thin_svd


# -- thin SVD ---------------------------------------------------------------

def test_svd_identity():
    res = thin_svd(np.eye(3))
    np.testing.assert_allclose(res.singular_values, [1, 1, 1])


def test_svd_ones_column():
    res = thin_svd(np.ones((3, 1)))
    assert res.singular_values[0] == pytest.approx(np.sqrt(3.0))


def test_svd_matches_gram_eigenvalues(rng):
    a = rng.standard_normal((6, 4))
    sv = thin_svd(a).singular_values
    eig = np.sort(np.linalg.eigvalsh(a.T @ a))[::-1]
    np.testing.assert_allclose(sv**2, eig, rtol=1e-9)


def test_svd_rejects_nonfinite():
    a = np.ones((3, 3))
    a[1, 1] = np.nan
    with pytest.raises(ValueError):
        thin_svd(a)


def test_svd_reconstruction_many_random(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 201))
        k = int(rng.integers(1, 101))
        a = rng.standard_normal((n, k))
        res = thin_svd(a)
        p = min(n, k)
        assert res.U.shape == (n, p) and res.Vt.shape == (p, k)
        assert np.all(np.diff(res.singular_values) <= 0) and np.all(res.singular_values >= 0)
        recon = (res.U * res.singular_values) @ res.Vt
        assert np.linalg.norm(a - recon) <= 1e-10 * np.linalg.norm(a)
        assert np.abs(res.U.T @ res.U - np.eye(p)).max() <= 1e-10
        assert np.abs(res.Vt @ res.Vt.T - np.eye(p)).max() <= 1e-10


# -- ridge ------------------------------------------------------------------

def _gauss_inverse(m):
    """Gauss-Jordan elimination with partial pivoting (test oracle)."""
    n = m.shape[0]
    aug = np.hstack([m.astype(float), np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def test_ridge_zero_targets(rng):
    w = rng.standard_normal((3, 10))
    for gamma in (0.0, 0.1, 10.0):
        np.testing.assert_array_equal(solve_ridge_rows(w, np.zeros((10, 2)), gamma), 0.0)


def test_ridge_identity(rng):
    t = rng.standard_normal((4, 3))
    np.testing.assert_allclose(solve_ridge_rows(np.eye(4), t, 0.0), t, atol=1e-14)


def test_ridge_dense_inverse_oracle(rng):
    w = rng.standard_normal((4, 20))
    t = rng.standard_normal((20, 3))
    gamma = 0.5
    expected = _gauss_inverse(w @ w.T + gamma * np.eye(4)) @ (w @ t)
    got = solve_ridge_rows(w, t, gamma)
    assert np.linalg.norm(got - expected) <= 1e-10 * np.linalg.norm(expected)


def test_ridge_per_feature_weights(rng):
    w = rng.standard_normal((3, 15))
    t = rng.standard_normal(15)
    g = np.array([0.0, 1.0, 5.0])
    expected = _gauss_inverse(w @ w.T + np.diag(g)) @ (w @ t)
    np.testing.assert_allclose(solve_ridge_rows(w, t, g), expected, rtol=1e-10)


def test_ridge_ill_conditioned_needs_gamma():
    w = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    with pytest.raises(IllConditionedError, match="gamma"):
        solve_ridge_rows(w, np.ones((3, 1)), 0.0)
    solve_ridge_rows(w, np.ones((3, 1)), 1e-3)


def test_ridge_negative_gamma_rejected(rng):
    with pytest.raises(ValueError):
        solve_ridge_rows(rng.standard_normal((2, 5)), np.ones(5), -1.0)


@given(
    arrays(np.float64, (3, 12), elements=st.floats(-10, 10)),
    arrays(np.float64, (12, 2), elements=st.floats(-10, 10)),
    st.floats(1e-6, 1e3),
    st.floats(1.0, 1e3),
)
def test_ridge_shrinkage_monotone(w, t, g1, factor):
    x1 = solve_ridge_rows(w, t, g1)
    x2 = solve_ridge_rows(w, t, g1 * factor)
    assert np.linalg.norm(x1) >= np.linalg.norm(x2) * (1 - 1e-9) - 1e-12


# -- stencils ---------------------------------------------------------------

def _fraction_weights(offsets, order):
    """Exact weights with sum_m c_m m^j = order! * [j == order], j < len(offsets)."""
    n = len(offsets)
    rows = [[Fraction(o) ** j for o in offsets] + [Fraction(factorial(order) if j == order else 0)] for j in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        rows[col] = [v / rows[col][col] for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [row[-1] for row in rows]


@pytest.mark.parametrize("order", [1, 2])
def test_stencil_constants_match_exact_construction(order):
    spec = stencil(order)
    interior = _fraction_weights(range(-2, 3), order)
    np.testing.assert_allclose(spec.interior, [float(c) for c in interior], rtol=0, atol=1e-15)
    b0 = _fraction_weights(range(0, 6), order)
    b1 = _fraction_weights(range(-1, 5), order)
    np.testing.assert_allclose(spec.boundary[0], [float(c) for c in b0], atol=1e-14)
    np.testing.assert_allclose(spec.boundary[1], [float(c) for c in b1], atol=1e-14)
    assert spec.accuracy_order == 4


def test_stencil_documented_interior_forms():
    np.testing.assert_allclose(np.array(stencil(2).interior) * 12, [-1, 16, -30, 16, -1])
    np.testing.assert_allclose(np.array(stencil(1).interior) * 12, [1, -8, 0, 8, -1])


@pytest.mark.parametrize("start,dt", [(0.0, 0.1), (-1.3, 0.37), (5.0, 0.01)])
def test_second_derivative_exact_on_t4(start, dt):
    t = start + dt * np.arange(12)
    d2 = fd_derivative(t**4, dt, 2)
    exact = 12 * t**2
    assert np.max(np.abs(d2 - exact) / np.maximum(np.abs(exact), 1.0)) <= 1e-8


@pytest.mark.parametrize("degree", range(5))
@pytest.mark.parametrize("order", [1, 2])
def test_monomials_differentiated_exactly(degree, order):
    dt = 0.25
    t = 0.5 + dt * np.arange(10)
    got = fd_derivative(t**degree, dt, order)
    if degree < order:
        exact = np.zeros_like(t)
    else:
        coef = factorial(degree) // factorial(degree - order)
        exact = coef * t ** (degree - order)
    np.testing.assert_allclose(got, exact, atol=1e-8 * max(1.0, np.abs(exact).max()))


@pytest.mark.parametrize("order", [1, 2])
def test_constant_series_gives_zero(order):
    dt = 0.1
    # rounding in the non-dyadic coefficients is amplified by 1/dt^order
    np.testing.assert_allclose(fd_derivative(np.full((2, 9), 3.5), dt, order), 0.0, atol=1e-13 * 3.5 / dt**order)


@pytest.mark.parametrize("order", [1, 2])
def test_sin_convergence_ratio_16(order):
    def err(dt):
        t = np.arange(0.0, 2.0 + 1e-12, dt)
        d = fd_derivative(np.sin(t), dt, order)
        exact = np.cos(t) if order == 1 else -np.sin(t)
        return np.max(np.abs(d - exact)[2:-2])

    ratio = err(0.02) / err(0.01)
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def test_boundary_columns_fourth_order():
    def err(dt):
        t = np.arange(0.0, 1.0 + 1e-12, dt)
        d = fd_derivative(np.exp(t), dt, 2)
        return np.max(np.abs(d - np.exp(t))[[0, 1, -2, -1]])

    # six-point one-sided rows are fourth-order; allow a loose band
    assert 10 <= err(0.02) / err(0.01) <= 20


def test_fd_too_few_samples():
    with pytest.raises(ValueError, match="6"):
        fd_derivative(np.ones((2, 5)), 0.1, 2)


def test_fd_vector_input_and_bad_dt():
    out = fd_derivative(np.arange(8.0) ** 2, 1.0, 2)
    assert out.shape == (8,)
    np.testing.assert_allclose(out, 2.0, atol=1e-10)
    with pytest.raises(ValueError):
        fd_derivative(np.ones(8), 0.0, 1)
    with pytest.raises(ValueError):
        stencil(3)
