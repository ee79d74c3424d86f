import numpy as np
import pytest

from qmrom.errors import ConfigError
from qmrom.numerics import fd_derivative
from qmrom.problems import (
    PARAM_RANGE,
    TRAINING_MUS,
    AdvectionSpec,
    WaveSpec,
    advection_matrix,
    advection_snapshots,
    advection_solution,
    advection_training_set,
    generate,
    helix_snapshots,
    neumann_laplacian,
    sample_parameters,
    wave_snapshots,
)

PEAK = 1.0 / np.sqrt(0.0002 * np.pi)


# -- helix ------------------------------------------------------------------

def test_helix_points():
    ss = helix_snapshots(4)
    np.testing.assert_allclose(ss.states[:, 0], [1.0, 0.0, 0.5])
    np.testing.assert_allclose(ss.states[:, 1], [0.0, 1.0, -0.5], atol=1e-15)
    np.testing.assert_allclose(ss.times, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_helix_grid_modes():
    assert helix_snapshots(100).states.shape == (3, 100)
    closed = helix_snapshots(100, endpoint=True)
    np.testing.assert_allclose(closed.states[:, -1], closed.states[:, 0], atol=1e-15)
    with pytest.raises(ValueError):
        helix_snapshots(2)


def test_helix_odd_moments_vanish():
    S = helix_snapshots(100).states
    assert abs(np.mean(S[0] * S[1])) <= 1e-15
    assert abs(np.mean(S[0] ** 2 * S[1])) <= 1e-15


# -- advection --------------------------------------------------------------

def test_advection_peak_value():
    s, _ = advection_solution(np.array([0.1]), 0.0, 0.1)
    assert s[0, 0] == pytest.approx(PEAK, rel=1e-14)
    assert PEAK == pytest.approx(39.894, abs=1e-3)


def test_advection_translation_invariance():
    n, c = 1000, 10.0
    x = np.arange(n) / n
    shift = 7
    delta = shift / (n * c)
    t = 0.05
    a, _ = advection_solution(x[shift:], t, 0.12, c)
    b, _ = advection_solution(x[:-shift], t - delta, 0.12, c)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10 * PEAK)


def test_advection_derivative_is_minus_c_dx():
    x = np.linspace(0, 1, 401)
    t = np.array([0.02, 0.05])
    s, ds = advection_solution(x, t, 0.15, 10.0)
    eps = 1e-6
    sp, _ = advection_solution(x + eps, t, 0.15, 10.0)
    sm, _ = advection_solution(x - eps, t, 0.15, 10.0)
    np.testing.assert_allclose(ds, -10.0 * (sp - sm) / (2 * eps), rtol=0, atol=1e-4 * np.abs(ds).max())


def test_advection_derivative_matches_fourth_order_fd():
    x = np.array([0.4, 0.5, 0.55])

    def err(dt):
        t = np.arange(0.0, 0.06 + 1e-12, dt)
        s, ds = advection_solution(x, t, 0.1, 10.0)
        return np.abs(fd_derivative(s, dt, 1) - ds).max() / np.abs(ds).max()

    e1, e2 = err(2e-4), err(1e-4)
    assert e2 <= 1e-4
    assert 16 * 0.75 <= e1 / e2 <= 16 * 1.25


def test_advection_snapshot_set():
    ss = advection_snapshots(AdvectionSpec(mu=0.2, n=64, k=10))
    assert ss.states.shape == (64, 10) and ss.derivative_order == 1
    assert ss.times[0] > 0 and ss.times[-1] == pytest.approx(0.1)
    np.testing.assert_array_equal(ss.params, 0.2)


def test_advection_training_set_layout():
    ss = advection_training_set(n=32, k=8)
    assert ss.states.shape == (32, 40)
    assert len(ss.segments()) == len(TRAINING_MUS)


@pytest.mark.parametrize("kwargs", [dict(mu=0.3), dict(n=4), dict(k=2), dict(t_final=0.0)])
def test_advection_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        AdvectionSpec(**kwargs)


def test_sample_parameters_seeded():
    a = sample_parameters(20, 0)
    np.testing.assert_array_equal(a, sample_parameters(20, 0))
    assert not np.array_equal(a, sample_parameters(20, 1))
    assert np.all((a >= PARAM_RANGE[0]) & (a <= PARAM_RANGE[1]))


def test_advection_matrix_properties():
    A = advection_matrix(64)
    assert np.all(A.sum(axis=1) == 0.0)
    assert not (A @ np.full(64, 3.0)).any()
    assert A[5, 5] == -640.0 and A[5, 4] == 640.0 and A[0, 63] == 640.0
    assert np.linalg.eigvals(A).real.max() <= 1e-9
    with pytest.raises(ValueError):
        advection_matrix(3)


# -- wave -------------------------------------------------------------------

def _small_wave(**kwargs):
    base = dict(nx=32, ny=16, t_final=2.0, k=21, width=1.0, substeps=1)
    base.update(kwargs)
    return WaveSpec(**base)


def test_wave_zero_amplitude():
    ss = wave_snapshots(_small_wave(amplitude=0.0))
    assert not ss.states.any()


def test_wave_mean_conserved():
    spec = _small_wave(t_final=10.0, k=101, x0=(1.0, 2.0))
    S = wave_snapshots(spec).states
    means = S.mean(axis=0)
    assert np.abs(means - means[0]).max() <= 1e-8 * abs(means[0])


def test_wave_laplacian_zero_flux():
    u = np.random.default_rng(0).standard_normal((10, 6))
    assert abs(neumann_laplacian(u, 0.3).sum()) <= 1e-12 * np.abs(u).sum() / 0.09
    assert not neumann_laplacian(np.full((10, 6), 2.5), 0.3).any()


def test_wave_self_convergence_second_order():
    def run(f):
        spec = _small_wave(nx=32 * f, ny=16 * f, substeps=f)
        return wave_snapshots(spec).states[:, -1].reshape(spec.nx, spec.ny)

    def coarsen(u):
        return 0.25 * (u[::2, ::2] + u[1::2, ::2] + u[::2, 1::2] + u[1::2, 1::2])

    u1, u2, u4 = run(1), run(2), run(4)
    ratio = np.abs(u1 - coarsen(u2)).max() / np.abs(u2 - coarsen(u4)).max()
    assert 4 * 0.75 <= ratio <= 4 * 1.25


def test_wave_defaults():
    spec = WaveSpec()
    assert spec.n == 96 * 48
    assert spec.cfl() <= 1.0
    X, Y = spec.grid()
    i = spec.center_index()
    assert X.ravel()[i] == pytest.approx(2 * np.pi + spec.h / 2)
    assert Y.ravel()[i] == pytest.approx(np.pi + spec.h / 2)


@pytest.mark.parametrize("kwargs", [dict(substeps=1, k=100), dict(nx=8), dict(nx=32, ny=32)])
def test_wave_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        WaveSpec(**kwargs)


def test_wave_stable_to_final_time(wave_case):
    spec, ss = wave_case
    assert ss.states.shape == (spec.n, spec.k)
    assert np.all(np.isfinite(ss.states))
    assert np.abs(ss.states).max() <= 1.0 + 1e-12


def test_generate_dispatch():
    assert generate("helix", k=10).states.shape == (3, 10)
    assert generate("advection", n=16, k=4).states.shape == (16, 20)
    with pytest.raises(ConfigError):
        generate("burgers")
