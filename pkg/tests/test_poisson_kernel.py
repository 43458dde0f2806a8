import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betainc, gamma

from fraclap.exterior_data import ExteriorData
from fraclap.poisson_kernel import (BallKernel, RadialExitTable, ball_kernel_eval, check_kernel_bounds,
                                    make_ball_kernel, solve_ball_quadrature, sphere_rule)

ONE = ExteriorData({"kind": "constant", "value": 1.0})


def _interior_points(n, count, r_max=0.9, seed=0):
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * np.linspace(0, r_max, count)[:, None]


def test_normalization_constant():
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    assert k.normalization == pytest.approx(1 / np.pi ** 2)
    k3 = make_ball_kernel([0, 0, 0], 1.0, 0.5)
    assert k3.normalization == pytest.approx(gamma(1.5) * np.pi ** -2.5)


@pytest.mark.parametrize("bad", [dict(center=(0, 0), radius=0, s=0.5, n=2), dict(center=(0, 0), radius=1, s=1.0, n=2),
                                 dict(center=(0, 0, 0), radius=1, s=0.5, n=2), dict(center=(0,), radius=1, s=0.5, n=1)])
def test_kernel_rejects(bad):
    with pytest.raises(ValueError):
        BallKernel(**bad)


def test_eval_sides():
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    assert ball_kernel_eval(k, [0, 0], [2, 0]) == pytest.approx(1 / np.pi ** 2 * (1 / 3) ** 0.5 / 4)
    with pytest.raises(ValueError):
        ball_kernel_eval(k, [1.0, 0], [2, 0])
    with pytest.raises(ValueError):
        ball_kernel_eval(k, [0, 0], [0.5, 0])


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_rule_integrates_polynomials(n):
    dirs, w = sphere_rule(n, 32, axis=[1.0, 2.0, 0.5] if n == 3 else None)
    area = 2 * np.pi if n == 2 else 4 * np.pi
    assert w.sum() == pytest.approx(area)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1)
    assert (w * dirs[:, 0] ** 2).sum() == pytest.approx(area / n)
    assert abs((w * dirs[:, 0] * dirs[:, 1]).sum()) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_kernel_mass_is_one(n, s):
    k = make_ball_kernel(np.full(n, 0.5), 2.0, s)
    for x in 0.5 + 2.0 * _interior_points(n, 10):
        assert abs(solve_ball_quadrature(k, ONE, x) - 1) < 1e-3


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_affine_data_is_reproduced(n, s):
    # for 2s > 1 affine functions are s-harmonic, so the exit average of y_1 is x_1
    k = make_ball_kernel(np.zeros(n), 1.0, s)
    for x in _interior_points(n, 6, r_max=0.85, seed=1):
        assert solve_ball_quadrature(k, lambda y: y[..., 0], x) == pytest.approx(x[0], abs=1e-5)


def test_quadrature_is_linear_and_monotone(annulus_data):
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    x = np.array([0.2, -0.3])
    a = solve_ball_quadrature(k, annulus_data, x)
    b = solve_ball_quadrature(k, lambda y: annulus_data(y) + 2.0, x)
    assert b == pytest.approx(a + 2.0, abs=1e-10)
    assert 0 < a < 1


def test_divergent_tail_is_rejected():
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    with pytest.raises(ValueError, match="tail"):
        solve_ball_quadrature(k, lambda y: (y ** 2).sum(-1), [0.0, 0.0])
    with pytest.raises(ValueError):
        solve_ball_quadrature(k, lambda y: np.full(y.shape[:-1], np.nan), [0.0, 0.0])
    with pytest.raises(ValueError):
        solve_ball_quadrature(k, ONE, [1.0, 0.0])


def test_kernel_positive_and_finite_on_a_million_pairs():
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    rng = np.random.default_rng(3)
    m = 1_000_000
    x = rng.uniform(-1, 1, (m, 2)) * 0.7
    y = rng.normal(size=(m, 2))
    y = y / np.linalg.norm(y, axis=1, keepdims=True) * (1.05 + rng.exponential(2.0, m))[:, None]
    K = ball_kernel_eval(k, x, y)
    assert np.all(np.isfinite(K)) and np.all(K > 0)


@settings(max_examples=30, deadline=None)
@given(r1=st.floats(1.001, 50), dr=st.floats(1e-3, 50), theta=st.floats(0, 2 * np.pi))
def test_kernel_decreases_in_distance_from_centre(r1, dr, theta):
    k = make_ball_kernel([0, 0], 1.0, 0.5)
    e = np.array([np.cos(theta), np.sin(theta)])
    assert ball_kernel_eval(k, [0, 0], r1 * e) > ball_kernel_eval(k, [0, 0], (r1 + dr) * e)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_radial_table_matches_beta_law(n, s):
    # tabulated from the kernel density; the oracle is rho^-2 ~ Beta(s, 1 - s)
    table = RadialExitTable(n, s)
    rho = np.concatenate([1 + np.logspace(-12, 0, 60), np.logspace(0.31, 8, 60)])
    exact = 1 - betainc(s, 1 - s, rho ** -2.0)
    np.testing.assert_allclose(table.cdf(rho), exact, atol=1e-8)
    assert table.mass == pytest.approx(1.0, abs=1e-12)
    assert table.cdf(1.0) == 0 and table.cdf(np.inf) == 1


def test_kernel_bounds_bracket():
    s = 0.5
    k = make_ball_kernel([0, 0], 1.0, s)
    # for the unit ball the ratio is C ((1 + |x|) |y| / (|y| + 1))^s, inside [C 2^-s, C 2^s]
    C = k.normalization
    brackets = [check_kernel_bounds(k, 100_000, seed=seed) for seed in range(3)]
    for b in brackets:
        assert C * 2 ** -s <= b.ratio_min <= b.ratio_max <= C * 2 ** s
        assert b.samples > 99_000
    lo = [b.ratio_min for b in brackets]
    hi = [b.ratio_max for b in brackets]
    assert np.ptp(lo) / min(lo) < 0.1 and np.ptp(hi) / min(hi) < 0.1


def test_kernel_bounds_options():
    k = make_ball_kernel([0, 0, 0], 2.0, 0.3)
    b = check_kernel_bounds(k, 20_000, seed=1, x_depth_min=0.5, y_gap=(0.0, 0.01))
    assert 0 < b.ratio_min <= b.ratio_max < np.inf
    assert check_kernel_bounds(k, 20_000, seed=1) == check_kernel_bounds(k, 20_000, seed=1)
    with pytest.raises(ValueError):
        check_kernel_bounds(k, 100)
