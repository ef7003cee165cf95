import math

import numpy as np
import pytest

from silt import (
    ValidationError,
    counterexample_model,
    covariance,
    inner,
    make_grid,
    operator_norm,
    parse_model,
    perturbed_model,
    sturm_liouville_green,
    sturm_liouville_model,
    sturm_liouville_operator,
    wiener_model,
)
from silt.function_space import GridFunction, KernelOperator, apply_operator, indicator
from silt.process_models import sl_factor_correction


def test_wiener_covariance_is_min():
    grid = make_grid(1.0, 512)
    m = wiener_model(grid)
    for s, t in [(0.2, 0.9), (0.5, 0.5), (0.7, 0.3)]:
        assert covariance(m, s, t) == pytest.approx(min(s, t), abs=1e-12)


def test_sl_kernel_point_value():
    grid = make_grid(math.pi / 2, 64)
    S = sturm_liouville_operator(grid)
    # k(pi/4, pi/4) = sin^2(pi/4) = 1/2 (diagonal belongs to the sin branch)
    i = np.argmin(np.abs(grid.nodes - math.pi / 4))
    s = grid.nodes[i]
    assert S.matrix[i, i] / grid.weight == pytest.approx(math.sin(s) ** 2)


def test_sl_operator_action_on_indicator_matches_closed_form():
    grid = make_grid(math.pi / 2, 2000)
    S = sturm_liouville_operator(grid)
    t = 0.8
    out = apply_operator(S, indicator(grid, t))
    exact = sl_factor_correction(grid, np.array([t]))[0]
    # midpoint-rule error of a piecewise-smooth kernel
    assert np.max(np.abs(out.values - exact)) < 5e-4


def test_sl_operator_norm_below_one():
    n500 = operator_norm(sturm_liouville_operator(make_grid(math.pi / 2, 500)))
    n1000 = operator_norm(sturm_liouville_operator(make_grid(math.pi / 2, 1000)))
    assert n500 < 1.0 and n1000 < 1.0
    assert abs(n500 - n1000) < 1e-3


def test_green_operator_solves_boundary_value_problem():
    # v = G f solves v'' + v = f with v(0) = v(pi/2) = 0
    grid = make_grid(math.pi / 2, 4000)
    G = sturm_liouville_green(grid)
    f = GridFunction(grid, np.cos(3.0 * grid.nodes))
    v = apply_operator(G, f).values
    w = grid.weight
    second = (v[2:] - 2 * v[1:-1] + v[:-2]) / w**2
    resid = second + v[1:-1] - f.values[1:-1]
    assert np.max(np.abs(resid)) < 5e-3
    # boundary values (extrapolated to the endpoints)
    assert abs(1.5 * v[0] - 0.5 * v[1]) < 1e-3
    assert abs(1.5 * v[-1] - 0.5 * v[-2]) < 1e-3


def test_green_kernel_is_symmetric():
    grid = make_grid(math.pi / 2, 128)
    M = sturm_liouville_green(grid).matrix
    assert np.allclose(M, M.T, atol=1e-14)


def test_perturbed_with_zero_kernel_equals_wiener():
    grid = make_grid(1.0, 128)
    S = KernelOperator(grid, np.zeros((grid.n, grid.n)))
    mp = perturbed_model(grid, S)
    mw = wiener_model(grid)
    ts = np.array([0.1, 0.55, 0.99])
    Vp, _ = mp.factor_values(ts)
    Vw, _ = mw.factor_values(ts)
    assert np.array_equal(Vp, Vw)


def test_perturbed_rejects_large_norm():
    grid = make_grid(1.0, 64)
    S = KernelOperator(grid, 1.2 * np.eye(grid.n))
    with pytest.raises(ValidationError):
        perturbed_model(grid, S)


def test_sl_model_matches_matrix_perturbation():
    grid = make_grid(math.pi / 2, 1500)
    closed = sturm_liouville_model(grid)
    matrix = perturbed_model(grid, sturm_liouville_operator(grid))
    ts = np.array([0.3, 0.9, 1.4])
    Vc, _ = closed.factor_values(ts)
    Vm, _ = matrix.factor_values(ts)
    assert np.max(np.abs(Vc - Vm)) < 1e-3


def test_sl_model_requires_half_pi_interval():
    with pytest.raises(ValidationError):
        sturm_liouville_model(make_grid(1.0, 64))


def test_counterexample_covariance_and_increments():
    grid = make_grid(1.0, 200_000)
    m = counterexample_model(grid)
    # Cov x(s) x(t) = min(s,t) + sqrt(st)
    for s, t in [(0.2, 0.8), (0.5, 0.5)]:
        assert covariance(m, s, t) == pytest.approx(
            min(s, t) + math.sqrt(s * t), abs=1e-10
        )
    # normalized-increment correlation of x(t) = w(t) + sqrt(t) xi:
    # corr = (1/2) (1-sqrt(t0/t1))^{1/2} (1-sqrt(t2/t3))^{1/2} for disjoint intervals
    t0, t1, t2, t3 = 0.2, 0.4, 0.6, 0.9
    d1 = m.factor(t1) - m.factor(t0)
    d2 = m.factor(t3) - m.factor(t2)
    got = inner(d1, d2) / (d1.norm() * d2.norm())
    want = 0.5 * math.sqrt(1 - math.sqrt(t0 / t1)) * math.sqrt(1 - math.sqrt(t2 / t3))
    assert got == pytest.approx(want, abs=1e-10)


def test_parse_model_strings():
    grid = make_grid(1.0, 64)
    assert parse_model("wiener", grid).name == "wiener"
    assert parse_model("counterexample", grid).aux_dim == 1
    with pytest.raises(ValidationError):
        parse_model("ornstein", grid)


def test_model_rejects_times_outside_interval():
    m = wiener_model(make_grid(1.0, 64))
    with pytest.raises(ValidationError):
        m.factor(1.5)
