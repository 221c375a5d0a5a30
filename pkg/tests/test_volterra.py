"""Resolvent solver, residual check, and renewal-series oracle."""

import numpy as np
import pytest

from isodeconv.errors import PreconditionError
from isodeconv.kernels import builtin_kernel, load_tabulated
from isodeconv.volterra import (ResolventQuery, ResolventTable,
                                default_grid_size, evaluate_resolvent,
                                renewal_series_resolvent, resolvent_residual,
                                solve_resolvent)

ALL_NAMES = ["exp", "erlang_exp_mix", "halfnormal", "halfcauchy", "lomax",
             "halflogistic"]


def test_exp_resolvent_is_linear():
    # Laplace inversion of 1/(s^2 khat) for exp(rate r) gives 1/r + x
    kernel = builtin_kernel("exp", rate=1.0)
    table = solve_resolvent(kernel, 5.0, 5001)
    assert np.max(np.abs(table.values - (1.0 + table.grid))) < 1e-4

    kernel2 = builtin_kernel("exp", rate=2.0)
    table2 = solve_resolvent(kernel2, 5.0, 5001)
    assert np.max(np.abs(table2.values - (0.5 + table2.grid))) < 1e-4


def test_mixture_resolvent_closed_form():
    # partial fractions of 1/(s^2 khat(s)) for the Erlang/exp mixture:
    # p(x) = 5/8 + x + exp(-8x/3)/24
    kernel = builtin_kernel("erlang_exp_mix")
    table = solve_resolvent(kernel, 5.0, 5001)
    xs = table.grid
    closed = 5.0 / 8.0 + xs + np.exp(-8.0 * xs / 3.0) / 24.0
    assert np.max(np.abs(table.values - closed)) < 1e-5


def test_resolvent_starts_at_reciprocal_density():
    for name in ALL_NAMES:
        kernel = builtin_kernel(name)
        table = solve_resolvent(kernel, 2.0, 201)
        assert table.values[0] == pytest.approx(1.0 / kernel.at_zero, rel=1e-14)


def test_residual_is_second_order():
    for name in ALL_NAMES:
        kernel = builtin_kernel(name)
        coarse = resolvent_residual(solve_resolvent(kernel, 5.0, 501), kernel)
        fine = resolvent_residual(solve_resolvent(kernel, 5.0, 1001), kernel)
        assert coarse < 4e-3
        assert coarse / fine > 3.0


def test_residual_detects_a_wrong_table():
    kernel = builtin_kernel("exp")
    table = solve_resolvent(kernel, 5.0, 501)
    good = resolvent_residual(table, kernel)
    corrupted = ResolventTable(step_size=table.step_size, horizon=table.horizon,
                               values=table.values * 1.01)
    assert resolvent_residual(corrupted, kernel) > 20 * good


def test_renewal_oracle_exponential_kernel():
    # for exp(1) the renewal process is Poisson(1): p(x) = 1 + x
    kernel = builtin_kernel("exp")
    xs = np.array([0.5, 1.0, 2.0, 4.0])
    est, se = renewal_series_resolvent(kernel, xs, 30000, seed=17,
                                       return_stderr=True)
    assert np.all(se > 0.0)
    assert np.max(np.abs(est - (1.0 + xs)) / se) < 4.0


def test_renewal_oracle_agrees_with_solver():
    xs = np.array([0.5, 2.0])
    for name in ("lomax", "halfcauchy"):
        kernel = builtin_kernel(name)
        query = ResolventQuery(solve_resolvent(kernel, 2.5, 2501))
        est, se = renewal_series_resolvent(kernel, xs, 30000, seed=3,
                                           return_stderr=True)
        grid_vals = np.array([evaluate_resolvent(query, x) for x in xs])
        assert np.max(np.abs(est - grid_vals) / se) < 4.0


def test_renewal_fast_path_matches_stderr_path():
    kernel = builtin_kernel("halflogistic")
    xs = np.array([0.3, 1.1, 2.9, 0.7])  # unsorted on purpose
    fast = renewal_series_resolvent(kernel, xs, 5000, seed=11)
    slow, _ = renewal_series_resolvent(kernel, xs, 5000, seed=11,
                                       return_stderr=True)
    assert np.array_equal(fast, slow)


def test_renewal_is_deterministic_per_seed():
    kernel = builtin_kernel("exp")
    xs = np.array([1.0, 2.0])
    a = renewal_series_resolvent(kernel, xs, 4000, seed=5)
    b = renewal_series_resolvent(kernel, xs, 4000, seed=5)
    c = renewal_series_resolvent(kernel, xs, 4000, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_renewal_rejects_increasing_kernel():
    grid = np.linspace(0.0, 2.0, 21)
    bump = load_tabulated(grid, 1.0 + grid * (2.0 - grid))  # rises then falls
    with pytest.raises(PreconditionError):
        renewal_series_resolvent(bump, np.array([1.0]), 100, seed=0)


def test_default_grid_size_contract():
    assert default_grid_size(5.0) == 5001
    assert default_grid_size(0.3) == 1001     # floor
    assert default_grid_size(100.0) == 50001  # cap
    T = 7.3
    N = default_grid_size(T)
    assert T / (N - 1) <= 1e-3 * T * (1.0 + 1e-12)


def test_evaluate_resolvent_domain():
    kernel = builtin_kernel("exp")
    query = ResolventQuery(solve_resolvent(kernel, 2.0, 2001))
    assert evaluate_resolvent(query, -0.5) == 0.0
    assert evaluate_resolvent(query, 1.0) == pytest.approx(2.0, abs=1e-5)
    with pytest.raises(PreconditionError):
        evaluate_resolvent(query, 2.5)


def test_solver_input_validation():
    kernel = builtin_kernel("exp")
    with pytest.raises(PreconditionError):
        solve_resolvent(kernel, 0.0, 101)
    with pytest.raises(PreconditionError):
        solve_resolvent(kernel, 1.0, 1)


def test_table_grid_consistency():
    table = ResolventTable(step_size=0.5, horizon=2.0,
                           values=np.array([1.0, 1.5, 2.0, 2.5, 3.0]))
    assert np.allclose(table.grid, [0.0, 0.5, 1.0, 1.5, 2.0])
    with pytest.raises(PreconditionError):
        ResolventTable(step_size=0.5, horizon=3.0,
                       values=np.array([1.0, 1.5, 2.0]))
