"""Noise kernel families: densities, CDFs, samplers, spec parsing."""

import math

import numpy as np
import pytest
from scipy import integrate

from isodeconv.errors import ConfigError, PreconditionError
from isodeconv.kernels import (TabulatedKernel, builtin_kernel, load_tabulated,
                               parse_kernel_spec, read_kernel_csv)
from isodeconv.rng import StreamKey, derive_stream

ALL_NAMES = ["exp", "erlang_exp_mix", "halfnormal", "halfcauchy", "lomax",
             "halflogistic"]


def test_density_at_zero_closed_forms():
    # k(0) values derived by hand from each family's density formula
    expected = {
        "exp": 1.0,
        "erlang_exp_mix": 1.5,
        "halfnormal": math.sqrt(2.0 / math.pi),
        "halfcauchy": 1.0 / math.pi,
        "lomax": 10.0,
        "halflogistic": 0.5,
    }
    for name, want in expected.items():
        assert builtin_kernel(name).at_zero == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_cdf_matches_density_quadrature(name):
    kernel = builtin_kernel(name)
    for x in (0.25, 0.8, 2.0, 5.5):
        val, err = integrate.quad(lambda u: float(kernel.density(u)), 0.0, x)
        assert float(kernel.cdf(x)) == pytest.approx(val, abs=max(1e-10, 10 * err))


@pytest.mark.parametrize("name", ALL_NAMES)
def test_sampler_matches_cdf(name):
    kernel = builtin_kernel(name)
    rng = derive_stream(StreamKey(2024, (0,)))
    draws = kernel.sample(rng, 40000)
    assert np.all(draws >= 0.0)
    for x in (0.3, 1.0, 2.5):
        emp = float(np.mean(draws <= x))
        assert emp == pytest.approx(float(kernel.cdf(x)), abs=0.011)


def test_cdf_hand_values():
    assert float(builtin_kernel("exp").cdf(1.0)) == pytest.approx(1.0 - math.exp(-1.0))
    # HalfCauchy(2): 2/pi * arctan(1) = 1/2 exactly at x = gamma
    assert float(builtin_kernel("halfcauchy").cdf(2.0)) == pytest.approx(0.5, abs=1e-15)
    # Lomax(10, 1): median at 2**(1/10) - 1
    med = 2.0 ** 0.1 - 1.0
    assert float(builtin_kernel("lomax").cdf(med)) == pytest.approx(0.5, abs=1e-12)
    # half-logistic: cdf(ln 3) = (1 - 1/3)/(1 + 1/3) = 1/2
    assert float(builtin_kernel("halflogistic").cdf(math.log(3.0))) == pytest.approx(0.5)


def test_mixture_density_closed_form():
    # 0.25 * Erlang(2, 2) + 0.75 * Exp(2) collapses to exp(-2x) (x + 1.5)
    kernel = builtin_kernel("erlang_exp_mix")
    xs = np.array([0.0, 0.3, 1.0, 2.7])
    want = np.exp(-2.0 * xs) * (xs + 1.5)
    assert np.allclose(kernel.density(xs), want, atol=1e-15)


def test_mixture_is_decreasing():
    kernel = builtin_kernel("erlang_exp_mix")
    xs = np.linspace(0.0, 10.0, 2001)
    assert np.all(np.diff(kernel.density(xs)) < 0.0)


def test_parameter_overrides_and_aliases():
    assert builtin_kernel("exp", rate=3.0).params == {"rate": 3.0}
    k = builtin_kernel("lomax", c=4.0, **{"lambda": 2.0})
    assert k.params == {"c": 4.0, "lambda": 2.0}
    assert float(k.density(0.0)) == pytest.approx(2.0)


def test_bad_kernel_requests():
    with pytest.raises(ConfigError):
        builtin_kernel("nope")
    with pytest.raises(ConfigError):
        builtin_kernel("exp", scale=2.0)
    with pytest.raises(PreconditionError):
        builtin_kernel("exp", rate=-1.0)
    with pytest.raises(PreconditionError):
        builtin_kernel("halfnormal", sigma=0.0)


def test_spec_string_round_trip():
    for spec in ["exp:rate=2", "halfnormal:sigma=0.5", "lomax:c=3,lambda=2"]:
        kernel = parse_kernel_spec(spec)
        again = parse_kernel_spec(kernel.spec_string())
        assert again.params == kernel.params
        assert again.name == kernel.name


def test_spec_parsing_errors():
    with pytest.raises(ConfigError):
        parse_kernel_spec(":rate=1")
    with pytest.raises(ConfigError):
        parse_kernel_spec("exp:rate")
    with pytest.raises(ConfigError):
        parse_kernel_spec("exp:rate=abc")
    with pytest.raises(ConfigError):
        parse_kernel_spec("tabulated:grid=1")


def test_tabulated_recovers_grid_values_exactly():
    grid = np.linspace(0.0, 5.0, 401)
    vals = np.exp(-grid)
    kernel = load_tabulated(grid, vals)
    assert np.array_equal(kernel.density(grid), vals)
    assert float(kernel.density(9.0)) == 0.0
    assert kernel.at_zero == 1.0


def test_tabulated_cdf_is_exact_segment_integral():
    # two linear segments; areas computed by hand
    kernel = load_tabulated([0.0, 1.0, 3.0], [2.0, 1.0, 0.0])
    assert float(kernel.cdf(1.0)) == pytest.approx(1.5)
    assert float(kernel.cdf(3.0)) == pytest.approx(2.5)
    assert float(kernel.cdf(0.5)) == pytest.approx(0.875)  # 2*.5 - .5*1*.5^2
    assert float(kernel.cdf(10.0)) == pytest.approx(2.5)


def test_tabulated_sampler_matches_cdf():
    grid = np.linspace(0.0, 8.0, 801)
    kernel = load_tabulated(grid, np.exp(-grid))
    rng = derive_stream(StreamKey(5, (1,)))
    draws = kernel.sample(rng, 30000)
    total = float(kernel.cdf(8.0))
    for x in (0.5, 1.5, 3.0):
        assert float(np.mean(draws <= x)) == pytest.approx(
            float(kernel.cdf(x)) / total, abs=0.012)


def test_tabulated_validation():
    with pytest.raises(PreconditionError):
        load_tabulated([0.5, 1.0], [1.0, 1.0])       # grid must start at 0
    with pytest.raises(PreconditionError):
        load_tabulated([0.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(PreconditionError):
        load_tabulated([0.0, 1.0], [0.0, 1.0])       # k(0) must be positive
    with pytest.raises(PreconditionError):
        load_tabulated([0.0, 1.0], [1.0, -0.1])


def test_kernel_csv_round_trip(tmp_path):
    path = tmp_path / "kern.csv"
    grid = np.linspace(0.0, 4.0, 41)
    vals = np.exp(-grid)
    with open(path, "w") as fh:
        fh.write("x,k\n")
        for x, v in zip(grid, vals):
            fh.write(f"{x:.17g},{v:.17g}\n")
    kernel = read_kernel_csv(path)
    assert isinstance(kernel, TabulatedKernel)
    assert np.allclose(kernel.density(grid), vals, atol=1e-15)
    loaded = parse_kernel_spec(f"tabulated:path={path}")
    assert np.allclose(loaded.density(grid), vals, atol=1e-15)


def test_kernel_csv_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,k\n1,2,3\n")
    with pytest.raises(ConfigError):
        read_kernel_csv(path)
