"""Scenario configs, data generation, coverage study, figure bundles."""

import json
import math

import numpy as np
import pytest

from isodeconv.chernoff import ArgminConfig, CalibrationTable, build_calibration
from isodeconv.errors import ConfigError
from isodeconv.rng import StreamKey, derive_stream
from isodeconv.simulate import (DEFAULT_PROBE_LEVELS, ScenarioConfig,
                                generate_data, run_coverage,
                                run_figure_scenario)


@pytest.fixture(scope="module")
def small_table():
    return build_calibration(ArgminConfig(outer_samples=300,
                                          inner_replicates=400),
                             seed=0, threads=1)


def test_config_defaults_and_derived_quantities():
    cfg = ScenarioConfig()
    assert cfg.kernels == ("exp:rate=1",)
    assert cfg.single_kernel().name == "exp"
    assert float(cfg.true_cdf(0.0)) == 0.0
    q = cfg.signal_quantile(0.5)
    assert float(q) == pytest.approx(math.log(2.0) / 1.2)
    assert float(cfg.true_cdf(q)) == pytest.approx(0.5)
    probes = cfg.probe_values()
    assert np.allclose(cfg.true_cdf(probes), DEFAULT_PROBE_LEVELS)


def test_config_dict_round_trip_and_aliases():
    cfg = ScenarioConfig.from_dict({"kernel": "halfnormal:sigma=1", "n": 50,
                                    "seed": 3, "probes": [0.4, 1.0]})
    assert cfg.kernels == ("halfnormal:sigma=1",)
    assert cfg.probes == (0.4, 1.0)
    again = ScenarioConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        ScenarioConfig(beta=1.5)
    with pytest.raises(ConfigError):
        ScenarioConfig(n=0)
    with pytest.raises(ConfigError):
        ScenarioConfig(kernels=())
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"kernel": "exp", "kernels": ["exp"]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"mystery": 1})
    with pytest.raises(ConfigError):
        ScenarioConfig(replications=0)


def test_config_from_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kernel": "exp:rate=1", "n": 25, "seed": 9}))
    cfg = ScenarioConfig.from_json(path)
    assert cfg.n == 25 and cfg.seed == 9
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(bad)


def test_generate_data_moments_and_determinism():
    cfg = ScenarioConfig(n=20000, seed=1)
    rng = derive_stream(StreamKey(1, (0,)))
    data = generate_data(cfg, rng)
    assert data.shape == (20000,)
    assert np.all(data >= 0.0)
    # E Z = 1/1.2 + 1, Var Z = 1/1.2^2 + 1
    mean_want = 1.0 / 1.2 + 1.0
    sd = math.sqrt(1.0 / 1.2**2 + 1.0)
    assert data.mean() == pytest.approx(mean_want, abs=4.0 * sd / math.sqrt(20000.0))
    again = generate_data(cfg, derive_stream(StreamKey(1, (0,))))
    assert np.array_equal(data, again)


def test_coverage_smoke_run(small_table):
    cfg = ScenarioConfig(n=40, draws=40, replications=6, seed=3, probes=(0.5, 1.0))
    report = run_coverage(cfg, small_table, threads=1)
    assert report.decisions.shape == (6, 2)
    assert set(np.unique(report.decisions)).issubset({False, True})
    assert np.all(report.widths >= 0.0)
    assert np.all((0.0 <= report.coverage) & (report.coverage <= 1.0))
    assert report.replications == 6
    # probes snap to the shared grid, close to what was asked
    assert np.max(np.abs(report.probes - np.array([0.5, 1.0]))) < 0.05
    assert np.allclose(report.truth, cfg.true_cdf(report.probes))
    assert 0.0 < report.tau < 1.0
    doc = json.dumps(report.to_dict())
    assert "coverage" in doc


def test_coverage_threads_do_not_change_decisions(small_table):
    cfg = ScenarioConfig(n=30, draws=25, replications=5, seed=8, probes=(0.6,))
    a = run_coverage(cfg, small_table, threads=1)
    b = run_coverage(cfg, small_table, threads=2)
    assert np.array_equal(a.decisions, b.decisions)
    assert np.array_equal(a.widths, b.widths)
    assert np.array_equal(a.decisions_uncalibrated, b.decisions_uncalibrated)


def test_coverage_rejects_empty_study(small_table):
    with pytest.raises(ConfigError):
        ScenarioConfig(replications=0)
    cfg = ScenarioConfig(n=30, draws=25, replications=1, seed=8)
    report = run_coverage(cfg, small_table, threads=1)
    assert report.decisions.shape[0] == 1


def test_figure_bundles_structure(small_table):
    cfg = ScenarioConfig(kernels=("exp:rate=1", "halfcauchy:gamma=2"), n=40,
                         draws=12, seed=5)
    bundles = run_figure_scenario(cfg, small_table)
    assert sorted(bundles) == ["exp", "halfcauchy"]
    for label, cols in bundles.items():
        roles = set(cols["role"].tolist())
        assert roles == {"prior_draw", "posterior_draw", "posterior_mean",
                         "iie", "true_cdf", "band_lower", "band_upper"}
        assert np.all((cols["value"] >= 0.0) & (cols["value"] <= 1.0))
        sel = cols["role"] == "true_cdf"
        want = cfg.true_cdf(cols["x"][sel])
        assert np.allclose(cols["value"][sel], np.clip(want, 0.0, 1.0))
        # a posterior draw curve is nondecreasing along the grid
        first = (cols["role"] == "posterior_draw") & (cols["draw"] == 0)
        assert np.all(np.diff(cols["value"][first]) >= -1e-12)
        lo = cols["value"][cols["role"] == "band_lower"]
        hi = cols["value"][cols["role"] == "band_upper"]
        assert np.all(lo <= hi + 1e-12)
        assert np.sum(cols["role"] == "prior_draw") == 12 * np.sum(sel)


def test_figure_labels_disambiguate_duplicates(small_table):
    cfg = ScenarioConfig(kernels=("exp:rate=1", "exp:rate=2"), n=25, draws=6,
                         seed=5)
    bundles = run_figure_scenario(cfg, small_table)
    assert sorted(bundles) == ["exp0", "exp1"]
