"""Experiment harness: data generation, coverage studies, figure bundles.

Stream layout (master seed = config.seed): replication r of a coverage
study draws its data from (seed, (r, 0)) and its posterior draws from a
child seed of (seed, (r, 1)); figure scenarios key streams by kernel
index.  Everything downstream is derived, so studies reproduce
bit-for-bit for any worker count.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .chernoff import CalibrationTable, recalibrate_tau
from .errors import ConfigError, PreconditionError
from .inverse import (DEFAULT_GRID_POINTS, EvaluationGrid, HORIZON_FACTOR,
                      h_curve, iie, iip_draws, posterior_quantile_band)
from .isotonic import isotonize
from .kernels import NoiseKernel, parse_kernel_spec
from .measures import DPPrior, draw_dp_prior
from ._parallel import map_chunks
from .rng import StreamKey, child_seed, derive_stream
from .volterra import ResolventQuery, default_grid_size, solve_resolvent

DEFAULT_PROBE_LEVELS = (0.25, 0.5, 0.75)
FIGURE_CURVES_SHOWN = 50


@dataclass(frozen=True)
class ScenarioConfig:
    """Design of one experiment: signal, noise, prior, and study sizes."""

    signal_rate: float = 1.2
    kernels: tuple = ("exp:rate=1",)
    n: int = 200
    beta: float = 0.05
    draws: int = 1000
    replications: int = 200
    seed: int = 0
    precision: float = 10.0
    base_shape: float = 2.0
    base_rate: float = 2.0
    probes: tuple | None = None
    grid_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if isinstance(self.kernels, str):
            object.__setattr__(self, "kernels", (self.kernels,))
        else:
            object.__setattr__(self, "kernels", tuple(self.kernels))
        if not self.kernels:
            raise ConfigError("at least one kernel spec is required")
        for spec in self.kernels:
            if not isinstance(spec, str) or not spec:
                raise ConfigError(f"kernel spec must be a nonempty string, got {spec!r}")
        if self.signal_rate <= 0.0:
            raise ConfigError(f"signal_rate must be positive, got {self.signal_rate!r}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta!r}")
        for name in ("n", "draws", "replications", "grid_points"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("precision", "base_shape", "base_rate"):
            if float(getattr(self, name)) <= 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.probes is not None:
            probes = tuple(float(x) for x in self.probes)
            if not probes or any(x <= 0.0 for x in probes):
                raise ConfigError("probes must be positive reals")
            object.__setattr__(self, "probes", probes)
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(raw)
        if "kernel" in data:
            if "kernels" in data:
                raise ConfigError("give either 'kernel' or 'kernels', not both")
            data["kernels"] = data.pop("kernel")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "signal_rate": self.signal_rate, "kernels": list(self.kernels),
            "n": self.n, "beta": self.beta, "draws": self.draws,
            "replications": self.replications, "seed": self.seed,
            "precision": self.precision, "base_shape": self.base_shape,
            "base_rate": self.base_rate,
            "probes": None if self.probes is None else list(self.probes),
            "grid_points": self.grid_points,
        }

    def prior(self) -> DPPrior:
        return DPPrior(precision=self.precision, base_shape=self.base_shape,
                       base_rate=self.base_rate)

    def single_kernel(self) -> NoiseKernel:
        if len(self.kernels) != 1:
            raise ConfigError("this operation needs exactly one kernel spec")
        return parse_kernel_spec(self.kernels[0])

    def true_cdf(self, x):
        """Ground-truth signal CDF, F0 = Exp(signal_rate)."""
        return 1.0 - np.exp(-self.signal_rate * np.asarray(x, dtype=float))

    def signal_quantile(self, q):
        return -np.log1p(-np.asarray(q, dtype=float)) / self.signal_rate

    def probe_values(self) -> np.ndarray:
        if self.probes is not None:
            return np.asarray(self.probes, dtype=float)
        return self.signal_quantile(np.asarray(DEFAULT_PROBE_LEVELS))


def _generate(kernel: NoiseKernel, config: ScenarioConfig,
              rng: np.random.Generator) -> np.ndarray:
    x = rng.exponential(scale=1.0 / config.signal_rate, size=config.n)
    y = kernel.sample(rng, config.n)
    return x + y


def generate_data(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw Z_i = X_i + Y_i with X ~ Exp(signal_rate), Y ~ kernel."""
    return _generate(config.single_kernel(), config, rng)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Per-probe empirical coverage of the recalibrated credible bands."""

    probes_requested: np.ndarray
    probes: np.ndarray
    truth: np.ndarray
    decisions: np.ndarray
    decisions_uncalibrated: np.ndarray
    widths: np.ndarray
    widths_uncalibrated: np.ndarray
    tau: float
    beta: float
    runtime_s: float
    config: dict = field(default_factory=dict)
    calibration_samples: int = 0

    def __post_init__(self):
        if self.decisions.ndim != 2 or self.decisions.shape != self.widths.shape:
            raise PreconditionError("decision and width matrices must be (R x probes)")

    @property
    def replications(self) -> int:
        return self.decisions.shape[0]

    @property
    def coverage(self) -> np.ndarray:
        return self.decisions.mean(axis=0)

    @property
    def coverage_uncalibrated(self) -> np.ndarray:
        return self.decisions_uncalibrated.mean(axis=0)

    @property
    def coverage_se(self) -> np.ndarray:
        p = self.coverage
        return np.sqrt(p * (1.0 - p) / self.replications)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "tau": self.tau,
            "credibility": 1.0 - self.tau,
            "replications": self.replications,
            "calibration_samples": self.calibration_samples,
            "probes_requested": list(self.probes_requested),
            "probes": list(self.probes),
            "truth": list(self.truth),
            "coverage": list(self.coverage),
            "coverage_se": list(self.coverage_se),
            "coverage_uncalibrated": list(self.coverage_uncalibrated),
            "mean_width": list(self.widths.mean(axis=0)),
            "mean_width_uncalibrated": list(self.widths_uncalibrated.mean(axis=0)),
            "decisions": self.decisions.astype(int).tolist(),
            "decisions_uncalibrated": self.decisions_uncalibrated.astype(int).tolist(),
            "config": dict(self.config),
            "wall_time_s": self.runtime_s,
        }


def _coverage_block(args):
    (config, table, probe_idx, taus, start, stop) = args
    query = ResolventQuery(table)
    grid = EvaluationGrid.uniform(table.horizon, config.grid_points)
    kernel = config.single_kernel()
    prior = config.prior()
    bands = np.empty((stop - start, len(probe_idx), len(taus), 2))
    for i, r in enumerate(range(start, stop)):
        data = _generate(kernel, config, derive_stream(StreamKey(config.seed, (r, 0))))
        draw_seed = child_seed(StreamKey(config.seed, (r, 1)))
        draws = iip_draws(data, prior, query, grid, config.draws, draw_seed)
        for j, idx in enumerate(probe_idx):
            x = float(grid.points[idx])
            for t, tau in enumerate(taus):
                bands[i, j, t] = posterior_quantile_band(draws, x, tau)
    return bands


def run_coverage(config: ScenarioConfig, calib: CalibrationTable,
                 threads: int = 0) -> CoverageReport:
    """Monte Carlo coverage of the recalibrated bands at the probe points.

    One resolvent table serves the whole study: its horizon covers every
    replication's data, and probes are snapped to the shared evaluation
    grid so each coverage decision compares a band and the true CDF at
    the same point.  Bands at the uncalibrated tau = beta are recorded
    from the same posterior draws for the credibility-vs-coverage
    comparison.
    """
    start_time = time.perf_counter()
    if config.replications < 1:
        raise ConfigError("coverage study needs at least one replication")
    kernel = config.single_kernel()
    data_max = max(
        float(_generate(kernel, config,
                        derive_stream(StreamKey(config.seed, (r, 0)))).max())
        for r in range(config.replications))
    probes_requested = config.probe_values()
    horizon = HORIZON_FACTOR * max(data_max, float(probes_requested.max()))
    table = solve_resolvent(kernel, horizon, default_grid_size(horizon))
    grid = EvaluationGrid.uniform(horizon, config.grid_points)
    probe_idx = [grid.nearest_index(x) for x in probes_requested]
    probes = grid.points[probe_idx]
    truth = np.asarray(config.true_cdf(probes), dtype=float)
    tau = recalibrate_tau(config.beta, calib)
    taus = (tau, config.beta)
    workers = max(1, min(config.replications, 8))
    bounds = np.linspace(0, config.replications, workers * 2 + 1).astype(int)
    tasks = [(config, table, probe_idx, taus, int(lo), int(hi))
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    bands = np.concatenate(map_chunks(_coverage_block, tasks, threads), axis=0)
    lower, upper = bands[..., 0], bands[..., 1]
    inside = (lower <= truth[None, :, None]) & (truth[None, :, None] <= upper)
    return CoverageReport(
        probes_requested=probes_requested,
        probes=probes,
        truth=truth,
        decisions=inside[:, :, 0],
        decisions_uncalibrated=inside[:, :, 1],
        widths=upper[:, :, 0] - lower[:, :, 0],
        widths_uncalibrated=upper[:, :, 1] - lower[:, :, 1],
        tau=tau,
        beta=config.beta,
        runtime_s=time.perf_counter() - start_time,
        config=config.to_dict(),
        calibration_samples=calib.sample_count,
    )


def _figure_labels(kernels) -> list:
    names = [k.name for k in kernels]
    return [name if names.count(name) == 1 else f"{name}{i}"
            for i, name in enumerate(names)]


def run_figure_scenario(config: ScenarioConfig, calib: CalibrationTable) -> dict:
    """Curve bundles for the combined deconvolution figures, per kernel.

    Each bundle is a tidy column table (role, draw, x, value) holding
    prior-draw curves, isotonized posterior draws, the posterior mean
    curve, the point estimate (IIE), the true CDF, and the calibrated
    band.  Values are clamped to [0, 1]: these are display artifacts.
    Bands come from the unclamped posterior quantiles, then clamped.
    """
    kernels = [parse_kernel_spec(spec) for spec in config.kernels]
    prior = config.prior()
    tau = recalibrate_tau(config.beta, calib)
    shown = min(config.draws, FIGURE_CURVES_SHOWN)
    bundles = {}
    for ki, (kernel, label) in enumerate(zip(kernels, _figure_labels(kernels))):
        data = _generate(kernel, config, derive_stream(StreamKey(config.seed, (ki, 0))))
        horizon = HORIZON_FACTOR * float(data.max())
        table = solve_resolvent(kernel, horizon, default_grid_size(horizon))
        query = ResolventQuery(table)
        grid = EvaluationGrid.uniform(horizon, config.grid_points)
        roles, draw_ids, xs, values = [], [], [], []

        def emit(role, draw_id, vals):
            roles.append(np.full(grid.points.size, role, dtype=object))
            draw_ids.append(np.full(grid.points.size, draw_id, dtype=int))
            xs.append(grid.points)
            values.append(np.clip(np.asarray(vals, dtype=float), 0.0, 1.0))

        for j in range(shown):
            fresh = draw_dp_prior(prior, derive_stream(StreamKey(config.seed, (ki, 1, j))))
            curve = isotonize(h_curve(fresh, query, grid))
            emit("prior_draw", j, curve.levels)
        draw_set = iip_draws(data, prior, query, grid, config.draws,
                             child_seed(StreamKey(config.seed, (ki, 2))))
        for j in range(shown):
            emit("posterior_draw", j, draw_set.levels[j])
        emit("posterior_mean", -1, draw_set.mean_levels())
        emit("iie", -1, iie(data, query, grid).levels)
        emit("true_cdf", -1, config.true_cdf(grid.points))
        ranked = np.sort(draw_set.levels, axis=0)
        B = draw_set.n_draws
        lo_rank = min(max(int(np.ceil(B * (0.5 * tau) - 1e-9)), 1), B) - 1
        hi_rank = min(max(int(np.ceil(B * (1.0 - 0.5 * tau) - 1e-9)), 1), B) - 1
        emit("band_lower", -1, ranked[lo_rank])
        emit("band_upper", -1, ranked[hi_rank])
        bundles[label] = {
            "role": np.concatenate(roles),
            "draw": np.concatenate(draw_ids),
            "x": np.concatenate(xs),
            "value": np.concatenate(values),
        }
    return bundles
