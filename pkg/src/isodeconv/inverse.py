"""H-curves and the isotonized inverse estimators.

For a discrete measure G the curve H_G(x) = sum_{z_i < x} w_i p(x - z_i)
estimates the integrated signal CDF; its GCM right derivative is a
valid CDF estimate.  Applied to the empirical measure this gives the
point estimator (IIE); applied to Dirichlet posterior draws it gives
the posterior sample (IIP) whose pointwise quantiles form credible
bands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .isotonic import SampledCurve, StepCDF, isotonize
from .measures import DiscreteMeasure, DPPrior, empirical_measure, posterior_components
from .rng import StreamKey, derive_stream
from .volterra import ResolventQuery

DEFAULT_GRID_POINTS = 401
HORIZON_FACTOR = 1.1


@dataclass(frozen=True, eq=False)
class EvaluationGrid:
    """Uniform abscissae 0 = x_0 < ... < x_m = T_eval."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise PreconditionError("an evaluation grid needs at least two points")
        if pts[0] != 0.0:
            raise PreconditionError("evaluation grid must start at 0")
        steps = np.diff(pts)
        if np.any(steps <= 0.0):
            raise PreconditionError("evaluation grid must be strictly increasing")
        h = pts[-1] / (pts.size - 1)
        if np.any(np.abs(steps - h) > 1e-9 * max(h, 1.0)):
            raise PreconditionError("evaluation grid must be uniformly spaced")
        object.__setattr__(self, "points", pts)

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    @classmethod
    def uniform(cls, horizon: float, count: int = DEFAULT_GRID_POINTS) -> "EvaluationGrid":
        if horizon <= 0.0:
            raise PreconditionError(f"grid horizon must be positive, got {horizon!r}")
        if count < 2:
            raise PreconditionError(f"grid needs at least 2 points, got {count!r}")
        return cls(np.linspace(0.0, horizon, int(count)))

    def index_of(self, x: float) -> int:
        """Index of the grid point equal to x; raises if x is off-grid."""
        h = self.points[-1] / (self.points.size - 1)
        j = int(round(x / h))
        if j < 0 or j >= self.points.size or abs(self.points[j] - x) > 1e-9 * max(h, 1.0):
            raise PreconditionError(f"x={x!r} is not a grid point (no interpolation across draws)")
        return j

    def nearest_index(self, x: float) -> int:
        """Index of the grid point closest to x (for probe snapping)."""
        if x < 0.0 or x > self.horizon:
            raise PreconditionError(f"x={x!r} outside the grid [0, {self.horizon}]")
        h = self.points[-1] / (self.points.size - 1)
        return int(np.clip(round(x / h), 0, self.points.size - 1))


def default_grid(data, resolvent: ResolventQuery,
                 count: int = DEFAULT_GRID_POINTS) -> EvaluationGrid:
    """Grid on [0, min(1.1 * max(data), resolvent horizon)]."""
    data = np.asarray(data, dtype=float)
    horizon = resolvent.table.horizon
    if data.size and data.max() > 0.0:
        horizon = min(horizon, HORIZON_FACTOR * float(data.max()))
    return EvaluationGrid.uniform(horizon, count)


def _resolvent_matrix(grid: EvaluationGrid, atoms: np.ndarray,
                      resolvent: ResolventQuery) -> np.ndarray:
    """Matrix p(x_j - z_i) masked to z_i < x_j (half-open region [0, x)).

    The table grid is uniform, so interpolation reduces to index
    arithmetic; this is the hot path of the posterior sampler and
    avoids np.interp's per-element binary search.
    """
    table = resolvent.table
    diffs = grid.points[:, None] - atoms[None, :]
    pos = diffs > 0.0
    scaled = np.where(pos, diffs, 0.0) * (1.0 / table.step_size)
    idx = np.minimum(scaled.astype(np.int64), table.values.size - 2)
    frac = scaled - idx
    vals = table.values
    out = vals[idx] * (1.0 - frac) + vals[idx + 1] * frac
    out[~pos] = 0.0
    return out


def h_curve(measure: DiscreteMeasure, resolvent: ResolventQuery,
            grid: EvaluationGrid) -> SampledCurve:
    """H(x_j) = sum over atoms z_i < x_j of w_i * p(x_j - z_i).

    The inequality is strict: the integration region [0, x) excludes an
    atom sitting exactly at x.  H(0) = 0 always.
    """
    if grid.horizon > resolvent.table.horizon * (1.0 + 1e-12):
        raise PreconditionError(
            f"grid horizon {grid.horizon!r} exceeds resolvent horizon "
            f"{resolvent.table.horizon!r}")
    ys = _resolvent_matrix(grid, measure.atoms, resolvent) @ measure.weights
    ys[0] = 0.0
    return SampledCurve(xs=grid.points.copy(), ys=ys)


def iie(data, resolvent: ResolventQuery, grid: EvaluationGrid) -> StepCDF:
    """Isotonized inverse point estimate from the empirical measure."""
    return isotonize(h_curve(empirical_measure(data), resolvent, grid))


@dataclass(frozen=True, eq=False)
class PosteriorDrawSet:
    """Isotonized posterior draws evaluated on a common grid.

    levels[b, j] is draw b's CDF estimate at grid point j (each row is
    a nondecreasing step function with the grid as break points).
    """

    grid: EvaluationGrid
    levels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.ndim != 2 or levels.shape[1] != self.grid.points.size:
            raise PreconditionError("levels must be (draws x grid points)")
        if levels.shape[0] < 1:
            raise PreconditionError("need at least one draw")
        if np.any(np.diff(levels, axis=1) < -1e-12):
            raise PreconditionError("every draw must be nondecreasing")
        object.__setattr__(self, "levels", levels)

    @property
    def n_draws(self) -> int:
        return self.levels.shape[0]

    @property
    def draws(self) -> list:
        """Materialize the draws as StepCDF objects."""
        return [StepCDF(self.grid.points.copy(), row) for row in self.levels]

    def mean_levels(self) -> np.ndarray:
        """Posterior mean curve: average of isotonized draws."""
        return self.levels.mean(axis=0)


def iip_draws(data, prior: DPPrior, resolvent: ResolventQuery, grid: EvaluationGrid,
              B: int, seed: int) -> PosteriorDrawSet:
    """B isotonized posterior draws, stream-keyed by (seed, draw index).

    Each draw runs the posterior decomposition, evaluates its H-curve,
    and isotonizes.  The data-atom block of the resolvent matrix is
    shared across draws (the atoms never change, only their bootstrap
    weights), which keeps the per-draw cost at the fresh prior atoms.
    """
    data = np.asarray(data, dtype=float)
    B = int(B)
    if B < 1:
        raise PreconditionError("need at least one posterior draw")
    if grid.horizon > resolvent.table.horizon * (1.0 + 1e-12):
        raise PreconditionError("grid horizon exceeds resolvent horizon")
    data_block = _resolvent_matrix(grid, data, resolvent)
    levels = np.empty((B, grid.points.size))
    for b in range(B):
        rng = derive_stream(StreamKey(seed, (b,)))
        vn, fresh, bootstrap = posterior_components(prior, data, rng)
        ys = vn * (_resolvent_matrix(grid, fresh.atoms, resolvent) @ fresh.weights)
        ys += (1.0 - vn) * (data_block @ bootstrap.weights)
        ys[0] = 0.0
        curve = SampledCurve(xs=grid.points, ys=ys)
        levels[b] = isotonize(curve).levels
    meta = {"seed": int(seed), "n": int(data.size), "B": B,
            "precision": prior.precision, "base_shape": prior.base_shape,
            "base_rate": prior.base_rate}
    return PosteriorDrawSet(grid=grid, levels=levels, meta=meta)


def _inf_quantile(sorted_vals: np.ndarray, level: float) -> float:
    """inf{z : empirical CDF(z) >= level} = order statistic ceil(B*level)."""
    B = sorted_vals.size
    # nudge guards against 34.000000000000004-style float-up at exact multiples
    rank = int(np.ceil(B * level - 1e-9))
    return float(sorted_vals[min(max(rank, 1), B) - 1])


def posterior_quantile_band(draws: PosteriorDrawSet, x: float, tau: float):
    """Pointwise credible interval at x from the posterior draw set.

    Endpoints are the inf-based empirical quantiles of the draw values
    at levels tau/2 and 1 - tau/2.  x must be a grid point.
    """
    if draws.n_draws < 2:
        raise PreconditionError("need at least two draws for a quantile band")
    if not 0.0 < tau <= 1.0:
        raise PreconditionError(f"tau must lie in (0, 1], got {tau!r}")
    j = draws.grid.index_of(x)
    vals = np.sort(draws.levels[:, j])
    return _inf_quantile(vals, 0.5 * tau), _inf_quantile(vals, 1.0 - 0.5 * tau)
