"""Monte Carlo table of the recalibration law.

One sample of the [0,1]-valued statistic is built as follows: draw a
two-sided Brownian path W1 on a symmetric grid; for m independent
two-sided paths W2 compute the smallest grid minimizer of
W1(t) + W2(t) + t^2; record the fraction of the m minimizers lying at
or left of 0.  The empirical CDF A of S such samples and its quantile
function drive the credibility recalibration tau = 2 * Ainv(beta / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from ._parallel import map_chunks
from .rng import StreamKey, derive_stream

DEFAULT_HALF_WIDTH = 4.0
DEFAULT_STEP = 0.01
DEFAULT_INNER = 1000
DEFAULT_OUTER = 20000

# dense v-grid for serialized quantile tables; covers the standard
# reporting levels (multiples of 0.001) exactly
_REPORT_GRID = np.round(np.arange(1001) / 1000.0, 3)


@dataclass(frozen=True)
class ArgminConfig:
    """Discretization of the argmin problem and Monte Carlo sizes."""

    t_half_width: float = DEFAULT_HALF_WIDTH
    t_step: float = DEFAULT_STEP
    inner_replicates: int = DEFAULT_INNER
    outer_samples: int = DEFAULT_OUTER

    def __post_init__(self):
        if self.t_half_width <= 0.0 or self.t_step <= 0.0:
            raise PreconditionError("grid half-width and step must be positive")
        if self.inner_replicates < 1 or self.outer_samples < 1:
            raise PreconditionError("replicate counts must be at least 1")
        ratio = self.t_half_width / self.t_step
        if abs(ratio - round(ratio)) > 1e-9:
            raise PreconditionError("t_half_width must be an integer multiple of t_step")

    @property
    def half_points(self) -> int:
        return int(round(self.t_half_width / self.t_step))

    def t_grid(self) -> np.ndarray:
        """Symmetric grid -L, ..., -dt, 0, dt, ..., L."""
        n = self.half_points
        return self.t_step * np.arange(-n, n + 1)


def two_sided_bm(ts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Two-sided Brownian path on a symmetric grid, W(0) = 0.

    Consumes 2*half standard normals in a fixed layout: first the left
    side outward (t = -dt down to -L), then the right side outward.
    """
    n = ts.size // 2
    if ts.size != 2 * n + 1 or not np.allclose(ts, -ts[::-1], atol=1e-12):
        raise PreconditionError("path grid must be symmetric about 0")
    dt = ts[n + 1] - ts[n] if n else 0.0
    z = rng.standard_normal(2 * n) * math.sqrt(dt)
    w = np.empty(ts.size)
    w[n] = 0.0
    w[n - 1::-1] = np.cumsum(z[:n])
    w[n + 1:] = np.cumsum(z[n:])
    return w


def drifted_argmin(ts: np.ndarray, w1: np.ndarray, w2: np.ndarray,
                   slope: float = 0.0) -> float:
    """Smallest grid t minimizing w1(t) + w2(t) + t^2 - slope * t."""
    if not (ts.shape == w1.shape == w2.shape):
        raise PreconditionError("paths must share the grid")
    obj = w1 + w2 + ts * ts - slope * ts
    return float(ts[int(np.argmin(obj))])


def sample_zb(config: ArgminConfig, rng: np.random.Generator,
              force_w1_zero: bool = False) -> float:
    """One sample: fraction of m inner argmins lying at or left of 0.

    force_w1_zero substitutes the zero path for W1 (debug hook; by
    symmetry the result then concentrates at 1/2).

    The inner replicates are vectorized: with c(t) = W1(t) + t^2 the
    event argmin <= 0 equals min_{t<=0}(W2 + c) <= min_{t>0}(W2 + c),
    ties going left exactly as the smallest-minimizer convention does.
    """
    n = config.half_points
    ts = config.t_grid()
    if force_w1_zero:
        w1 = np.zeros(ts.size)
        rng.standard_normal(2 * n)  # keep the stream layout identical
    else:
        w1 = two_sided_bm(ts, rng)
    c = w1 + ts * ts
    m = config.inner_replicates
    z = rng.standard_normal((m, 2 * n)) * math.sqrt(config.t_step)
    left = np.cumsum(z[:, :n], axis=1)
    left += c[n - 1::-1]
    right = np.cumsum(z[:, n:], axis=1)
    right += c[n + 1:]
    min_left = np.minimum(left.min(axis=1), c[n])
    min_right = right.min(axis=1)
    return float(np.mean(min_left <= min_right))


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    """Empirical CDF A of the calibration samples and its inverse.

    Built in memory the table keeps the sorted sample; reloaded from a
    CSV it keeps the dense quantile grid, with the same interface.
    """

    sample_count: int
    samples: np.ndarray | None
    v_grid: np.ndarray
    q_grid: np.ndarray

    def __post_init__(self):
        if self.sample_count < 1:
            raise PreconditionError("calibration needs at least one sample")
        if np.any(np.diff(self.q_grid) < -1e-12):
            raise PreconditionError("quantile grid must be nondecreasing")

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "CalibrationTable":
        samples = np.sort(np.asarray(samples, dtype=float))
        if samples.size == 0:
            raise PreconditionError("calibration needs at least one sample")
        if samples[0] < 0.0 or samples[-1] > 1.0:
            raise PreconditionError("calibration samples must lie in [0, 1]")
        q = np.quantile(samples, _REPORT_GRID)
        return cls(sample_count=samples.size, samples=samples,
                   v_grid=_REPORT_GRID.copy(), q_grid=q)

    @classmethod
    def from_grid(cls, v_grid, q_grid, sample_count: int) -> "CalibrationTable":
        v_grid = np.asarray(v_grid, dtype=float)
        q_grid = np.asarray(q_grid, dtype=float)
        if v_grid.ndim != 1 or v_grid.shape != q_grid.shape or v_grid.size < 2:
            raise PreconditionError("need matching 1-d v and quantile grids")
        if np.any(np.diff(v_grid) <= 0.0):
            raise PreconditionError("v grid must be strictly increasing")
        return cls(sample_count=int(sample_count), samples=None,
                   v_grid=v_grid, q_grid=q_grid)

    def quantile(self, v):
        """Ainv(v): linear interpolation between adjacent order statistics."""
        v = np.asarray(v, dtype=float)
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise PreconditionError("quantile levels must lie in [0, 1]")
        if self.samples is not None:
            out = np.quantile(self.samples, v)
        else:
            out = np.interp(v, self.v_grid, self.q_grid)
        return out if out.ndim else float(out)

    def cdf(self, u):
        """A(u) = fraction of samples <= u."""
        u = np.asarray(u, dtype=float)
        if self.samples is not None:
            out = np.searchsorted(self.samples, u, side="right") / self.sample_count
        else:
            # invert the quantile grid; ties collapse to the largest level
            q, idx = np.unique(self.q_grid, return_index=True)
            last = np.concatenate((idx[1:], [self.q_grid.size])) - 1
            out = np.interp(u, q, self.v_grid[last])
            out = np.where(u < q[0], 0.0, np.where(u >= q[-1], 1.0, out))
        return out if out.ndim else float(out)


def _zb_block(args):
    config, seed, start, stop = args
    out = np.empty(stop - start)
    for i, s in enumerate(range(start, stop)):
        out[i] = sample_zb(config, derive_stream(StreamKey(seed, (s,))))
    return out


def build_calibration(config: ArgminConfig, seed: int,
                      threads: int = 0) -> CalibrationTable:
    """Monte Carlo table from outer_samples draws, one stream per sample.

    Samples are keyed (seed, sample index), so the table is bit-for-bit
    reproducible for any worker count.
    """
    S = config.outer_samples
    bounds = np.linspace(0, S, min(S, 64) + 1).astype(int)
    tasks = [(config, seed, int(lo), int(hi))
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    blocks = map_chunks(_zb_block, tasks, threads)
    return CalibrationTable.from_samples(np.concatenate(blocks))


def recalibrate_tau(beta: float, table: CalibrationTable) -> float:
    """Credibility adjustment tau = 2 * Ainv(beta / 2).

    A central credible interval at credibility 1 - tau then has
    asymptotic frequentist coverage 1 - beta.
    """
    if not 0.0 < beta < 1.0:
        raise PreconditionError(f"beta must lie in (0, 1), got {beta!r}")
    return 2.0 * float(table.quantile(beta / 2.0))
