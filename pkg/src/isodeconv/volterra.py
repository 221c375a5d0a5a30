"""Resolvent of the first kind for the convolution equation (p * k)(x) = x.

`solve_resolvent` runs the trapezoidal recurrence started from
p(0) = 1/k(0).  `resolvent_residual` re-evaluates the convolution with
an independent half-step quadrature so discretization error is actually
visible (the defining recurrence reproduces the step-h trapezoid sum
identically, which would make a same-grid residual vacuous).
`renewal_series_resolvent` is a Monte Carlo oracle valid for decreasing
kernels: p(x) = (1 + expected renewal count at x) / k(0) where the
inter-arrival law has CDF J(x) = 1 - k(x)/k(0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import PreconditionError
from .kernels import NoiseKernel
from .rng import StreamKey, derive_stream

RELATIVE_STEP = 1e-3
MAX_GRID_POINTS = 50001
ORACLE_TABLE_POINTS = 10_000
ORACLE_TAIL_LEVEL = 1e-6
_ORACLE_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class ResolventTable:
    """Samples of p at x_n = n*h, n = 0..N-1, with T = (N-1)*h."""

    step_size: float
    horizon: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.step_size <= 0.0 or self.horizon <= 0.0:
            raise PreconditionError("step size and horizon must be positive")
        if values.ndim != 1 or values.size < 2:
            raise PreconditionError("resolvent table needs at least two values")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("resolvent table values must be finite")
        if abs(self.step_size * (values.size - 1) - self.horizon) > 1e-9 * self.horizon:
            raise PreconditionError("horizon must equal (N-1) * step size")
        object.__setattr__(self, "values", values)

    @property
    def grid(self) -> np.ndarray:
        return self.step_size * np.arange(self.values.size)


@dataclass(frozen=True)
class ResolventQuery:
    """Evaluation rule over a table: linear between grid points, 0 below 0."""

    table: ResolventTable

    def __call__(self, u):
        return evaluate_resolvent(self, u)


def default_grid_size(T: float) -> int:
    """Grid size giving h <= 1e-3 * max(T, 1), capped at 50001 points."""
    if T <= 0.0:
        raise PreconditionError(f"horizon T must be positive, got {T!r}")
    return int(min(MAX_GRID_POINTS, max(1001, np.ceil(T / RELATIVE_STEP) + 1)))


def solve_resolvent(kernel: NoiseKernel, T: float, N: int | None = None) -> ResolventTable:
    """Solve (p * k)(x) = x on [0, T] by the trapezoidal recurrence.

    With k_m = k(m*h) and h = T/(N-1):

        p_0 = 1/k_0,
        p_n = (2/k_0) * [n - k_n p_0 / 2 - sum_{j=1}^{n-1} p_j k_{n-j}].

    The h in x_n = n*h cancels against the quadrature weight, so the
    recurrence is written in units of n.
    """
    if T <= 0.0:
        raise PreconditionError(f"horizon T must be positive, got {T!r}")
    if N is None:
        N = default_grid_size(T)
    N = int(N)
    if N < 2:
        raise PreconditionError(f"need N >= 2 grid points, got {N}")
    h = T / (N - 1)
    kv = np.asarray(kernel.density(h * np.arange(N)), dtype=float)
    if not np.all(np.isfinite(kv)):
        raise PreconditionError("kernel evaluated non-finite on the grid")
    k0 = kv[0]
    if k0 <= 0.0:
        raise PreconditionError(f"k(0) must be positive, got {k0!r}")
    kr = kv[::-1].copy()
    p = np.empty(N)
    p[0] = 1.0 / k0
    for n in range(1, N):
        acc = np.dot(p[1:n], kr[N - n:N - 1])
        p[n] = 2.0 / k0 * (n - 0.5 * kv[n] * p[0] - acc)
    return ResolventTable(step_size=h, horizon=T, values=p)


def resolvent_residual(table: ResolventTable, kernel: NoiseKernel) -> float:
    """Max over the grid of |trapezoidal (k * p)(x_n) - x_n|.

    The quadrature runs at step h/2 with the table interpolated at
    midpoints, so the result measures true discretization error, O(h^2)
    for smooth kernels, instead of replaying the solver's own identity.
    """
    p = table.values
    N = p.size
    h2 = 0.5 * table.step_size
    M = 2 * N - 1
    k2 = np.asarray(kernel.density(h2 * np.arange(M)), dtype=float)
    if not np.all(np.isfinite(k2)):
        raise PreconditionError("kernel evaluated non-finite on the refined grid")
    p2 = np.empty(M)
    p2[0::2] = p
    p2[1::2] = 0.5 * (p[:-1] + p[1:])
    conv = fftconvolve(k2, p2)[:M]
    trapz = h2 * (conv - 0.5 * k2 * p2[0] - 0.5 * k2[0] * p2)
    resid = np.abs(trapz[0::2] - table.step_size * np.arange(N))
    return float(resid.max())


def _inverse_j_table(kernel: NoiseKernel):
    """Tabulate J^{-1} on ORACLE_TABLE_POINTS levels up to 1 - tail level.

    J(x) = 1 - k(x)/k(0) is inverted by bisection on the decreasing
    density, after verifying monotonicity on a log-spaced probe grid.
    """
    k0 = kernel.at_zero
    if k0 <= 0.0:
        raise PreconditionError("renewal oracle needs k(0) > 0")
    hi = 1.0
    for _ in range(200):
        if float(kernel.density(hi)) <= ORACLE_TAIL_LEVEL * k0:
            break
        hi *= 2.0
    else:
        raise PreconditionError("kernel tail too heavy to tabulate J")
    probes = np.concatenate(([0.0], np.geomspace(hi * 1e-9, hi, 4096)))
    kvals = np.asarray(kernel.density(probes), dtype=float)
    if np.any(np.diff(kvals) > 1e-9 * k0):
        raise PreconditionError("renewal oracle requires a nonincreasing density")
    levels = np.linspace(0.0, 1.0 - ORACLE_TAIL_LEVEL, ORACLE_TABLE_POINTS)
    targets = (1.0 - levels) * k0
    lo = np.zeros_like(levels)
    up = np.full_like(levels, hi)
    for _ in range(64):
        mid = 0.5 * (lo + up)
        above = np.asarray(kernel.density(mid), dtype=float) > targets
        lo = np.where(above, mid, lo)
        up = np.where(above, up, mid)
    return levels, 0.5 * (lo + up)


def renewal_series_resolvent(kernel: NoiseKernel, xs, paths: int, seed: int,
                             return_stderr: bool = False):
    """Monte Carlo p(x) = (1 + E renewal count at x) / k(0), x per entry of xs.

    Valid for nonincreasing densities.  Paths are simulated in fixed
    chunks with one derived substream per chunk, so the estimate is
    reproducible for a given (seed, paths) regardless of scheduling.
    With return_stderr=True also returns the Monte Carlo standard error
    of each estimate.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0.0):
        raise PreconditionError("oracle evaluation points must be nonnegative")
    paths = int(paths)
    if paths < 1:
        raise PreconditionError("need at least one path")
    levels, quantiles = _inverse_j_table(kernel)
    k0 = kernel.at_zero
    xmax = xs.max()
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    mean_t = max(np.trapezoid(1.0 - levels, quantiles), 1e-12)
    max_rounds = int(1000 + 50 * xmax / mean_t)
    total_sorted = np.zeros(xs.size)
    total_sq_sorted = np.zeros(xs.size)
    for chunk_idx, start in enumerate(range(0, paths, _ORACLE_CHUNK)):
        size = min(_ORACLE_CHUNK, paths - start)
        rng = derive_stream(StreamKey(seed, (chunk_idx,)))
        sums = np.zeros(size)
        if return_stderr:
            # per-path counts, needed for the sample variance
            counts = np.zeros((size, xs.size))
        else:
            hits = np.zeros(xs.size + 1)
        for _ in range(max_rounds):
            if not np.any(sums <= xmax):
                break
            sums = sums + np.interp(rng.random(size), levels, quantiles)
            if return_stderr:
                counts += sums[:, None] <= xs_sorted[None, :]
            else:
                first = np.searchsorted(xs_sorted, sums, side="left")
                hits += np.bincount(first, minlength=xs.size + 1)
        else:
            raise PreconditionError("renewal simulation failed to exhaust the horizon")
        if return_stderr:
            total_sorted += counts.sum(axis=0)
            total_sq_sorted += (counts * counts).sum(axis=0)
        else:
            total_sorted += np.cumsum(hits[:-1])
    mean = np.empty(xs.size)
    mean[order] = total_sorted / paths
    estimates = (1.0 + mean) / k0
    if not return_stderr:
        return estimates
    total_sq = np.empty(xs.size)
    total_sq[order] = total_sq_sorted
    if paths > 1:
        var = (total_sq - paths * mean * mean) / (paths - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / paths) / k0
    else:
        stderr = np.full(xs.size, np.inf)
    return estimates, stderr


def evaluate_resolvent(query: ResolventQuery, u):
    """Evaluate p at u: linear interpolation, 0 for u < 0.

    Raises if any u exceeds the table horizon; that signals the table
    was built too short for the requested evaluation.
    """
    table = query.table
    u = np.asarray(u, dtype=float)
    if np.any(u > table.horizon * (1.0 + 1e-12) + 1e-12):
        raise PreconditionError(
            f"evaluation point beyond resolvent horizon {table.horizon!r}")
    out = np.interp(np.minimum(u, table.horizon), table.grid, table.values)
    return np.where(u < 0.0, 0.0, out) if out.ndim else float(out * (u >= 0.0))
