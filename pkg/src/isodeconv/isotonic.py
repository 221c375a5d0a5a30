"""Greatest convex minorant, its right derivative, and PAVA.

`gcm` builds the lower convex hull of the sampled curve by a monotone
chain scan; its right derivative is the isotonized CDF estimate.
`pava` is kept as a genuinely separate implementation of weighted
isotonic regression: the classical duality (GCM slopes == PAVA on
segment slopes weighted by segment widths) is a cross-check between the
two, so neither is written in terms of the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Curve values on increasing abscissae, anchored at the origin."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
            raise PreconditionError("xs and ys must be equal-length nonempty 1-d arrays")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise PreconditionError("curve samples must be finite")
        if xs[0] != 0.0 or ys[0] != 0.0:
            raise PreconditionError("curve must start at the origin (H(0) = 0)")
        if np.any(np.diff(xs) <= 0.0):
            raise PreconditionError("abscissae must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)


@dataclass(frozen=True, eq=False)
class ConvexMinorant:
    """Lower convex hull vertices; slopes strictly increase knot to knot."""

    knot_xs: np.ndarray
    knot_ys: np.ndarray

    def __post_init__(self):
        kx = np.asarray(self.knot_xs, dtype=float)
        ky = np.asarray(self.knot_ys, dtype=float)
        if kx.ndim != 1 or kx.shape != ky.shape or kx.size < 2:
            raise PreconditionError("a minorant needs at least two knots")
        if np.any(np.diff(kx) <= 0.0):
            raise PreconditionError("knot abscissae must be strictly increasing")
        object.__setattr__(self, "knot_xs", kx)
        object.__setattr__(self, "knot_ys", ky)
        object.__setattr__(self, "slopes", np.diff(ky) / np.diff(kx))

    def __call__(self, x):
        """Minorant value, linear between knots."""
        return np.interp(np.asarray(x, dtype=float), self.knot_xs, self.knot_ys)


@dataclass(frozen=True, eq=False)
class StepCDF:
    """Right-continuous nondecreasing step function.

    levels[j] is the value on [break_xs[j], break_xs[j+1]); the last
    level extends constantly to the right.  Values are 0 left of the
    first break.
    """

    break_xs: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        bx = np.asarray(self.break_xs, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if bx.ndim != 1 or bx.shape != lv.shape or bx.size == 0:
            raise PreconditionError("breaks and levels must be equal-length 1-d arrays")
        if np.any(np.diff(bx) <= 0.0):
            raise PreconditionError("break points must be strictly increasing")
        if np.any(np.diff(lv) < -1e-12):
            raise PreconditionError("levels must be nondecreasing")
        object.__setattr__(self, "break_xs", bx)
        object.__setattr__(self, "levels", np.maximum.accumulate(lv))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.break_xs, x, side="right") - 1
        vals = self.levels[np.clip(idx, 0, self.levels.size - 1)]
        out = np.where(idx < 0, 0.0, vals)
        return out if out.ndim else float(out)

    def clamped(self) -> "StepCDF":
        """Copy with levels clipped to [0, 1] for CDF display."""
        return StepCDF(self.break_xs, np.clip(self.levels, 0.0, 1.0))


def gcm(curve: SampledCurve) -> ConvexMinorant:
    """Lower convex hull of the sampled points (monotone chain scan).

    Ties in slope merge into a single segment, so consecutive hull
    slopes are strictly increasing.
    """
    if curve.xs.size < 2:
        raise PreconditionError("need at least two points for a minorant")
    xs = curve.xs.tolist()
    ys = curve.ys.tolist()
    kx = [xs[0]]
    ky = [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        while len(kx) >= 2:
            cross = (kx[-1] - kx[-2]) * (y - ky[-2]) - (ky[-1] - ky[-2]) * (x - kx[-2])
            if cross <= 0.0:
                kx.pop()
                ky.pop()
            else:
                break
        kx.append(x)
        ky.append(y)
    return ConvexMinorant(knot_xs=np.array(kx), knot_ys=np.array(ky))


def right_derivative(minorant: ConvexMinorant, x: float) -> float:
    """Slope immediately right of x; constant extension at the last knot."""
    kx = minorant.knot_xs
    if x < kx[0] or x > kx[-1]:
        raise PreconditionError(f"x={x!r} outside the minorant domain [{kx[0]}, {kx[-1]}]")
    idx = int(np.searchsorted(kx, x, side="right")) - 1
    return float(minorant.slopes[min(idx, minorant.slopes.size - 1)])


def isotonize(curve: SampledCurve, clamp: bool = False) -> StepCDF:
    """Right derivative of the GCM, sampled per grid segment.

    The hull knots are grid points, so the derivative is constant on
    each grid interval; levels[j] is the slope on [xs[j], xs[j+1]) and
    levels[-1] repeats the final slope.  clamp=True clips the output to
    [0, 1] for display; the estimator itself is reported unclamped.
    """
    minorant = gcm(curve)
    idx = np.searchsorted(minorant.knot_xs, curve.xs, side="right") - 1
    levels = minorant.slopes[np.clip(idx, 0, minorant.slopes.size - 1)]
    if clamp:
        levels = np.clip(levels, 0.0, 1.0)
    return StepCDF(break_xs=curve.xs.copy(), levels=levels)


def pava(slopes, weights) -> np.ndarray:
    """Weighted isotonic (nondecreasing) regression by pooling violators.

    Block values are the weighted means of pooled entries.
    """
    values = np.asarray(slopes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.ndim != 1 or values.shape != weights.shape or values.size == 0:
        raise PreconditionError("slopes and weights must be equal-length nonempty 1-d arrays")
    if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
        raise PreconditionError("weights must be positive and finite")
    means = []
    wsums = []
    counts = []
    for v, w in zip(values, weights):
        means.append(v)
        wsums.append(w)
        counts.append(1)
        while len(means) >= 2 and means[-2] >= means[-1]:
            w_tot = wsums[-2] + wsums[-1]
            means[-2] = (means[-2] * wsums[-2] + means[-1] * wsums[-1]) / w_tot
            wsums[-2] = w_tot
            counts[-2] += counts[-1]
            means.pop()
            wsums.pop()
            counts.pop()
    return np.repeat(means, counts)
