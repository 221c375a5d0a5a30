"""Discrete measures and Dirichlet-process sampling.

The posterior of G ~ DP(alpha) given Z_1..Z_n is DP(alpha + n G_n); we
sample it exactly through the decomposition

    G = V_n Q + (1 - V_n) B_n,

with V_n ~ Beta(M, n), Q ~ DP(alpha) drawn by stick breaking, and B_n
the Bayesian bootstrap of the data.  Draw order is pinned (V_n, then Q
sticks, then Q atoms, then bootstrap exponentials) so any consumer can
replay a draw from the same stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import PreconditionError

MAX_STICKS = 5000
STICK_MASS_TOL = 1e-8
_STICK_BLOCK = 256


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure on [0, inf)."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape or atoms.size == 0:
            raise PreconditionError("atoms and weights must be equal-length nonempty 1-d arrays")
        if not np.all(np.isfinite(atoms)) or np.any(atoms < 0.0):
            raise PreconditionError("atoms must be finite and nonnegative")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise PreconditionError("weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise PreconditionError(f"weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def mass_upto(self, x):
        """G([0, x]), vectorized over x."""
        hit = self.atoms <= np.asarray(x, dtype=float)[..., None]
        return hit @ self.weights


@dataclass(frozen=True)
class DPPrior:
    """DP(M * Ga(base_shape, base_rate)) prior on the observable law."""

    precision: float = 10.0
    base_shape: float = 2.0
    base_rate: float = 2.0

    def __post_init__(self):
        for field in ("precision", "base_shape", "base_rate"):
            v = float(getattr(self, field))
            if not math.isfinite(v) or v <= 0.0:
                raise PreconditionError(f"{field} must be positive, got {v!r}")

    def base_cdf(self, x):
        """CDF of the Gamma base measure."""
        return special.gammainc(self.base_shape, self.base_rate * np.asarray(x, dtype=float))


def empirical_measure(data) -> DiscreteMeasure:
    """Uniform weights 1/n on the observations."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size == 0:
        raise PreconditionError("need a nonempty 1-d sample")
    return DiscreteMeasure(atoms=data, weights=np.full(data.size, 1.0 / data.size))


def draw_dp_prior(prior: DPPrior, rng: np.random.Generator) -> DiscreteMeasure:
    """One stick-breaking draw from DP(M * Ga(base_shape, base_rate)).

    Stick fractions are Beta(1, M); atoms are Gamma base-measure draws.
    Breaking stops once the leftover mass falls below 1e-8 or 5000
    sticks are out, and the leftover is folded into the last atom so the
    weights sum to 1 without renormalization.  Sticks are drawn in
    blocks; the number of variates consumed depends only on the values
    drawn, so the draw is reproducible from the stream alone.
    """
    log_tol = math.log(STICK_MASS_TOL)
    parts = []
    log_left = 0.0
    count = 0
    while count < MAX_STICKS:
        size = min(_STICK_BLOCK, MAX_STICKS - count)
        v = rng.beta(1.0, prior.precision, size=size)
        with np.errstate(divide="ignore"):
            log_fracs = np.log1p(-v)
        log_before = log_left + np.concatenate(([0.0], np.cumsum(log_fracs[:-1])))
        log_after = log_left + np.cumsum(log_fracs)
        hit = np.nonzero(log_after < log_tol)[0]
        stop = hit[0] + 1 if hit.size else size
        parts.append(v[:stop] * np.exp(log_before[:stop]))
        count += stop
        log_left = log_after[stop - 1]
        if hit.size:
            break
    weights = np.concatenate(parts)
    weights[-1] += math.exp(log_left)
    atoms = rng.gamma(shape=prior.base_shape, scale=1.0 / prior.base_rate, size=weights.size)
    return DiscreteMeasure(atoms=atoms, weights=weights)


def bayesian_bootstrap(data, rng: np.random.Generator) -> DiscreteMeasure:
    """Dirichlet(1,..,1) weights on the data, via normalized exponentials."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size == 0:
        raise PreconditionError("need a nonempty 1-d sample")
    eps = rng.exponential(scale=1.0, size=data.size)
    return DiscreteMeasure(atoms=data, weights=eps / eps.sum())


def posterior_components(prior: DPPrior, data, rng: np.random.Generator):
    """(V_n, Q, B_n) of the posterior decomposition, in pinned draw order."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size == 0:
        raise PreconditionError("need a nonempty 1-d sample")
    vn = float(rng.beta(prior.precision, data.size))
    fresh = draw_dp_prior(prior, rng)
    bootstrap = bayesian_bootstrap(data, rng)
    return vn, fresh, bootstrap


def draw_dp_posterior(prior: DPPrior, data, rng: np.random.Generator) -> DiscreteMeasure:
    """Exact draw from the DP posterior given the data.

    Merges the decomposition parts into one discrete measure: fresh
    prior atoms carry total mass V_n, data atoms carry 1 - V_n.
    """
    vn, fresh, bootstrap = posterior_components(prior, data, rng)
    atoms = np.concatenate((fresh.atoms, bootstrap.atoms))
    weights = np.concatenate((vn * fresh.weights, (1.0 - vn) * bootstrap.weights))
    return DiscreteMeasure(atoms=atoms, weights=weights)
