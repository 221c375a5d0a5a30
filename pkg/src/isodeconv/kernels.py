"""Noise kernel registry: known densities k on [0, inf) with k(0) > 0.

Built-in families match the simulation designs they appear in: exp(1),
the Erlang/exponential convex mixture with k(0) = 1.5, HalfNormal(0,1),
HalfCauchy(0,2), Lomax(10,1) and the half-logistic with scale 1.  All
kernels are immutable after construction and carry a seedable sampler,
so they can be shared freely across worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, PreconditionError

_PARAM_ALIASES = {"lambda": "lam"}


def _require_positive(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise PreconditionError(f"{name} must be a positive finite real, got {value!r}")
    return value


class NoiseKernel:
    """Common interface: vectorized density, exact CDF, seedable sampler."""

    name = "abstract"

    @property
    def at_zero(self) -> float:
        """k(0); the resolvent recurrence divides by this value."""
        return float(self.density(0.0))

    @property
    def params(self) -> dict:
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def cdf(self, x):
        """Integral of the density over [0, x]."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def spec_string(self) -> str:
        """Inverse of parse_kernel_spec for built-in families."""
        inner = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}:{inner}" if inner else self.name


@dataclass(frozen=True)
class ExponentialKernel(NoiseKernel):
    rate: float = 1.0

    name = "exp"

    def __post_init__(self):
        _require_positive(self.rate, "rate")

    @property
    def params(self):
        return {"rate": self.rate}

    def density(self, x):
        return self.rate * np.exp(-self.rate * np.asarray(x, dtype=float))

    def cdf(self, x):
        return 1.0 - np.exp(-self.rate * np.asarray(x, dtype=float))

    def sample(self, rng, size):
        return rng.exponential(scale=1.0 / self.rate, size=size)


@dataclass(frozen=True)
class ErlangExpMixKernel(NoiseKernel):
    """Convex mixture weight*Erlang(shape, rate) + (1-weight)*Exp(rate)."""

    weight: float = 0.25
    shape: int = 2
    rate: float = 2.0

    name = "erlang_exp_mix"

    def __post_init__(self):
        w = float(self.weight)
        if not (0.0 <= w <= 1.0):
            raise PreconditionError(f"weight must lie in [0, 1], got {w!r}")
        if int(self.shape) != self.shape or self.shape < 1:
            raise PreconditionError(f"shape must be a positive integer, got {self.shape!r}")
        _require_positive(self.rate, "rate")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "shape", int(self.shape))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def params(self):
        return {"weight": self.weight, "shape": float(self.shape), "rate": self.rate}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        r, m = self.rate, self.shape
        erlang = r**m * x ** (m - 1) * np.exp(-r * x) / math.factorial(m - 1)
        expo = r * np.exp(-r * x)
        return self.weight * erlang + (1.0 - self.weight) * expo

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        erlang = special.gammainc(self.shape, self.rate * x)
        expo = 1.0 - np.exp(-self.rate * x)
        return self.weight * erlang + (1.0 - self.weight) * expo

    def sample(self, rng, size):
        pick = rng.random(size) < self.weight
        erlang = rng.gamma(shape=self.shape, scale=1.0 / self.rate, size=size)
        expo = rng.exponential(scale=1.0 / self.rate, size=size)
        return np.where(pick, erlang, expo)


@dataclass(frozen=True)
class HalfNormalKernel(NoiseKernel):
    sigma: float = 1.0

    name = "halfnormal"

    def __post_init__(self):
        _require_positive(self.sigma, "sigma")

    @property
    def params(self):
        return {"sigma": self.sigma}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / math.pi) / self.sigma * np.exp(-0.5 * (x / self.sigma) ** 2)

    def cdf(self, x):
        return special.erf(np.asarray(x, dtype=float) / (self.sigma * math.sqrt(2.0)))

    def sample(self, rng, size):
        return np.abs(rng.normal(loc=0.0, scale=self.sigma, size=size))


@dataclass(frozen=True)
class HalfCauchyKernel(NoiseKernel):
    gamma: float = 2.0

    name = "halfcauchy"

    def __post_init__(self):
        _require_positive(self.gamma, "gamma")

    @property
    def params(self):
        return {"gamma": self.gamma}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 / (math.pi * self.gamma * (1.0 + (x / self.gamma) ** 2))

    def cdf(self, x):
        return 2.0 / math.pi * np.arctan(np.asarray(x, dtype=float) / self.gamma)

    def sample(self, rng, size):
        return self.gamma * np.abs(rng.standard_cauchy(size=size))


@dataclass(frozen=True)
class LomaxKernel(NoiseKernel):
    c: float = 10.0
    lam: float = 1.0

    name = "lomax"

    def __post_init__(self):
        _require_positive(self.c, "c")
        _require_positive(self.lam, "lambda")

    @property
    def params(self):
        return {"c": self.c, "lambda": self.lam}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.c / self.lam * (1.0 + x / self.lam) ** (-(self.c + 1.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 - (1.0 + x / self.lam) ** (-self.c)

    def sample(self, rng, size):
        return self.lam * rng.pareto(self.c, size=size)


@dataclass(frozen=True)
class HalfLogisticKernel(NoiseKernel):
    s: float = 1.0

    name = "halflogistic"

    def __post_init__(self):
        _require_positive(self.s, "s")

    @property
    def params(self):
        return {"s": self.s}

    def density(self, x):
        e = np.exp(-np.asarray(x, dtype=float) / self.s)
        return 2.0 / self.s * e / (1.0 + e) ** 2

    def cdf(self, x):
        e = np.exp(-np.asarray(x, dtype=float) / self.s)
        return (1.0 - e) / (1.0 + e)

    def sample(self, rng, size):
        return np.abs(rng.logistic(loc=0.0, scale=self.s, size=size))


@dataclass(frozen=True, eq=False)
class TabulatedKernel(NoiseKernel):
    """Kernel given by samples on a grid; density is linear interpolation.

    The density is 0 beyond the last grid point.  The CDF and the
    sampler integrate the interpolant exactly (piecewise quadratic
    cumulative); the sampler normalizes by the total tabulated mass.
    """

    grid: np.ndarray
    values: np.ndarray

    name = "tabulated"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise PreconditionError("grid and values must be equal-length 1-d arrays, length >= 2")
        if grid[0] != 0.0:
            raise PreconditionError("tabulated grid must start at 0")
        if not np.all(np.diff(grid) > 0.0):
            raise PreconditionError("tabulated grid must be strictly increasing")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise PreconditionError("tabulated kernel entries must be finite")
        if np.any(values < 0.0):
            raise PreconditionError("tabulated density values must be nonnegative")
        if values[0] <= 0.0:
            raise PreconditionError("tabulated kernel needs k(0) > 0")
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(grid))))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_cum", cum)

    @property
    def params(self):
        return {}

    def density(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values,
                         left=float(self.values[0]), right=0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.grid[-1])
        i = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, self.grid.size - 2)
        dx = x - self.grid[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
        return self._cum[i] + self.values[i] * dx + 0.5 * slope * dx * dx

    def sample(self, rng, size):
        total = self._cum[-1]
        if total <= 0.0:
            raise PreconditionError("tabulated kernel has zero total mass, cannot sample")
        r = rng.random(size) * total
        j = np.clip(np.searchsorted(self._cum, r, side="right") - 1, 0, self.grid.size - 2)
        rem = r - self._cum[j]
        width = self.grid[j + 1] - self.grid[j]
        v0 = self.values[j]
        slope = (self.values[j + 1] - v0) / width
        # invert v0*t + slope*t^2/2 = rem on each linear segment
        disc = np.sqrt(np.maximum(v0 * v0 + 2.0 * slope * rem, 0.0))
        flat = np.abs(slope) < 1e-300
        t = np.where(flat,
                     rem / np.where(v0 > 0.0, v0, 1.0),
                     (disc - v0) / np.where(flat, 1.0, slope))
        return self.grid[j] + np.clip(t, 0.0, width)


_BUILTINS = {
    "exp": ExponentialKernel,
    "erlang_exp_mix": ErlangExpMixKernel,
    "halfnormal": HalfNormalKernel,
    "halfcauchy": HalfCauchyKernel,
    "lomax": LomaxKernel,
    "halflogistic": HalfLogisticKernel,
}


def builtin_kernel(name: str, **params) -> NoiseKernel:
    """Construct a built-in kernel family by name.

    Parameters use the family's published symbols ("lambda" is accepted
    for the Lomax scale).  Unknown names or parameter keys raise
    ConfigError; out-of-domain values raise PreconditionError.
    """
    try:
        cls = _BUILTINS[name]
    except KeyError:
        raise ConfigError(
            f"unknown kernel {name!r}; choose one of {sorted(_BUILTINS)}") from None
    kwargs = {_PARAM_ALIASES.get(k, k): v for k, v in params.items()}
    try:
        return cls(**kwargs)
    except TypeError:
        raise ConfigError(f"invalid parameters {sorted(params)} for kernel {name!r}") from None


def load_tabulated(grid, values) -> TabulatedKernel:
    """Kernel from (grid, values) samples; see TabulatedKernel for rules."""
    return TabulatedKernel(np.asarray(grid, dtype=float), np.asarray(values, dtype=float))


def read_kernel_csv(path) -> TabulatedKernel:
    """Read a two-column CSV (x, k) with a header row."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"malformed kernel CSV {path}: {exc}") from None
    if raw.shape[1] != 2:
        raise ConfigError(f"kernel CSV {path} must have exactly two columns (x, k)")
    return load_tabulated(raw[:, 0], raw[:, 1])


def parse_kernel_spec(spec: str) -> NoiseKernel:
    """Parse a CLI kernel spec "name:key=value,key=value".

    The pseudo-family "tabulated:path=FILE.csv" loads a tabulated kernel
    from disk.
    """
    name, _, rest = spec.partition(":")
    name = name.strip()
    if not name:
        raise ConfigError(f"empty kernel name in spec {spec!r}")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected key=value, got {item!r} in kernel spec {spec!r}")
        params[key.strip()] = value.strip()
    if name == "tabulated":
        path = params.pop("path", None)
        if path is None or params:
            raise ConfigError("tabulated kernel spec takes exactly one key: path=FILE.csv")
        return read_kernel_csv(path)
    numeric = {}
    for key, value in params.items():
        try:
            numeric[key] = float(value)
        except ValueError:
            raise ConfigError(f"parameter {key}={value!r} is not a real number") from None
    return builtin_kernel(name, **numeric)
