"""Grids, sampled fields, universal constants, and quadrature.

All value objects are immutable after construction and safe to share
across threads.  Density fields obey the negative-value policy: values in
[-NEG_CLAMP, 0) are clamped to zero once per operation, anything below
-NEG_CLAMP is treated as a numerical failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainOverflowError, NumericalFailureError

# Negative values above this magnitude abort; smaller ones are clamped to 0.
NEG_CLAMP = 1e-12

# Tail threshold used by support / boundary checks.
SUPPORT_EPS = 1e-14


def surface_area(dim: int) -> float:
    """Surface area of the unit sphere in ``dim`` dimensions (2pi, 4pi, ...)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def ball_volume(dim: int) -> float:
    """Volume of the unit ball in ``dim`` dimensions (2, pi, 4pi/3, ...)."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class Constants:
    c_crit: float
    theta_crit: float


def constants() -> Constants:
    """Critical spreading constants of the 1d indicator limit profile.

    c_crit = (3/2)^(2/3) is the half-width and theta_crit = (1/18)^(1/3)
    the height in stretched coordinates; they satisfy 2*theta*c = 1.
    """
    c = (3.0 / 2.0) ** (2.0 / 3.0)
    theta = (1.0 / 18.0) ** (1.0 / 3.0)
    return Constants(c_crit=c, theta_crit=theta)


def _require_power_of_two(n: int) -> None:
    if n < 64 or (n & (n - 1)) != 0:
        raise ConfigError(f"grid size must be a power of two >= 64, got {n}")


@dataclass(frozen=True)
class UniformGrid1D:
    """Node-centered periodic grid: node j at x_min + j*dx, x_max identified with x_min."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        _require_power_of_two(self.n)
        if not self.x_max > self.x_min:
            raise ConfigError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def extent(self) -> float:
        return self.x_max - self.x_min

    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def key(self) -> tuple:
        return (self.x_min, self.x_max, self.n)


@dataclass(frozen=True)
class Field1D:
    grid: UniformGrid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ConfigError(f"expected {self.grid.n} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalFailureError("non-finite field values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "Field1D":
        return Field1D(self.grid, values)


@dataclass(frozen=True)
class RadialGrid:
    """Radial grid in ``dim`` >= 2 dimensions, node j at r = j*dr including r=0 and r=r_max."""

    dim: int
    r_max: float
    n: int

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError("radial grids require dim >= 2")
        if self.n < 64:
            raise ConfigError("radial grids require n >= 64")
        if not self.r_max > 0:
            raise ConfigError("r_max must be positive")

    @property
    def dr(self) -> float:
        return self.r_max / self.n

    def nodes(self) -> np.ndarray:
        return self.dr * np.arange(self.n + 1)


@dataclass(frozen=True)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ConfigError(f"expected {self.grid.n + 1} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalFailureError("non-finite field values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values)


def clamp_density(values: np.ndarray, where: str = "") -> np.ndarray:
    """Apply the negative-value policy to raw density samples (returns a new array)."""
    lo = values.min()
    if lo < -NEG_CLAMP:
        raise NumericalFailureError(
            f"density fell to {lo:.3e} (below -{NEG_CLAMP:g}){' in ' + where if where else ''}"
        )
    if lo < 0.0:
        values = np.where(values < 0.0, 0.0, values)
    return values


def integrate(f) -> float:
    """Integral of a sampled field.

    Field1D: periodic rectangle rule, exact for constants.
    RadialField: trapezoid rule of f(r) * sigma_d * r^(d-1) dr.
    """
    if isinstance(f, Field1D):
        return float(f.values.sum() * f.grid.dx)
    if isinstance(f, RadialField):
        g = f.grid
        r = g.nodes()
        w = surface_area(g.dim) * r ** (g.dim - 1) * g.dr
        w[0] *= 0.5
        w[-1] *= 0.5
        return float(np.dot(w, f.values))
    raise ConfigError(f"cannot integrate object of type {type(f)!r}")


def radial_quadrature_weights(grid: RadialGrid) -> np.ndarray:
    """Finite-volume mass weights matched to the conservative radial stepper.

    Differ from the plain trapezoid by O(dr^2): node 0 owns the ball of
    radius dr/2 so that flux telescoping is exact (see radial module).
    """
    r = grid.nodes()
    sd = surface_area(grid.dim)
    w = sd * r ** (grid.dim - 1) * grid.dr
    w[0] = ball_volume(grid.dim) * (grid.dr / 2.0) ** grid.dim
    w[-1] *= 0.5
    return w


def interp_cubic(x_old: np.ndarray, values: np.ndarray, x_new: np.ndarray) -> np.ndarray:
    spl = CubicSpline(x_old, values, extrapolate=False)
    out = spl(x_new)
    return np.where(np.isfinite(out), out, 0.0)


def resample(f: Field1D, new_grid: UniformGrid1D) -> Field1D:
    """Cubic re-interpolation of ``f`` onto ``new_grid``.

    The support of ``f`` must be interior to both domains; fields whose
    support touches the periodic seam cannot be re-gridded safely.
    """
    old = f.grid
    v = f.values
    absv = np.abs(v)
    if absv[0] > SUPPORT_EPS or absv[-1] > SUPPORT_EPS:
        raise DomainOverflowError("field support touches the periodic boundary")
    x_old = old.nodes()
    outside = (x_old < new_grid.x_min) | (x_old >= new_grid.x_max)
    if np.any(outside):
        m_out = absv[outside].sum() * old.dx
        if m_out > 1e-10:
            raise DomainOverflowError(
                f"mass {m_out:.3e} of the field lies outside the new domain"
            )
        if absv[outside].max(initial=0.0) > SUPPORT_EPS:
            raise DomainOverflowError("field support extends outside the new domain")
    new_vals = interp_cubic(x_old, v, new_grid.nodes())
    new_vals = clamp_density(new_vals, "resample") if v.min() >= 0.0 else new_vals
    out = Field1D(new_grid, new_vals)
    m_old = integrate(f)
    m_new = integrate(out)
    if abs(m_new - m_old) > 1e-8 * max(abs(m_old), 1e-30):
        raise NumericalFailureError(
            f"resample changed mass by {abs(m_new - m_old):.3e} (from {m_old:.6e})"
        )
    return out


def field_to_csv(f, path) -> None:
    """Write a field snapshot as CSV (header ``x,value`` or ``r,value``), 17 digits."""
    if isinstance(f, Field1D):
        label, xs = "x", f.grid.nodes()
    else:
        label, xs = "r", f.grid.nodes()
    with open(path, "w") as fh:
        fh.write(f"{label},value\n")
        for x, v in zip(xs, f.values):
            fh.write(f"{x:.17g},{v:.17g}\n")
