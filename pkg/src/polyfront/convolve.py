"""FFT-based periodic convolution and kernel construction.

A smoothing kernel is described by a nonnegative even unit-mass profile
``phi``; the solver's interaction kernel is its self-convolution
``R = phi * phi``.  Convolutions run on the periodic solver grid: the
profile is sampled at wrapped displacements, normalized so its discrete
mass is exactly one (mode zero of the transfer function equals 1, hence
convolution preserves mass to roundoff), and the transfer function is
cached per grid.  Re-gridding simply resamples the profile, which
invalidates nothing but the per-grid cache entry.

The delta kernel is the identity and short-circuits every operation.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import Field1D, UniformGrid1D, clamp_density
from .errors import ConfigError

_EVEN_TOL = 1e-12


class DeltaKernel:
    """Identity kernel: R = delta, convolution returns the input unchanged."""

    is_delta = True

    def transfer(self, grid: UniformGrid1D) -> np.ndarray:
        return np.ones(grid.n // 2 + 1)

    def r_transfer(self, grid: UniformGrid1D) -> np.ndarray:
        return np.ones(grid.n // 2 + 1)

    def __repr__(self):
        return "DeltaKernel()"


class MollifierKernel:
    """Kernel defined by a mollifier profile phi with R = phi*phi.

    ``profile`` maps displacement to phi value and must be even,
    nonnegative, and supported in [-half_width, half_width].  Sampled
    data (from :func:`make_R` or a CSV table) is wrapped in a cubic
    interpolant.
    """

    is_delta = False

    def __init__(self, profile: Callable[[np.ndarray], np.ndarray], half_width: float,
                 phi: Field1D | None = None):
        if half_width <= 0:
            raise ConfigError("kernel half_width must be positive")
        self.profile = profile
        self.half_width = float(half_width)
        self.phi = phi  # sample table on its natural grid, when one exists
        self._cache: dict = {}

    # -- per-grid sampling ------------------------------------------------

    def _grid_entry(self, grid: UniformGrid1D) -> dict:
        entry = self._cache.get(grid.key())
        if entry is not None:
            return entry
        if 2.0 * self.half_width > 0.5 * grid.extent:
            raise ConfigError(
                f"kernel support 2*{self.half_width:g} exceeds half the grid extent "
                f"{grid.extent:g}; wrap-around would contaminate the convolution"
            )
        n, dx = grid.n, grid.dx
        disp = dx * np.arange(n)
        disp[n // 2:] -= grid.extent  # wrapped displacement, j > n/2 maps negative
        vals = np.asarray(self.profile(disp), dtype=float)
        vals[np.abs(disp) > self.half_width] = 0.0
        if vals.min() < 0:
            raise ConfigError("mollifier profile produced negative samples")
        s = vals.sum() * dx
        if s <= 0:
            raise ConfigError("mollifier profile vanishes on this grid")
        vals /= s
        transfer = np.fft.rfft(vals).real * dx  # real since samples are even
        entry = {"phi": vals, "transfer": transfer, "r_transfer": transfer * transfer}
        self._cache[grid.key()] = entry
        return entry

    def phi_samples(self, grid: UniformGrid1D) -> np.ndarray:
        """Normalized wrapped samples of phi (displacement layout, j>n/2 negative)."""
        return self._grid_entry(grid)["phi"].copy()

    def transfer(self, grid: UniformGrid1D) -> np.ndarray:
        return self._grid_entry(grid)["transfer"]

    def r_transfer(self, grid: UniformGrid1D) -> np.ndarray:
        return self._grid_entry(grid)["r_transfer"]

    def r_field(self, grid: UniformGrid1D) -> Field1D:
        """Sampled R = phi*phi on ``grid``, centered layout (node j at x_j)."""
        r_wrapped = np.fft.irfft(self.r_transfer(grid)) / grid.dx
        r_centered = np.roll(r_wrapped, grid.n // 2)
        return Field1D(grid, clamp_density(r_centered, "R samples"))

    def __repr__(self):
        return f"MollifierKernel(half_width={self.half_width:g})"


def convolve(f: Field1D, kernel) -> Field1D:
    """Periodic convolution phi * f (identity for the delta kernel)."""
    if kernel.is_delta:
        return f
    out = np.fft.irfft(np.fft.rfft(f.values) * kernel.transfer(f.grid))
    if f.values.min() >= 0.0:
        out = clamp_density(out, "convolve")
    return Field1D(f.grid, out)


def apply_R(f: Field1D, kernel) -> Field1D:
    """Periodic convolution R * f = phi * phi * f (identity for delta)."""
    if kernel.is_delta:
        return f
    out = np.fft.irfft(np.fft.rfft(f.values) * kernel.r_transfer(f.grid))
    if f.values.min() >= 0.0:
        out = clamp_density(out, "apply_R")
    return Field1D(f.grid, out)


def _table_profile(x: np.ndarray, phi: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    from scipy.interpolate import CubicSpline

    spl = CubicSpline(x, phi, extrapolate=False)

    def profile(d):
        out = spl(d)
        return np.where(np.isfinite(out), np.maximum(out, 0.0), 0.0)

    return profile


def make_R(phi: Field1D, half_width: float | None = None) -> MollifierKernel:
    """Validate a sampled mollifier and build the kernel carrying R = phi*phi.

    Checks the profile invariants: nonnegative, even about 0, unit mass
    within 1e-12 (trapezoid), supported inside [-half_width, half_width]
    up to 1e-14.
    """
    v = phi.values
    x = phi.grid.nodes()
    if v.min() < 0:
        raise ConfigError("mollifier must be nonnegative")
    # even about 0 on the periodic grid: value at x_j matches value at -x_j
    if not np.allclose(v[1:], v[:0:-1], atol=_EVEN_TOL * max(1.0, v.max()), rtol=0.0):
        raise ConfigError("mollifier must be even about 0")
    mass = v.sum() * phi.grid.dx
    if abs(mass - 1.0) > 1e-12:
        raise ConfigError(f"mollifier mass {mass!r} is not 1 within 1e-12")
    if half_width is None:
        supp = np.abs(x[np.abs(v) > 1e-14])
        half_width = float(supp.max()) + phi.grid.dx if supp.size else phi.grid.dx
    else:
        beyond = np.abs(x) > half_width
        if np.any(np.abs(v[beyond]) > 1e-14):
            raise ConfigError("mollifier has support outside [-half_width, half_width]")
    return MollifierKernel(_table_profile(x, v), half_width, phi=phi)


def tophat_kernel(width: float) -> MollifierKernel:
    """Indicator mollifier of total width ``width`` (unit mass)."""
    if width <= 0:
        raise ConfigError("tophat width must be positive")
    h = 0.5 * width

    def profile(d):
        return np.where(np.abs(d) <= h, 1.0 / width, 0.0)

    return MollifierKernel(profile, h)


def gaussian_kernel(sigma: float) -> MollifierKernel:
    """Gaussian mollifier of standard deviation ``sigma``, truncated at 8.5 sigma."""
    if sigma <= 0:
        raise ConfigError("gaussian width must be positive")
    c = 1.0 / (sigma * np.sqrt(2.0 * np.pi))

    def profile(d):
        return c * np.exp(-0.5 * (d / sigma) ** 2)

    return MollifierKernel(profile, 8.5 * sigma)


def kernel_from_config(cfg: dict):
    """Build a kernel from config keys ``type`` in {delta,tophat,gaussian,file},
    ``width``, ``file`` (CSV with header x,phi)."""
    ktype = cfg.get("type", "delta")
    if ktype == "delta":
        return DeltaKernel()
    if ktype == "tophat":
        return tophat_kernel(float(cfg.get("width", 1.0)))
    if ktype == "gaussian":
        return gaussian_kernel(float(cfg.get("width", 0.5)))
    if ktype == "file":
        path = cfg.get("file")
        if not path:
            raise ConfigError("kernel.type=file requires kernel.file")
        data = np.genfromtxt(path, delimiter=",", names=True)
        x = np.asarray(data["x"], dtype=float)
        phi = np.maximum(np.asarray(data["phi"], dtype=float), 0.0)
        mass = np.trapezoid(phi, x)
        if mass <= 0:
            raise ConfigError(f"kernel table {path} has nonpositive mass")
        phi = phi / mass
        hw = float(np.abs(x[phi > 1e-14]).max())
        return MollifierKernel(_table_profile(x, phi), hw + (x[1] - x[0]))
    raise ConfigError(f"unknown kernel.type {ktype!r}")
