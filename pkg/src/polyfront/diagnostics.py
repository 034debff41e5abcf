"""Derived scalar quantities, inequality checks, and least-squares fits.

E, D and M are the kernel-weighted energy <f, R*f>, its gradient analogue
<grad f, grad R*f>, and the sup norm.  For the delta kernel they reduce to
the squared L2 norms of f and f'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .convolve import apply_R
from .core import Field1D, RadialField, ball_volume, integrate, surface_area
from .errors import ConfigError, DomainOverflowError, NumericalFailureError

MONOTONE_TOL = 1e-10  # detection tolerance for the radially-decreasing precondition


@dataclass
class MacroRecord:
    """One row of a trajectory: macroscopic state of a density at time t."""

    t: float
    tau: float
    mass: float
    E: float
    D: float
    M: float
    l2sq: float
    m1: float
    m2: float
    m4: float
    front_left: float
    front_right: float
    # secondary diagnostics (not part of the trajectory CSV schema)
    react_sq: float = math.nan     # integral of g (R*g - E)^2
    gauss_env_A: float = math.nan  # minimal admissible Gaussian-envelope constant
    nash: float = math.nan
    young_wu: float = math.nan     # max(R*g) - max(phi*g)  (<= 0 expected)
    young_ug: float = math.nan     # max(phi*g) - max(g)    (<= 0 expected)
    holder_low_margin: float = math.nan  # slack of the interior lower bound
    holder_up_margin: float = math.nan   # slack of the tail upper bound

    def __post_init__(self):
        if self.E > self.M + 1e-12 * max(1.0, self.M):
            raise NumericalFailureError(f"E={self.E!r} exceeds M={self.M!r} at t={self.t}")
        if self.E > self.l2sq + 1e-12 * max(1.0, self.l2sq):
            raise NumericalFailureError(f"E={self.E!r} exceeds |f|_2^2={self.l2sq!r} at t={self.t}")

    @staticmethod
    def csv_columns() -> list:
        return ["t", "mass", "E", "D", "M", "l2sq", "m1", "m2", "m4",
                "front_left", "front_right"]

    @staticmethod
    def extra_columns() -> list:
        return [f.name for f in fields(MacroRecord)
                if f.name not in MacroRecord.csv_columns()]


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    # run-level monitors
    max_step_E_increase: float = 0.0
    max_step_M_increase: float = 0.0
    min_density_seen: float = 0.0
    max_step_mass_drift: float = 0.0
    regrid_count: int = 0
    m_sign_changes: int = 0  # steps where the sup norm increased beyond tolerance

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def l2sq(f) -> float:
    """Squared L2 norm by the field's quadrature rule."""
    if isinstance(f, Field1D):
        return float((f.values ** 2).sum() * f.grid.dx)
    sq = f.with_values(f.values ** 2)
    return integrate(sq)


def macros(f: Field1D, kernel) -> tuple:
    """(E, D, M): kernel energy by quadrature of f*(R*f), D via Fourier, M grid max."""
    v = f.values
    dx = f.grid.dx
    w = apply_R(f, kernel).values
    E = float(np.dot(v, w) * dx)
    fhat2 = np.abs(np.fft.rfft(v)) ** 2
    kap = 2.0 * np.pi * np.fft.rfftfreq(f.grid.n, d=dx)
    rt = kernel.r_transfer(f.grid)
    weights = np.full(fhat2.shape, 2.0)
    weights[0] = 1.0
    if f.grid.n % 2 == 0:
        weights[-1] = 1.0
    D = float((weights * kap ** 2 * fhat2 * rt).sum() * dx / f.grid.n)
    M = float(v.max())
    return E, D, M


def reaction_variance(f: Field1D, kernel, E: float | None = None) -> float:
    """Integral of f * (R*f - E)^2, the dissipation term of the energy identity."""
    w = apply_R(f, kernel).values
    if E is None:
        E = float(np.dot(f.values, w) * f.grid.dx)
    return float(np.dot(f.values, (w - E) ** 2) * f.grid.dx)


def moments(f, ps) -> list:
    """Absolute moments m_p = integral |x|^p f for each p in ps."""
    if isinstance(f, Field1D):
        v = f.values
        if max(abs(v[0]), abs(v[-1])) > 1e-13:
            raise DomainOverflowError("field does not decay below 1e-13 at the boundary")
        x = np.abs(f.grid.nodes())
        dxw = f.grid.dx
        return [float((x ** p * v).sum() * dxw) for p in ps]
    g = f.grid
    if abs(f.values[-1]) > 1e-13:
        raise DomainOverflowError("radial field does not decay below 1e-13 at r_max")
    r = g.nodes()
    w = surface_area(g.dim) * r ** (g.dim - 1) * g.dr
    w[0] *= 0.5
    w[-1] *= 0.5
    return [float((r ** p * w * f.values).sum()) for p in ps]


def front_crossings(x: np.ndarray, v: np.ndarray, level: float):
    """Leftmost and rightmost crossings of v through ``level`` (linear interpolation).

    Returns (left, right) or None when the level is never attained.
    """
    if not 0.0 < level < v.max():
        return None
    above = v >= level
    idx = np.nonzero(above[:-1] != above[1:])[0]
    if idx.size == 0:
        return None
    xs = []
    for i in idx:
        t = (level - v[i]) / (v[i + 1] - v[i])
        xs.append(x[i] + t * (x[i + 1] - x[i]))
    return (min(xs), max(xs))


def fit_exponent(t, y, window=None) -> tuple:
    """Least-squares slope of log y versus log t, with its standard error."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if window is not None:
        m = (t >= window[0]) & (t <= window[1])
        t, y = t[m], y[m]
    if t.size < 10:
        raise ConfigError(f"need at least 10 points in the fit window, got {t.size}")
    if np.any(y <= 0) or np.any(t <= 0):
        raise ConfigError("fit_exponent requires positive t and y")
    lx, ly = np.log(t), np.log(y)
    lx0 = lx - lx.mean()
    sxx = float((lx0 ** 2).sum())
    slope = float((lx0 * ly).sum() / sxx)
    resid = ly - ly.mean() - slope * lx0
    dof = max(t.size - 2, 1)
    stderr = float(np.sqrt((resid ** 2).sum() / dof / sxx))
    return slope, stderr


def _ball_mass_1d_section(f: Field1D, r: float, d: int) -> float:
    """Integral over the d-ball of radius r of the even profile sampled by f."""
    x = f.grid.nodes()
    if d == 1:
        m = np.abs(x) <= r
        return float(f.values[m].sum() * f.grid.dx)
    m = (x >= 0) & (x <= r)
    w = surface_area(d) * x[m] ** (d - 1) * f.grid.dx
    return float((w * f.values[m]).sum())


def check_symmetric_decreasing(f: Field1D, tol: float = MONOTONE_TOL) -> bool:
    """True when f is even about 0 and nonincreasing in |x| within tolerance."""
    v = f.values
    scale = max(v.max(), 1e-300)
    if not np.allclose(v[1:], v[:0:-1], atol=1e-9 * scale, rtol=0.0):
        return False
    x = f.grid.nodes()
    right = v[x >= 0]
    return bool(np.all(np.diff(right) <= tol * scale))


def holder_bounds(f: Field1D, r: float, x0: float, d: int = 1) -> float:
    """Pointwise bound from the stability of Holder's inequality.

    For |x0| < r returns a lower bound for f(x0); for |x0| > r an upper
    bound: f decays like the leftover mass spread over the shell.
    Requires f even, radially nonincreasing, unit mass.
    """
    if not check_symmetric_decreasing(f):
        raise ConfigError("holder_bounds requires an even, radially decreasing field")
    mass = _ball_mass_1d_section(f, np.inf, d)
    if abs(mass - 1.0) > 1e-6:
        raise ConfigError(f"holder_bounds requires unit mass, got {mass!r}")
    br = _ball_mass_1d_section(f, r, d)
    if abs(x0) < r:
        if not br < 1.0:
            raise ConfigError("case (i) requires ball mass < 1")
        M = float(f.values.max())
        E = _ball_mass_1d_section(f.with_values(f.values ** 2), np.inf, d)
        return M * (E / M - br) / (1.0 - br)
    if abs(x0) > r:
        wd = ball_volume(d)
        return (1.0 - br) / (wd * (abs(x0) ** d - r ** d))
    raise ConfigError("x0 must not sit exactly on the ball boundary")


def value_at(f: Field1D, x0: float) -> float:
    """Linear interpolation of the field at x0."""
    return float(np.interp(x0, f.grid.nodes(), f.values))


def holder_margins(f: Field1D, d: int = 1):
    """Worst slack of the Holder-stability bounds at quantile test points.

    Returns (lower_margin, upper_margin) with nonnegative values meaning
    the bounds hold: f(x0) - bound for the interior case at x0 = r/2, and
    bound - f(x0) for the tail case at x0 = 2r, minimized over the mass
    quantiles {0.25, 0.5, 0.75} defining r.  Returns None when the field
    is not symmetric-decreasing within tolerance (check skipped).
    """
    if not check_symmetric_decreasing(f):
        return None
    x = f.grid.nodes()
    dxw = f.grid.dx
    order = np.argsort(np.abs(x), kind="stable")
    cum = np.cumsum(f.values[order] * dxw)
    total = cum[-1]
    low, up = math.inf, math.inf
    for q in (0.25, 0.5, 0.75):
        k = int(np.searchsorted(cum, q * total))
        r = abs(x[order[min(k, len(x) - 1)]])
        if r <= 2 * dxw:
            continue
        try:
            lb = holder_bounds(f, r, 0.5 * r, d)
            low = min(low, value_at(f, 0.5 * r) - lb)
            ub = holder_bounds(f, r, 2.0 * r, d)
            up = min(up, ub - value_at(f, 2.0 * r))
        except ConfigError:
            continue
    if not math.isfinite(low) or not math.isfinite(up):
        return None
    return low, up


def nash_ratio(f, kernel, d: int | None = None) -> float:
    """Scale-invariant ratio E^(1+2/d) / (|f|_1^(4/d) D)."""
    if isinstance(f, Field1D):
        d = 1 if d is None else d
        E, D, _ = macros(f, kernel)
        l1 = float(np.abs(f.values).sum() * f.grid.dx)
    else:
        if not kernel.is_delta:
            raise ConfigError("radial Nash ratio supports the delta kernel only")
        d = f.grid.dim if d is None else d
        E = l2sq(f)
        dv = np.gradient(f.values, f.grid.dr)
        D = integrate(f.with_values(dv ** 2))
        l1 = integrate(f.with_values(np.abs(f.values)))
    if D <= 0:
        raise ConfigError("Nash ratio is degenerate: D = 0 (constant field)")
    return float(E ** (1.0 + 2.0 / d) / (l1 ** (4.0 / d) * D))


def min_gaussian_envelope_A(f: Field1D, t: float, a_max: float = 100.0) -> float:
    """Smallest A with f(x) <= A (t+1)^(-1/2) exp(-x^2/(A(t+1))) at all nodes.

    The bound is pointwise increasing in A, so bisection applies.  Returns
    inf when even a_max does not dominate the field.
    """
    x2 = f.grid.nodes() ** 2
    v = f.values
    tp = t + 1.0

    def admissible(a):
        return bool(np.all(v <= a / np.sqrt(tp) * np.exp(-x2 / (a * tp)) + 1e-300))

    if not admissible(a_max):
        return math.inf
    lo, hi = 1e-6, a_max
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def young_maxima(g: Field1D, kernel) -> tuple:
    """(max R*g, max phi*g, max g): ordered nondecreasing for nonneg g."""
    from .convolve import convolve

    u = convolve(g, kernel)
    w = convolve(u, kernel)
    return float(w.values.max()), float(u.values.max()), float(g.values.max())


def energy_identity_residual(records: list) -> list:
    """Relative residual of dE/dt + D + 2*int g(R*g-E)^2 = 0 at interior snapshots.

    Centered differences in t; normalization |D| + E^2.  Returns a list of
    (t, residual) pairs.
    """
    if len(records) < 3:
        raise ConfigError("need at least 3 consecutive snapshots")
    out = []
    for i in range(1, len(records) - 1):
        a, b, c = records[i - 1], records[i], records[i + 1]
        dEdt = (c.E - a.E) / (c.t - a.t)
        if math.isnan(b.react_sq):
            raise ConfigError("records lack the reaction variance diagnostic")
        resid = dEdt + b.D + 2.0 * b.react_sq
        denom = abs(b.D) + b.E ** 2
        out.append((b.t, abs(resid) / denom))
    return out
