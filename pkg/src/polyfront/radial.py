"""Radially symmetric parabolic stepping in d >= 2 dimensions.

All problems share one linear operator

    L = (1/2) Lap + (r/2) d/dr + kappa

with Dirichlet data at r_max and even symmetry at the origin.  The
drift-diffusion part is assembled in conservative flux form,

    (1/2) Lap G + (r/2) G' + (d/2) G = r^(1-d) d/dr[ r^(d-1) (G'/2 + r G / 2) ],

so with the matching finite-volume quadrature (node 0 owns the ball of
radius dr/2) the discrete mass change telescopes exactly to the boundary
flux; the diagonal then carries kappa - d/2.  The implicit part is a
theta-scheme (theta = 1/2 Crank-Nicolson for time-accurate runs; the
steady-state relaxation passes theta = 1, whose fixed point solves the
discrete elliptic problem exactly and whose inverse is an M-matrix, so
order is preserved step by step).

Reactions are explicit: ``frozen_E`` uses (1 + E - H) H, ``coupled`` uses
pref(tau) G (|G|_2^2 - G) with pref = exp(-(d-2) tau / 2).  The coupled
coefficient is normalized by the mass for the same stability reason as in
the 1d solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import (RadialField, RadialGrid, clamp_density,
                   radial_quadrature_weights, surface_area)
from .errors import ConfigError, NumericalFailureError

REACTION_CFL = 0.2


def radial_laplacian(f: RadialField, d: int | None = None) -> RadialField:
    """Discrete Laplacian of a radial profile: f'' + (d-1)/r f'.

    Uses centered differences in the interior, the symmetry ghost node at
    the origin (Lap f(0) = 2 d (f(dr) - f(0)) / dr^2), and one-sided
    second-order stencils at r_max.
    """
    g = f.grid
    d = g.dim if d is None else d
    v = f.values
    n, dr = g.n, g.dr
    if n < 3:
        raise ConfigError("radial_laplacian needs at least 3 nodes")
    r = g.nodes()
    out = np.empty_like(v)
    out[0] = 2.0 * d * (v[1] - v[0]) / dr ** 2
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dr ** 2
    d1 = (v[2:] - v[:-2]) / (2.0 * dr)
    out[1:-1] = d2 + (d - 1) / r[1:-1] * d1
    d2_end = (v[-1] - 2.0 * v[-2] + v[-3]) / dr ** 2
    d1_end = (1.5 * v[-1] - 2.0 * v[-2] + 0.5 * v[-3]) / dr
    out[-1] = d2_end + (d - 1) / r[-1] * d1_end
    return RadialField(g, out)


@dataclass
class RadialProblem:
    """Problem description: dimension, grid, zeroth-order term, reaction form.

    ``kappa`` is the coefficient of the zeroth-order linear term beyond
    (1/2) Lap + (r/2) d/dr: d/2 for the self-similar evolution, 0 for the
    localized steady problem whose (1+E) sits inside the reaction.
    """

    grid: RadialGrid
    kappa: float
    reaction: str = "none"           # none | frozen_E | coupled
    E: float = 0.0                   # frozen-E coefficient
    nonlinearity_enabled: bool = True

    def __post_init__(self):
        if self.reaction not in ("none", "frozen_E", "coupled"):
            raise ConfigError(f"unknown reaction {self.reaction!r}")


class RadialOperator:
    """Tridiagonal flux-form assembly of L = (1/2)Lap + (r/2)d/dr + kappa."""

    def __init__(self, grid: RadialGrid, kappa: float):
        d, n, dr = grid.dim, grid.n, grid.dr
        self.grid = grid
        self.kappa = kappa
        kx = kappa - 0.5 * d  # flux divergence already supplies +d/2
        r = grid.nodes()
        rh = dr * (np.arange(n) + 0.5)
        rhw = rh ** (d - 1)
        lo = np.zeros(n)
        di = np.zeros(n)
        up = np.zeros(n)
        # origin cell: ball of radius dr/2
        di[0] = (2.0 * d / dr) * (-0.5 / dr + dr / 8.0) + kx
        up[0] = (2.0 * d / dr) * (0.5 / dr + dr / 8.0)
        i = np.arange(1, n)
        geom = 1.0 / (r[i] ** (d - 1) * dr)
        up[i] = geom * rhw[i] * (0.5 / dr + rh[i] / 4.0)
        lo[i] = geom * rhw[i - 1] * (0.5 / dr - rh[i - 1] / 4.0)
        di[i] = geom * (rhw[i] * (-0.5 / dr + rh[i] / 4.0)
                        + rhw[i - 1] * (-0.5 / dr - rh[i - 1] / 4.0)) + kx
        if lo.min() < 0.0:
            raise ConfigError(
                "flux-form off-diagonal went negative (r_max too large for this dr); "
                "refine the radial grid")
        self.lo, self.di, self.up = lo, di, up
        self._rh_outer = rhw[-1]
        self._sd = surface_area(d)
        self.weights = radial_quadrature_weights(grid)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """A v for the n interior unknowns (v has n+1 entries, v[n] used as data)."""
        n = self.grid.n
        out = self.di * v[:n]
        out[:-1] += self.up[:-1] * v[1:n]
        out[-1] += self.up[-1] * v[n]
        out[1:] += self.lo[1:] * v[:n - 1]
        return out

    def banded(self, coef: float) -> np.ndarray:
        """Banded form of (I - coef * A) for solve_banded."""
        n = self.grid.n
        ab = np.zeros((3, n))
        ab[0, 1:] = -coef * self.up[:-1]
        ab[1, :] = 1.0 - coef * self.di
        ab[2, :-1] = -coef * self.lo[1:]
        return ab

    def boundary_flux_term(self, v: np.ndarray) -> float:
        """Outward mass flux through r_max of the flux-form operator.

        At a steady state this equals l2sq - E*mass exactly (the discrete
        divergence identity), which is why the E-versus-energy gap is
        evaluated here instead of by cancelling two O(1) numbers.
        """
        n, dr = self.grid.n, self.grid.dr
        rh = dr * (n - 0.5)
        flux = self._rh_outer * (0.5 * (v[n] - v[n - 1]) / dr
                                 + 0.25 * rh * (v[n - 1] + v[n]))
        return float(self._sd * flux)

    def linear_mass_rate(self, v: np.ndarray) -> float:
        """d(mass)/dt from the linear operator: boundary flux + kappa_extra part."""
        kx = self.kappa - 0.5 * self.grid.dim
        return self.boundary_flux_term(v) + kx * float(np.dot(self.weights, v))


def reaction_term(problem: RadialProblem, op: RadialOperator, v: np.ndarray,
                  tau: float):
    """Pointwise reaction f(v) at time tau for the configured variant."""
    if problem.reaction == "none" or not problem.nonlinearity_enabled:
        return np.zeros_like(v)
    if problem.reaction == "frozen_E":
        return (1.0 + problem.E - v) * v
    d = problem.grid.dim
    pref = np.exp(-0.5 * (d - 2) * tau)
    w = op.weights
    m = float(np.dot(w, v))
    l2 = float(np.dot(w, v * v))
    return pref * v * (l2 / m - v)


def reaction_cfl(problem: RadialProblem, v: np.ndarray, tau: float) -> float:
    """Largest dt honoring dt <= 0.2 / max |reaction coefficient|."""
    if problem.reaction == "none" or not problem.nonlinearity_enabled:
        return np.inf
    if problem.reaction == "frozen_E":
        coeff = abs(1.0 + problem.E) + abs(v.max())
    else:
        d = problem.grid.dim
        w = problem_weights = radial_quadrature_weights(problem.grid)
        l2 = float(np.dot(problem_weights, v * v))
        coeff = np.exp(-0.5 * (d - 2) * tau) * (l2 + abs(v.max()))
    return REACTION_CFL / max(coeff, 1e-300)


def _react_rk2(problem, op, v, tau, h):
    """Explicit midpoint integration of the reaction alone over a time h."""
    f0 = reaction_term(problem, op, v, tau)
    vm = v + 0.5 * h * f0
    return v + h * reaction_term(problem, op, vm, tau + 0.5 * h)


def step_radial(problem: RadialProblem, state: RadialField, tau: float, dt: float,
                theta: float = 0.5, reaction_scheme: str = "midpoint",
                op: RadialOperator | None = None) -> RadialField:
    """One IMEX step: theta-scheme linear part, explicit reaction.

    ``midpoint`` wraps the linear solve in two explicit-midpoint reaction
    half-steps (Strang arrangement, second order with theta = 1/2);
    ``euler`` adds a single reaction evaluation to the implicit update, so
    the scheme's fixed point solves the discrete elliptic problem exactly
    (used by the steady-state relaxation with theta = 1).
    """
    if op is None:
        op = RadialOperator(problem.grid, problem.kappa)
    v = state.values
    n = problem.grid.n
    if reaction_scheme == "midpoint":
        v1 = _react_rk2(problem, op, v, tau, 0.5 * dt)
        rhs = v1[:n]
        if theta < 1.0:
            rhs = rhs + (1.0 - theta) * dt * op.apply(v1)
        mid = np.empty_like(v)
        mid[:n] = solve_banded((1, 1), op.banded(theta * dt), rhs)
        mid[n] = 0.0
        out = _react_rk2(problem, op, mid, tau + 0.5 * dt, 0.5 * dt)
    elif reaction_scheme == "euler":
        term = reaction_term(problem, op, v, tau)
        rhs = v[:n] + dt * term[:n]
        if theta < 1.0:
            rhs = rhs + (1.0 - theta) * dt * op.apply(v)
        out = np.empty_like(v)
        out[:n] = solve_banded((1, 1), op.banded(theta * dt), rhs)
        out[n] = 0.0
    else:
        raise ConfigError(f"unknown reaction scheme {reaction_scheme!r}")
    out = clamp_density(out, "step_radial")
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError("radial step produced non-finite values")
    return RadialField(problem.grid, out)


def evolve_radial(problem: RadialProblem, G0: RadialField, tau_max: float,
                  dt: float, theta: float = 0.5, tau0: float = 0.0,
                  observer=None, observe_dtau: float = 0.05) -> RadialField:
    """March the radial problem to tau_max with a fixed step, calling
    ``observer(tau, values)`` on a uniform schedule (and at the endpoints)."""
    op = RadialOperator(problem.grid, problem.kappa)
    G = G0
    tau = tau0
    if observer is not None:
        observer(tau, G.values)
    next_obs = tau0 + observe_dtau
    while tau < tau_max - 1e-12:
        h = min(dt, tau_max - tau)
        cfl = reaction_cfl(problem, G.values, tau)
        if h > cfl:
            h = cfl
        G = step_radial(problem, G, tau, h, theta=theta, op=op)
        tau += h
        if observer is not None and (tau >= next_obs - 1e-12 or tau >= tau_max - 1e-12):
            observer(tau, G.values)
            while next_obs <= tau + 1e-12:
                next_obs += observe_dtau
    return G
