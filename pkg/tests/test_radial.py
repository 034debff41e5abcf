import numpy as np
import pytest

from polyfront import RadialField, RadialGrid
from polyfront.core import radial_quadrature_weights
from polyfront.errors import ConfigError
from polyfront.gaussconv import psi0_field
from polyfront.radial import (RadialOperator, RadialProblem, evolve_radial,
                              radial_laplacian, step_radial)


class TestRadialLaplacian:
    def test_quadratic(self):
        grid = RadialGrid(2, 4.0, 512)
        f = RadialField(grid, grid.nodes() ** 2)
        lap = radial_laplacian(f).values
        assert np.abs(lap - 4.0).max() < 1e-8

    def test_quadratic_3d(self):
        grid = RadialGrid(3, 4.0, 512)
        f = RadialField(grid, grid.nodes() ** 2)
        assert np.abs(radial_laplacian(f).values - 6.0).max() < 1e-8

    def test_gaussian_at_origin(self):
        grid = RadialGrid(2, 4.0, 4096)
        f = RadialField(grid, np.exp(-0.5 * grid.nodes() ** 2))
        lap = radial_laplacian(f).values
        # Lap e^(-r^2/2) = (r^2 - d) e^(-r^2/2) -> -2 at the origin in d=2
        assert lap[0] == pytest.approx(-2.0, abs=1e-6)

    def test_constant(self):
        grid = RadialGrid(2, 4.0, 128)
        f = RadialField(grid, np.ones(129))
        assert np.abs(radial_laplacian(f).values).max() < 1e-10


class TestStepRadial:
    def test_zero_is_fixed_point(self):
        grid = RadialGrid(2, 10.0, 500)
        problem = RadialProblem(grid=grid, kappa=0.0, reaction="frozen_E", E=1.0)
        z = RadialField(grid, np.zeros(501))
        out = step_radial(problem, z, 0.0, 0.05)
        assert np.abs(out.values).max() == 0.0

    def test_ou_ground_state_nearly_stationary(self):
        # psi0^2 is the invariant density of the linear Fokker-Planck part
        grid = RadialGrid(3, 12.0, 1200)
        problem = RadialProblem(grid=grid, kappa=1.5, reaction="coupled",
                                nonlinearity_enabled=False)
        g0 = psi0_field(grid)
        start = RadialField(grid, g0.values ** 2)
        out = evolve_radial(problem, start, tau_max=1.0, dt=0.01)
        assert np.abs(out.values - start.values).max() < 1e-3

    def test_mass_drift_per_step(self):
        grid = RadialGrid(3, 12.0, 1200)
        problem = RadialProblem(grid=grid, kappa=1.5, reaction="coupled")
        w = radial_quadrature_weights(grid)
        v = np.exp(-0.5 * grid.nodes() ** 2)
        v /= np.dot(w, v)
        state = RadialField(grid, v)
        for _ in range(5):
            before = float(np.dot(w, state.values))
            state = step_radial(problem, state, 0.3, 0.01)
            after = float(np.dot(w, state.values))
            assert abs(after - before) < 1e-10 * before

    def test_richardson_second_order(self):
        # frozen-E relaxation transient on smooth data: halving (dr, dt)
        # must cut the error by about 4
        def solve(n, dt):
            grid = RadialGrid(2, 8.0, n)
            problem = RadialProblem(grid=grid, kappa=0.0, reaction="frozen_E", E=0.5)
            v = 0.25 * np.exp(-0.5 * grid.nodes() ** 2)
            v[-1] = 0.0
            out = evolve_radial(problem, RadialField(grid, v), tau_max=0.5, dt=dt)
            return out.values

        coarse = solve(200, 0.02)
        mid = solve(400, 0.01)
        fine = solve(1600, 0.0025)
        e1 = np.abs(coarse - fine[::8]).max()
        e2 = np.abs(mid - fine[::4]).max()
        assert e1 / e2 == pytest.approx(4.0, rel=0.35)

    def test_m_matrix_guard(self):
        grid = RadialGrid(2, 50.0, 1000)  # dr = 0.05, r_max = 50 > 2/dr
        with pytest.raises(ConfigError):
            RadialOperator(grid, kappa=0.0)

    def test_unknown_reaction(self):
        grid = RadialGrid(2, 10.0, 200)
        with pytest.raises(ConfigError):
            RadialProblem(grid=grid, kappa=0.0, reaction="cubic")
