import math

import numpy as np
import pytest

from polyfront import RadialField, RadialGrid
from polyfront.core import radial_quadrature_weights
from polyfront.errors import ConfigError
from polyfront.steady2d import (build_cutoff, build_subsolution, decay_envelope_ok,
                                find_E, gaussian_distance, relax)

# unit tests run on a coarser grid than the production sweep for speed
N_TEST = 1000


class TestCutoff:
    def test_reference_values(self):
        cut = build_cutoff(12.0)
        r = np.array([0.0, 4.0, 8.0, 12.0])
        vals = cut(r)
        assert vals[0] == 1.0
        assert vals[1] == 1.0
        assert vals[2] == pytest.approx(0.5, abs=1e-12)
        assert vals[3] == 0.0

    def test_middle_constraints(self):
        cut = build_cutoff(12.0)
        r = np.linspace(4.0, 8.0, 2000)
        assert cut(r).min() >= 0.5 - 1e-12
        assert cut.second_deriv(r).min() >= -20.0 / 144.0 - 1e-12

    def test_outer_constraints(self):
        cut = build_cutoff(12.0)
        r = np.linspace(8.0, 12.0, 2000)
        assert cut.second_deriv(r).min() >= 2.0 / 144.0 - 1e-12

    def test_radius_too_small(self):
        with pytest.raises(ConfigError):
            build_cutoff(3.0)


class TestSubsolution:
    def test_center_value(self):
        g = build_subsolution(1.0, 20.0)
        assert g.values[0] == 0.5
        assert g.values[-1] == 0.0

    def test_core_mass_lower_bound(self):
        # the flat-cutoff core alone contributes pi E (1 - e^(-R^2/18))
        g = build_subsolution(1.0, 20.0)
        w = radial_quadrature_weights(g.grid)
        mass = float(np.dot(w, g.values))
        lower = math.pi * (1.0 - math.exp(-400.0 / 18.0))
        assert mass >= lower - 1e-3
        assert mass == pytest.approx(math.pi, abs=0.05)  # slightly larger than the core

    def test_radius_condition(self):
        with pytest.raises(ConfigError):
            build_subsolution(1.0, 10.0)  # needs R >= 20
        with pytest.raises(ConfigError):
            build_subsolution(0.04, 20.0)  # needs R >= 100


class TestRelax:
    def test_basic_outcome(self):
        out = relax(0.25, 20.0, grid=RadialGrid(2, 20.0, N_TEST))
        assert 0.0 <= out.G.values.min()
        assert out.G.values.max() < 1.25
        assert out.residual < 1e-8
        assert out.mass > 0.25  # integral of the steady profile exceeds ~E

    def test_monotone_from_subsolution(self):
        out = relax(0.25, 20.0, grid=RadialGrid(2, 20.0, N_TEST))
        assert out.min_step_increase >= -1e-12

    def test_boundary_identity(self):
        out = relax(0.5, 20.0, grid=RadialGrid(2, 20.0, N_TEST))
        lhs = out.boundary_flux
        rhs = out.E * out.mass - out.l2sq
        assert abs(lhs - rhs) < 1e-4 * max(1.0, out.E * out.mass)

    def test_uniqueness_of_the_steady_state(self):
        grid = RadialGrid(2, 20.0, N_TEST)
        a = relax(0.3, 20.0, grid=grid)
        shrunk = RadialField(grid, 0.9 * a.G.values)
        b = relax(0.3, 20.0, grid=grid, init=shrunk)
        assert np.abs(a.G.values - b.G.values).max() < 1e-6

    def test_monotone_in_E(self):
        grid = RadialGrid(2, 20.0, N_TEST)
        a = relax(0.2, 20.0, grid=grid)
        b = relax(0.3, 20.0, grid=grid)
        assert np.all(b.G.values >= a.G.values - 1e-8)
        assert b.mass > a.mass

    def test_decay_envelope(self):
        out = relax(0.25, 20.0, grid=RadialGrid(2, 20.0, N_TEST))
        assert decay_envelope_ok(out)


class TestFindE:
    def test_unit_mass_and_self_consistency(self):
        e_star, out = find_E(20.0, grid=RadialGrid(2, 20.0, N_TEST))
        assert abs(out.mass - 1.0) < 1e-8
        # at unit mass the flux identity forces E = |G|_2^2 to solver precision
        assert out.gap < 1e-8
        assert out.gap_raw < 1e-8
        assert 0.01 < e_star < 1.0
        assert out.min_step_increase >= -1e-12

    def test_requires_large_radius(self):
        with pytest.raises(ConfigError):
            find_E(10.0)


class TestGaussianDistance:
    def _gaussian(self, s2, grid):
        r = grid.nodes()
        return RadialField(grid, np.exp(-r ** 2 / (2 * s2)) / (2 * math.pi * s2))

    def test_exact_gaussian_sigma1(self):
        grid = RadialGrid(2, 16.0, 16000)
        sigma, dist = gaussian_distance(self._gaussian(1.0, grid))
        assert dist < 1e-8
        assert sigma == pytest.approx(1.0, abs=1e-4)

    def test_exact_gaussian_sigma2(self):
        grid = RadialGrid(2, 24.0, 24000)
        sigma, dist = gaussian_distance(self._gaussian(4.0, grid))
        assert sigma == pytest.approx(2.0, abs=1e-3)
        assert dist < 1e-8

    def test_mass_precondition(self):
        grid = RadialGrid(2, 16.0, 16000)
        f = self._gaussian(1.0, grid)
        with pytest.raises(ConfigError):
            gaussian_distance(RadialField(grid, 1.5 * f.values))
