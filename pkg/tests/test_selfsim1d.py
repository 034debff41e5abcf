import numpy as np
import pytest

from polyfront import Field1D, UniformGrid1D, constants, integrate
from polyfront.errors import ConfigError, DomainOverflowError
from polyfront.evolve1d import EvolveConfig, run
from polyfront.selfsim1d import (HConfig, RescaledFrame, front_position, solve_h,
                                 to_G, to_h, to_uc)

C = constants()


def scaled_indicator(t, grid):
    """theta t^(-2/3) indicator(|x| <= c t^(2/3)): the long-time limit shape."""
    x = grid.nodes()
    s = t ** (2.0 / 3.0)
    v = np.where(np.abs(x) <= C.c_crit * s, C.theta_crit / s, 0.0)
    return Field1D(grid, v / (v.sum() * grid.dx))


def smooth_density(grid, width=2.5):
    """Compactly supported smooth bump on [-width, width]."""
    x = grid.nodes()
    v = np.where(np.abs(x) < width, (1.0 - (x / width) ** 2) ** 3, 0.0)
    v = v * (1.0 + 0.3 * np.cos(x))
    return Field1D(grid, v / (v.sum() * grid.dx))


class TestToH:
    def test_identity_at_t1(self):
        grid = UniformGrid1D(-20.0, 20.0, 4096)
        g = smooth_density(grid)
        frame = to_h(g, 1.0)
        assert frame.tau == 0.0
        y = frame.h.grid.nodes()
        exact = np.interp(y, grid.nodes(), g.values)
        assert np.abs(frame.h.values - exact).max() < 1e-4

    def test_limit_profile_maps_to_unit_scale(self):
        t = 1000.0
        grid = UniformGrid1D(-2000.0, 2000.0, 2 ** 15)
        g = scaled_indicator(t, grid)
        frame = to_h(g, t, mass_tol=1e-2)  # jump data: quantization noise in the mass
        y = frame.h.grid.nodes()
        interior = np.abs(y) < 0.9 * C.c_crit
        outside = np.abs(y) > 1.1 * C.c_crit
        assert np.abs(frame.h.values[interior] - C.theta_crit).max() < 2e-3
        assert frame.h.values[outside].max() < 1e-10

    def test_mass_preserved(self):
        grid = UniformGrid1D(-30.0, 30.0, 8192)
        g = smooth_density(grid, width=7.0)
        frame = to_h(g, 8.0)  # support/(tau+1)^2 = 7/4 well inside the y-grid
        assert abs(integrate(frame.h) - integrate(g)) < 1e-8

    def test_requires_t_at_least_one(self):
        grid = UniformGrid1D(-20.0, 20.0, 4096)
        with pytest.raises(ConfigError):
            to_h(smooth_density(grid), 0.5)

    def test_support_escaping_grid_rejected(self):
        grid = UniformGrid1D(-40.0, 40.0, 8192)
        g = smooth_density(grid, width=8.0)
        with pytest.raises(DomainOverflowError):
            to_h(g, 1.0)  # y-grid [-3,3] misses support at t=1


class TestToUc:
    def _frame(self, tau=3.0):
        ygrid = UniformGrid1D(-3.0, 3.0, 4096)
        y = ygrid.nodes()
        h = np.exp(-2.0 * y ** 2)
        return RescaledFrame(tau, Field1D(ygrid, h))

    def test_center_value(self):
        frame = self._frame()
        z_grid = UniformGrid1D(-1.0, 1.0, 128)
        u = to_uc(frame, c=0.7, z_grid=z_grid)
        i0 = np.argmin(np.abs(z_grid.nodes()))
        want = np.interp(0.7, frame.h.grid.nodes(), frame.h.values)
        assert u.values[i0] == pytest.approx(want, rel=1e-6)

    def test_unit_magnification_at_tau0(self):
        frame = self._frame(tau=0.0)
        z_grid = UniformGrid1D(-1.0, 1.0, 256)
        u = to_uc(frame, c=0.5, z_grid=z_grid)
        want = np.interp(0.5 + z_grid.nodes(), frame.h.grid.nodes(), frame.h.values)
        assert np.abs(u.values - want).max() < 1e-8

    def test_sup_matches_over_window(self):
        frame = self._frame(tau=1.0)
        z_grid = UniformGrid1D(-4.0, 4.0, 1024)
        u = to_uc(frame, c=0.0, z_grid=z_grid)
        y = frame.h.grid.nodes()
        window = np.abs(y) <= 2.0
        assert u.values.max() == pytest.approx(frame.h.values[window].max(), rel=1e-6)

    def test_window_out_of_range(self):
        frame = self._frame(tau=0.0)
        with pytest.raises(DomainOverflowError):
            to_uc(frame, c=2.5, z_grid=UniformGrid1D(-2.0, 2.0, 128))


class TestToG:
    def test_identity_at_t1(self):
        grid = UniformGrid1D(-20.0, 20.0, 4096)
        g = smooth_density(grid)
        out = to_G(g, 1.0)
        assert np.abs(out.values - g.values).max() < 1e-10

    def test_heat_kernel_becomes_standard_gaussian(self):
        t = 50.0
        grid = UniformGrid1D(-100.0, 100.0, 8192)
        x = grid.nodes()
        g = Field1D(grid, np.exp(-0.5 * x ** 2 / t) / np.sqrt(2 * np.pi * t))
        out = to_G(g, t, y_grid=UniformGrid1D(-10.0, 10.0, 1024))
        y = out.grid.nodes()
        exact = np.exp(-0.5 * y ** 2) / np.sqrt(2 * np.pi)
        # linear interpolation floor: O(dx^2) on the source grid
        assert np.abs(out.values - exact).max() < 1e-5

    def test_mass_preserved(self):
        grid = UniformGrid1D(-60.0, 60.0, 8192)
        g = smooth_density(grid)
        out = to_G(g, 4.0, y_grid=UniformGrid1D(-60.0, 60.0, 8192))
        assert abs(integrate(out) - integrate(g)) < 1e-8


class TestFrontPosition:
    def test_step_profile(self):
        ygrid = UniformGrid1D(-3.0, 3.0, 4096)
        y = ygrid.nodes()
        h = np.where(np.abs(y) <= C.c_crit, C.theta_crit, 0.0)
        frame = RescaledFrame(5.0, Field1D(ygrid, h))
        left, right = front_position(frame, 0.5 * C.theta_crit)
        assert right == pytest.approx(C.c_crit, abs=ygrid.dx)
        assert left == pytest.approx(-C.c_crit, abs=ygrid.dx)

    def test_level_above_max(self):
        ygrid = UniformGrid1D(-3.0, 3.0, 4096)
        h = np.exp(-ygrid.nodes() ** 2)
        frame = RescaledFrame(1.0, Field1D(ygrid, h))
        assert front_position(frame, 2.0) is None


class TestSolveH:
    def test_slow_growth_bounds(self):
        out = solve_h(HConfig(g0={"type": "indicator", "half_width": 1.0}, tau_max=3.0,
                              snapshot_dtau=0.25))
        recs = out.records
        for i, a in enumerate(recs):
            for b in recs[i + 1:]:
                factor = ((b.tau + 1.0) / (a.tau + 1.0)) ** 2
                assert b.E <= factor * a.E * (1 + 1e-9)
                assert b.M <= factor * a.M * (1 + 1e-9)

    def test_mass_nearly_conserved(self):
        out = solve_h(HConfig(g0={"type": "indicator", "half_width": 1.0}, tau_max=3.0))
        # early diffusive leakage through the y = +-3 boundary is ~1e-3
        assert out.records[-1].mass == pytest.approx(1.0, abs=2e-3)

    def test_cross_validation_with_line_solver(self):
        # two independent discretizations of the same dynamics at t = 1000
        res = run(EvolveConfig(g0={"type": "indicator", "half_width": 1.0},
                               t_max=1000.0, n=8192))
        frame_ref = to_h(res.final_state.g, 1000.0)
        out = solve_h(HConfig(g0={"type": "indicator", "half_width": 1.0}, tau_max=9.0))
        h_direct = out.frames[-1].h.values
        diff = np.abs(h_direct - frame_ref.h.values).max()
        assert diff < 0.02 * frame_ref.h.values.max()
