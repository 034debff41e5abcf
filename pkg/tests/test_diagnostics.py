import numpy as np
import pytest

from polyfront import DeltaKernel, Field1D, UniformGrid1D, constants, tophat_kernel
from polyfront.diagnostics import (fit_exponent, front_crossings, holder_bounds,
                                   macros, min_gaussian_envelope_A, moments,
                                   nash_ratio, value_at)
from polyfront.errors import ConfigError, DomainOverflowError

DELTA = DeltaKernel()


def indicator_profile(grid=None):
    """theta * indicator(|x| <= c) with 2 theta c = 1."""
    c = constants()
    grid = grid or UniformGrid1D(-4.0, 4.0, 4096)
    x = grid.nodes()
    v = np.where(np.abs(x) <= c.c_crit, c.theta_crit, 0.0)
    v = v / (v.sum() * grid.dx)
    return Field1D(grid, v), c


def gaussian(grid, sigma=1.0):
    x = grid.nodes()
    return Field1D(grid, np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi)))


class TestMacros:
    def test_indicator_energy_is_theta(self):
        f, c = indicator_profile()
        E, _, M = macros(f, DELTA)
        assert E == pytest.approx(c.theta_crit, rel=1.5e-3)
        assert M == pytest.approx(c.theta_crit, rel=1.5e-3)

    def test_gaussian_analytic(self):
        g = UniformGrid1D(-16.0, 16.0, 1024)
        E, D, M = macros(gaussian(g), DELTA)
        assert E == pytest.approx(1.0 / (2 * np.sqrt(np.pi)), rel=1e-10)
        assert D == pytest.approx(1.0 / (4 * np.sqrt(np.pi)), rel=1e-10)
        assert M == pytest.approx(1.0 / np.sqrt(2 * np.pi), rel=1e-4)

    def test_E_below_M_random(self):
        grid = UniformGrid1D(-4.0, 4.0, 512)
        k = tophat_kernel(1.0)
        rng = np.random.default_rng(5)
        for _ in range(100):
            v = rng.random(grid.n) * np.exp(-0.5 * grid.nodes() ** 2)
            f = Field1D(grid, v / (v.sum() * grid.dx))
            E, _, M = macros(f, k)
            assert E <= M + 1e-12

    def test_delta_D_matches_finite_differences(self):
        g = UniformGrid1D(-16.0, 16.0, 1024)
        f = gaussian(g)
        _, D, _ = macros(f, DELTA)
        fd = np.gradient(f.values, g.dx)
        assert D == pytest.approx((fd ** 2).sum() * g.dx, rel=1e-2)


class TestMoments:
    def test_indicator_closed_forms(self):
        f, c = indicator_profile()
        m1, m2 = moments(f, (1, 2))
        assert m2 == pytest.approx(c.c_crit ** 2 / 3.0, rel=2e-3)
        assert m2 == pytest.approx(0.57236, rel=2e-3)
        assert m1 == pytest.approx(c.c_crit / 2.0, rel=2e-3)
        assert m1 == pytest.approx(0.65519, rel=2e-3)

    def test_narrow_bump_moments_vanish(self):
        grid = UniformGrid1D(-4.0, 4.0, 4096)
        prev = np.inf
        for w in (0.5, 0.1, 0.02):
            x = grid.nodes()
            v = np.where(np.abs(x) <= w, 0.5 / w, 0.0)
            m2, = moments(Field1D(grid, v / (v.sum() * grid.dx)), (2,))
            assert m2 < prev
            prev = m2
        assert prev < 1e-3

    def test_boundary_decay_required(self):
        grid = UniformGrid1D(-2.0, 2.0, 128)
        with pytest.raises(DomainOverflowError):
            moments(Field1D(grid, np.ones(128)), (2,))


class TestFitExponent:
    def test_exact_power_law(self):
        t = np.geomspace(1, 1e4, 20)
        slope, err = fit_exponent(t, 5.0 * t ** (2.0 / 3.0))
        assert slope == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert err < 1e-12

    def test_perturbed_power_law(self):
        t = np.geomspace(1, 1e6, 200)
        y = t ** 0.5 * (1.0 + 0.1 * np.sin(np.log(t)))
        slope, _ = fit_exponent(t, y)
        assert slope == pytest.approx(0.5, abs=0.05)

    def test_constant_series(self):
        t = np.geomspace(1, 100, 30)
        slope, _ = fit_exponent(t, np.full_like(t, 3.3))
        assert slope == pytest.approx(0.0, abs=1e-14)

    def test_window_and_errors(self):
        t = np.geomspace(1, 1e4, 50)
        y = t ** 1.5
        slope, _ = fit_exponent(t, y, window=(10, 1e3))
        assert slope == pytest.approx(1.5, abs=1e-10)
        with pytest.raises(ConfigError):
            fit_exponent(t[:5], y[:5])
        with pytest.raises(ConfigError):
            fit_exponent(t, np.zeros_like(t))


class TestHolder:
    def test_indicator_equality_case(self):
        f, c = indicator_profile()
        for r in (0.3, 0.8, 1.2):
            bound = holder_bounds(f, r, x0=0.5 * r, d=1)
            assert bound == pytest.approx(c.theta_crit, rel=2e-3)
            assert value_at(f, 0.5 * r) >= bound - 1e-9

    def test_indicator_zero_tail(self):
        f, c = indicator_profile()
        bound = holder_bounds(f, c.c_crit + 2 * f.grid.dx, x0=2 * c.c_crit, d=1)
        assert bound == pytest.approx(0.0, abs=1e-3)

    def test_tent_closed_forms(self):
        grid = UniformGrid1D(-4.0, 4.0, 8192)
        x = grid.nodes()
        f = Field1D(grid, np.maximum(1.0 - np.abs(x), 0.0))
        lower = holder_bounds(f, 0.5, x0=0.25, d=1)
        assert lower == pytest.approx((2.0 / 3.0 - 0.75) / 0.25, rel=1e-2)
        assert value_at(f, 0.25) == pytest.approx(0.75, abs=1e-3)
        assert value_at(f, 0.25) >= lower
        upper = holder_bounds(f, 0.5, x0=0.75, d=1)
        assert upper == pytest.approx(0.5, rel=1e-2)
        assert value_at(f, 0.75) == pytest.approx(0.25, abs=1e-3)
        assert value_at(f, 0.75) <= upper

    def test_precondition_rejected(self):
        grid = UniformGrid1D(-4.0, 4.0, 256)
        x = grid.nodes()
        v = np.exp(-0.5 * (x - 1.0) ** 2)  # not even
        f = Field1D(grid, v / (v.sum() * grid.dx))
        with pytest.raises(ConfigError):
            holder_bounds(f, 0.5, 0.25, d=1)


class TestNash:
    def test_gaussian_value(self):
        g = UniformGrid1D(-16.0, 16.0, 2048)
        ratio = nash_ratio(gaussian(g), DELTA, d=1)
        assert ratio == pytest.approx(1.0 / (2 * np.pi), rel=1e-6)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_dilation_invariance(self, lam):
        g = UniformGrid1D(-32.0, 32.0, 4096)
        x = g.nodes()
        base = nash_ratio(gaussian(g), DELTA, d=1)
        v = lam * np.exp(-0.5 * (lam * x) ** 2) / np.sqrt(2 * np.pi)
        scaled = nash_ratio(Field1D(g, v), DELTA, d=1)
        assert scaled == pytest.approx(base, rel=1e-6)

    def test_degenerate_rejected(self):
        g = UniformGrid1D(-1.0, 1.0, 128)
        with pytest.raises(ConfigError):
            nash_ratio(Field1D(g, np.ones(128)), DELTA, d=1)


class TestEnvelopeAndFronts:
    def test_minimal_envelope_constant(self):
        grid = UniformGrid1D(-40.0, 40.0, 2048)
        x = grid.nodes()
        t, a_true = 3.0, 5.0
        f = Field1D(grid, a_true / np.sqrt(t + 1) * np.exp(-x ** 2 / (a_true * (t + 1))))
        a_min = min_gaussian_envelope_A(f, t)
        assert a_min == pytest.approx(a_true, rel=1e-3)

    def test_envelope_unattainable(self):
        grid = UniformGrid1D(-4.0, 4.0, 128)
        f = Field1D(grid, np.full(128, 1e3))
        assert min_gaussian_envelope_A(f, 1.0) == np.inf

    def test_front_crossings_step(self):
        f, c = indicator_profile()
        left, right = front_crossings(f.grid.nodes(), f.values, 0.5 * c.theta_crit)
        assert right == pytest.approx(c.c_crit, abs=f.grid.dx)
        assert left == pytest.approx(-c.c_crit, abs=f.grid.dx)

    def test_front_not_found(self):
        f, c = indicator_profile()
        assert front_crossings(f.grid.nodes(), f.values, 2 * c.theta_crit) is None
