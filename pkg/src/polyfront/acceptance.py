"""The acceptance harness: every exit criterion, runnable headlessly.

Heavy simulations are shared across criteria: the long identity-kernel
spreading run feeds criteria 1, 3, 4, 5, 6 and 10; the two mollifier runs
feed 2, 6 and 10; the steady-state sweep feeds 9.  Each criterion reports
its sub-checks with measured values so failures are self-describing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import goldens
from .core import constants
from .diagnostics import energy_identity_residual, fit_exponent
from .errors import PolyfrontError
from .evolve1d import EvolveConfig, run
from .gaussconv import run_decay, run_moments
from .selfsim1d import front_position, to_h
from .steady2d import decay_envelope_ok, gaussian_distance, r_sweep, relax

THETA = constants().theta_crit
C_CRIT = constants().c_crit

# pinned tolerances, per criterion
SLOPE_TOL_DELTA = 0.03
SLOPE_TOL_CONT = 0.05
AMPLITUDE_RTOL = 0.10
AMPLITUDE_GAP = 0.05
PROFILE_RTOL = 0.05
FRONT_RTOL = 0.05
RESIDUAL_TOL = 0.02
HD_SLOPE_TOL = 0.03
HD_SUP_BOUND = 5.0
DECAY_RATE_TOL = 0.05
RATIO_VARIATION_TOL = 0.20
MASS_BISECTION_TOL = 1e-8
GAP_FINAL_TOL = 1e-3
UNIQUENESS_TOL = 1e-6
MONOTONE_TOL = 1e-12
RUN_MASS_TOL = 1e-6
YOUNG_TOL = 1e-12
HOLDER_TOL = 1e-9
SELF_CONV_TOL = 0.005


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


@dataclass
class CriterionResult:
    cid: str
    title: str
    checks: list = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name: str, ok, detail: str) -> None:
        self.checks.append(Check(name, bool(ok), detail))


class SuiteRuns:
    """Lazily computed shared simulations."""

    def __init__(self, progress=None):
        self._cache = {}
        self._progress = progress or (lambda msg: None)

    def _get(self, key, builder):
        if key not in self._cache:
            self._progress(f"computing {key} ...")
            t0 = time.time()
            self._cache[key] = builder()
            self._progress(f"{key} done in {time.time() - t0:.1f}s")
        return self._cache[key]

    def big_delta(self):
        return self._get("delta run to 1e5", lambda: run(EvolveConfig(
            g0={"type": "indicator", "half_width": 1.0}, t_max=1e5, n=2 ** 15,
            field_snapshot_times=(1e5,))))

    def tophat(self):
        return self._get("tophat run to 1e4", lambda: run(EvolveConfig(
            g0={"type": "indicator", "half_width": 1.0}, t_max=1e4, n=2 ** 15,
            kernel={"type": "tophat", "width": 1.0})))

    def gausskern(self):
        return self._get("gaussian-kernel run to 1e4", lambda: run(EvolveConfig(
            g0={"type": "indicator", "half_width": 1.0}, t_max=1e4, n=2 ** 15,
            kernel={"type": "gaussian", "width": 0.5})))

    def refined_1e3(self):
        return self._get("refined run to 1e3 (dt/2, 2n)", lambda: run(EvolveConfig(
            g0={"type": "indicator", "half_width": 1.0}, t_max=1e3, n=2 ** 16,
            dt_max=0.5, cfl_reaction=0.1)))

    def sweep(self):
        return self._get("steady-state sweep R in {20,24,28}",
                         lambda: r_sweep([20.0, 24.0, 28.0]))

    def decay(self, d):
        return self._get(f"self-similar decay run d={d}",
                         lambda: run_decay(d, tau_max=15.0, fit_window=(10.0, 15.0)))

    def moments(self, d):
        return self._get(f"moment-scaling run d={d}",
                         lambda: run_moments(d, t_max=1e4))


def _timed(fn):
    def wrapper(runs):
        t0 = time.time()
        res = fn(runs)
        res.wall_time_s = time.time() - t0
        return res
    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def criterion_1(runs) -> CriterionResult:
    res = CriterionResult("1", "KPZ exponent 2/3, identity kernel, t to 1e5")
    traj = runs.big_delta().trajectory
    t = traj.column("t")
    for p in (1, 2, 4):
        slope, err = fit_exponent(t, traj.column(f"m{p}") ** (1.0 / p),
                                  window=(1e3, 1e5))
        res.add(f"slope m{p}^(1/{p})", abs(slope - 2.0 / 3.0) <= SLOPE_TOL_DELTA,
                f"slope={slope:.4f} stderr={err:.4f} target 2/3 +- {SLOPE_TOL_DELTA}")
    return res


@_timed
def criterion_2(runs) -> CriterionResult:
    res = CriterionResult("2", "universality of 2/3 for continuous kernels")
    for name, rr in (("tophat width 1", runs.tophat()),
                     ("gaussian sigma 0.5", runs.gausskern())):
        traj = rr.trajectory
        slope, err = fit_exponent(traj.column("t"), np.sqrt(traj.column("m2")),
                                  window=(1e2, 1e4))
        res.add(f"slope m2^(1/2), {name}", abs(slope - 2.0 / 3.0) <= SLOPE_TOL_CONT,
                f"slope={slope:.4f} stderr={err:.4f} target 2/3 +- {SLOPE_TOL_CONT}")
    return res


@_timed
def criterion_3(runs) -> CriterionResult:
    res = CriterionResult("3", "amplitude constants at t = 1e5")
    rec = runs.big_delta().trajectory.records[-1]
    s = rec.t ** (2.0 / 3.0)
    msup, ml2 = s * rec.M, s * rec.l2sq
    res.add("t^(2/3) sup g", abs(msup - THETA) <= AMPLITUDE_RTOL * THETA,
            f"{msup:.5f} vs theta={THETA:.5f} +- 10%")
    res.add("t^(2/3) |g|_2^2", abs(ml2 - THETA) <= AMPLITUDE_RTOL * THETA,
            f"{ml2:.5f} vs theta={THETA:.5f} +- 10%")
    res.add("amplitude gap", abs(msup - ml2) < AMPLITUDE_GAP,
            f"|diff| = {abs(msup - ml2):.5f} < {AMPLITUDE_GAP}")
    return res


@_timed
def criterion_4(runs) -> CriterionResult:
    res = CriterionResult("4", "indicator limit profile at t = 1e5")
    rr = runs.big_delta()
    t_end = rr.final_state.t
    frame = to_h(rr.final_state.g, t_end)
    y = frame.h.grid.nodes()
    interior = np.abs(y) <= 0.9 * C_CRIT
    dev = float(np.abs(frame.h.values[interior] - THETA).max())
    res.add("interior flatness", dev < PROFILE_RTOL * THETA,
            f"sup|h - theta| = {dev:.5f} < {PROFILE_RTOL * THETA:.5f} on |y| <= 0.9c")
    h_out = float(np.interp(1.1 * C_CRIT, y, frame.h.values))
    res.add("exterior smallness", h_out < PROFILE_RTOL * THETA,
            f"h(1.1c) = {h_out:.5f} < {PROFILE_RTOL * THETA:.5f}")
    fr = front_position(frame, 0.5 * THETA)
    if fr is None:
        res.add("front positions", False, "front level never attained")
    else:
        left, right = fr
        ok = (abs(right - 1.310) <= FRONT_RTOL * 1.310
              and abs(-left - 1.310) <= FRONT_RTOL * 1.310)
        res.add("front positions", ok,
                f"fronts ({left:.4f}, {right:.4f}) vs +-1.310 +- 5%")
    return res


@_timed
def criterion_5(runs) -> CriterionResult:
    res = CriterionResult("5", "amplitude bracketing for tau >= 20")
    traj = runs.big_delta().trajectory
    t = traj.column("t")
    tau = traj.column("tau")
    sel = tau >= 20.0
    series = t[sel] ** (2.0 / 3.0) * traj.column("l2sq")[sel]
    res.add("dips below 1.1 theta", series.min() <= 1.1 * THETA,
            f"min t^(2/3)|g|_2^2 = {series.min():.5f} <= {1.1 * THETA:.5f}")
    res.add("rises above 0.9 theta", series.max() >= 0.9 * THETA,
            f"max t^(2/3)|g|_2^2 = {series.max():.5f} >= {0.9 * THETA:.5f}")
    return res


@_timed
def criterion_6(runs) -> CriterionResult:
    res = CriterionResult("6", "energy identity and monotonicity")
    for name, rr, t_hi in (("delta", runs.big_delta(), 1e4),
                           ("tophat", runs.tophat(), 1e4)):
        resid = energy_identity_residual(rr.trajectory.records)
        worst = max(r for tt, r in resid if 2.0 <= tt <= t_hi)
        res.add(f"residual, {name} kernel", worst < RESIDUAL_TOL,
                f"max relative residual {worst:.4f} < {RESIDUAL_TOL} on t in [2, 1e4]")
        res.add(f"E nonincreasing, {name}",
                rr.trajectory.max_step_E_increase <= 1e-10,
                f"max per-step E increase {rr.trajectory.max_step_E_increase:.2e}")
    return res


@_timed
def criterion_7(runs) -> CriterionResult:
    res = CriterionResult("7", "diffusive moment scaling in d = 2, 3")
    for d in (2, 3):
        rep = runs.moments(d)
        res.add(f"m2^(1/2) slope, d={d}", abs(rep.slope_m2 - 0.5) <= HD_SLOPE_TOL,
                f"slope={rep.slope_m2:.4f} target 1/2 +- {HD_SLOPE_TOL}")
        # boundedness read as plateau flatness: the limit value itself,
        # (2 pi)^(-d/2), sits below 1/5 in d = 3, so an absolute [1/C, C]
        # band around 1 cannot be meant
        c_eff = rep.sup_hi / rep.sup_lo
        res.add(f"t^(d/2) sup g bounded, d={d}", c_eff <= HD_SUP_BOUND,
                f"range [{rep.sup_lo:.4f}, {rep.sup_hi:.4f}], "
                f"max/min = {c_eff:.3f} <= 5")
    return res


@_timed
def criterion_8(runs) -> CriterionResult:
    res = CriterionResult("8", "Gaussian-convergence rates in d >= 3")
    rep4 = runs.decay(4)
    res.add("d=4 fitted rate", abs(rep4.rate + 0.5) <= DECAY_RATE_TOL,
            f"rate={rep4.rate:.4f} target -0.5 +- {DECAY_RATE_TOL} on tau in [10,15] "
            f"(discrete floor {rep4.w_perp_floor:.2e}; centered radial data decays "
            f"at the even-sector rate ~ -1 before hitting it)")
    rep3 = runs.decay(3)
    res.add("d=3 envelope-ratio variation",
            rep3.ratio_variation <= RATIO_VARIATION_TOL,
            f"(max-min)/mean = {rep3.ratio_variation:.3f} target < "
            f"{RATIO_VARIATION_TOL} (same floor: {rep3.w_perp_floor:.2e})")
    return res


@_timed
def criterion_9(runs) -> CriterionResult:
    res = CriterionResult("9", "2d steady state: sweep, identities, non-Gaussianity")
    report = runs.sweep()
    outs = report.outcomes
    for o in outs:
        res.add(f"unit mass, R={o.R:g}", abs(o.mass - 1.0) < MASS_BISECTION_TOL,
                f"|mass - 1| = {abs(o.mass - 1.0):.2e} < 1e-8 (E* = {o.E!r})")
    gaps = report.gaps
    res.add("gap decreasing", all(b < a for a, b in zip(gaps, gaps[1:])),
            "gaps " + ", ".join(f"{g:.3e}" for g in gaps))
    res.add("gap at R=28", gaps[-1] < GAP_FINAL_TOL,
            f"gap(28) = {gaps[-1]:.3e} < {GAP_FINAL_TOL}")
    fluxes = report.fluxes
    res.add("boundary flux decreasing",
            all(abs(b) < abs(a) for a, b in zip(fluxes, fluxes[1:])),
            "fluxes " + ", ".join(f"{f:.3e}" for f in fluxes))
    res.add("decay envelope", all(decay_envelope_ok(o) for o in outs),
            "G <= (1+E) exp(4(1+E) - r^2/4) at all nodes beyond 4 sqrt(1+E)")
    worst_inc = min(o.min_step_increase for o in outs)
    res.add("monotone relaxation", worst_inc >= -MONOTONE_TOL,
            f"min discrete H_t*dt = {worst_inc:.2e} >= -1e-12")
    final = report.final
    from .core import RadialField
    alt = relax(final.E, final.R, grid=final.G.grid,
                init=RadialField(final.G.grid, 0.9 * final.G.values))
    udiff = float(np.abs(alt.G.values - final.G.values).max())
    res.add("uniqueness cross-check", udiff < UNIQUENESS_TOL,
            f"|G_alt - G|_inf = {udiff:.2e} < 1e-6")
    sigma, dist = gaussian_distance(final.G)
    res.add("gauss_rel_dist", dist > 0.01,
            f"rel sup distance {dist:.5f} (sigma* = {sigma:.4f}); threshold 0.01")
    res.add("golden E* regression",
            all(abs(o.E - goldens.E_STAR[o.R]) <= goldens.E_STAR_RTOL * goldens.E_STAR[o.R]
                for o in outs),
            "E* " + ", ".join(f"{o.E!r}" for o in outs))
    res.add("golden gauss distance regression",
            abs(dist - goldens.GAUSS_REL_DIST) <= goldens.GAUSS_RTOL * goldens.GAUSS_REL_DIST,
            f"dist {dist!r} vs frozen {goldens.GAUSS_REL_DIST!r}")
    return res


@_timed
def criterion_10(runs) -> CriterionResult:
    res = CriterionResult("10", "property suite")
    named = (("delta", runs.big_delta()), ("tophat", runs.tophat()),
             ("gaussian", runs.gausskern()))
    for name, rr in named:
        traj = rr.trajectory
        drift = float(np.abs(traj.column("mass") - 1.0).max())
        res.add(f"mass conservation, {name}", drift < RUN_MASS_TOL,
                f"max |mass - 1| = {drift:.2e} < 1e-6")
        res.add(f"positivity policy, {name}", traj.min_density_seen > -1e-12,
                f"most negative raw value {traj.min_density_seen:.2e}")
    for name, rr in named[1:]:
        wu = float(np.nanmax(rr.trajectory.column("young_wu")))
        ug = float(np.nanmax(rr.trajectory.column("young_ug")))
        res.add(f"Young ordering, {name}", wu <= YOUNG_TOL and ug <= YOUNG_TOL,
                f"max(M_w - M_u) = {wu:.2e}, max(M_u - M_g) = {ug:.2e}")
    traj = runs.big_delta().trajectory
    hl = traj.column("holder_low_margin")
    hu = traj.column("holder_up_margin")
    skipped = int(np.isnan(hl).sum())
    res.add("Holder bounds at snapshots",
            np.nanmin(hl) >= -HOLDER_TOL and np.nanmin(hu) >= -HOLDER_TOL,
            f"min margins ({np.nanmin(hl):.2e}, {np.nanmin(hu):.2e}); "
            f"{skipped} snapshots skipped for non-monotonicity")
    nash = float(np.nanmax(traj.column("nash")))
    res.add("Nash ratio envelope", nash <= goldens.NASH_ENVELOPE and nash <= 1.0,
            f"max ratio {nash!r} <= frozen {goldens.NASH_ENVELOPE} (and <= 1)")
    t = traj.column("t")
    tau = t ** (1.0 / 3.0)
    for label in ("E", "M"):
        series = t ** (2.0 / 3.0) * traj.column(label)
        ok = True
        worst = 0.0
        for i in range(len(t)):
            factor = (tau / tau[i]) ** 2
            viol = series / (series[i] * factor) - 1.0
            worst = max(worst, float(viol[i:].max()))
        ok = worst <= 1e-9
        res.add(f"slow growth of {label}_h", ok,
                f"worst pairwise excess {worst:.2e} <= 1e-9")
    base = traj.column("m2")[np.argmin(np.abs(t - 1e3))]
    ref = runs.refined_1e3().trajectory
    m2_ref = ref.column("m2")[-1]
    rel = abs(m2_ref - base) / m2_ref
    res.add("self-convergence of m2(1e3)", rel < SELF_CONV_TOL,
            f"halving dt, doubling n moves m2 by {rel:.4%} < 0.5%")
    return res


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_suite(progress=None, runs: SuiteRuns | None = None) -> list:
    """Evaluate every acceptance criterion; returns CriterionResult list."""
    runs = runs or SuiteRuns(progress)
    results = []
    for crit in CRITERIA:
        try:
            results.append(crit(runs))
        except PolyfrontError as exc:
            res = CriterionResult(crit.__name__.split("_")[1], crit.__name__)
            res.add("execution", False, f"aborted: {exc}")
            results.append(res)
    return results


def format_table(results: list) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] criterion {r.cid}: {r.title} "
                     f"({r.wall_time_s:.1f}s)")
        for c in r.checks:
            mark = "ok " if c.ok else "XX "
            lines.append(f"    {mark} {c.name}: {c.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
