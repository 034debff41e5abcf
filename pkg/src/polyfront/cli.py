"""Declarative experiment driver.

Subcommands: simulate1d, rescaled, steady2d, gaussconv, fit, accept.
Configuration comes from a TOML (or JSON) file holding one table named
after the subcommand; unknown keys are rejected.  Every run writes a
manifest, CSV/JSON artifacts, and report figures under the output
directory (flag --out, else $POLYFRONT_OUT, else ./polyfront-out).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import report
from .artifacts import (diagnostics_to_csv, trajectory_to_csv, write_csv,
                        write_json, write_manifest)
from .core import constants, field_to_csv
from .diagnostics import fit_exponent
from .errors import ConfigError, PolyfrontError
from .evolve1d import EvolveConfig, run as run_evolve
from .selfsim1d import DEFAULT_Y_GRID, HConfig, solve_h, to_h
from .steady2d import gaussian_distance, r_sweep

_ALLOWED = {
    "simulate1d": {"g0", "kernel", "t_max", "t_start", "dt_max", "cfl_reaction",
                   "L0", "n", "snapshots_per_decade", "nonlinearity_enabled",
                   "regrid_enabled", "field_snapshot_times", "fit_window"},
    "rescaled": {"g0", "tau_max", "n", "y_min", "y_max", "cfl_advection",
                 "cfl_reaction", "snapshot_dtau", "front_level"},
    "steady2d": {"radii", "n", "unsafe_small_r"},
    "gaussconv": {"mode", "d", "tau_max", "t_max", "g0_sigma2", "r_max", "n",
                  "dtau", "nonlinearity_enabled", "fit_window"},
    "fit": {"file", "x", "y", "p", "window"},
    "accept": {"suite"},
}

_G0_KEYS = {"type", "half_width", "sigma", "center", "file"}
_KERNEL_KEYS = {"type", "width", "file"}


def _load_config(path: str, command: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} not found")
    text = p.read_bytes()
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from exc
    else:
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text.decode())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML config: {exc}") from exc
    if command not in data:
        raise ConfigError(f"config has no [{command}] table")
    cfg = data[command]
    unknown = set(cfg) - _ALLOWED[command]
    if unknown:
        raise ConfigError(f"unknown keys in [{command}]: {sorted(unknown)}")
    for key, allowed in (("g0", _G0_KEYS), ("kernel", _KERNEL_KEYS)):
        if key in cfg:
            bad = set(cfg[key]) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{command}.{key}]: {sorted(bad)}")
    return cfg


def _out_dir(args, command: str) -> Path:
    root = args.out or os.environ.get("POLYFRONT_OUT") or "polyfront-out"
    out = Path(root) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate1d(cfg: dict, out: Path, args) -> dict:
    fit_window = cfg.pop("fit_window", None)
    cfg.setdefault("g0", {"type": "indicator", "half_width": 1.0})
    if "field_snapshot_times" not in cfg:
        cfg["field_snapshot_times"] = (float(cfg.get("t_max", 1e3)),)
    res = run_evolve(EvolveConfig(**cfg))
    traj = res.trajectory
    artifacts = [out / "trajectory.csv", out / "diagnostics.csv"]
    trajectory_to_csv(traj, artifacts[0])
    diagnostics_to_csv(traj, artifacts[1])
    snapdir = out / "snapshots"
    snapdir.mkdir(exist_ok=True)
    for t_snap, fld in res.fields.items():
        path = snapdir / f"field_t{t_snap:g}.csv"
        field_to_csv(fld, path)
        artifacts.append(path)
    t = traj.column("t")
    t_max = float(t[-1])
    window = tuple(fit_window) if fit_window else (t_max / 100.0, t_max)
    summary = {"t_max": t_max, "fit_window": list(window),
               "mass_final": float(traj.column("mass")[-1]),
               "max_step_mass_drift": traj.max_step_mass_drift,
               "max_step_E_increase": traj.max_step_E_increase,
               "max_step_M_increase": traj.max_step_M_increase,
               "regrid_count": traj.regrid_count}
    slopes = {}
    for p in (1, 2, 4):
        mp = traj.column(f"m{p}") ** (1.0 / p)
        try:
            slope, err = fit_exponent(t, mp, window=window)
        except ConfigError:
            continue
        summary[f"slope_m{p}"] = slope
        summary[f"slope_m{p}_stderr"] = err
        slopes[f"m{p}^(1/{p})"] = slope
    rec = traj.records[-1]
    summary["theta_inf_est"] = rec.t ** (2.0 / 3.0) * rec.M
    summary["theta_l2_est"] = rec.t ** (2.0 / 3.0) * rec.l2sq
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    artifacts.append(report.moment_scaling_figure(
        t, {f"m{p}^(1/{p})": traj.column(f"m{p}") ** (1.0 / p) for p in (1, 2, 4)},
        slopes, figures / "moments.png"))
    artifacts.append(report.amplitude_figure(
        t, t ** (2.0 / 3.0) * traj.column("M"),
        t ** (2.0 / 3.0) * traj.column("l2sq"), figures / "amplitudes.png"))
    if res.fields:
        t_last = max(res.fields)
        if t_last >= 1.0:
            try:
                frame = to_h(res.fields[t_last], t_last, mass_tol=1e-2)
            except PolyfrontError:
                frame = None  # early-time tails exceed the stretched window
            if frame is not None:
                summary["final_frame_tau"] = frame.tau
                artifacts.append(report.profile_figure(
                    frame.h.grid.nodes(), frame.h.values, figures / "profile.png"))
    summary["artifacts"] = [str(a) for a in artifacts]
    return summary


def _cmd_rescaled(cfg: dict, out: Path, args) -> dict:
    cfg = dict(cfg)
    level_cfg = cfg.pop("front_level", None)
    grid_kw = {}
    if {"y_min", "y_max", "n"} & set(cfg):
        from .core import UniformGrid1D
        grid_kw["y_grid"] = UniformGrid1D(float(cfg.pop("y_min", -3.0)),
                                          float(cfg.pop("y_max", 3.0)),
                                          int(cfg.pop("n", 4096)))
    cfg.setdefault("g0", {"type": "indicator", "half_width": 1.0})
    hrun = solve_h(HConfig(**cfg, **grid_kw))
    theta = constants().theta_crit
    level = float(level_cfg) if level_cfg is not None else 0.5 * theta
    artifacts = []
    framedir = out / "frames"
    framedir.mkdir(exist_ok=True)
    for fr in hrun.frames:
        base = framedir / f"frame_tau{fr.tau:.3f}"
        cpath = base.with_suffix(".csv")
        write_csv(cpath, {"y": fr.h.grid.nodes(), "h": fr.h.values})
        rec = next(r for r in hrun.records if abs(r.tau - fr.tau) < 1e-9)
        write_json(base.with_suffix(".json"),
                   {"tau": rec.tau, "E_h": rec.E, "M_h": rec.M,
                    "front_left": rec.front_left, "front_right": rec.front_right})
        artifacts.append(cpath)
    hist = out / "history.csv"
    write_csv(hist, {k: [getattr(r, k) for r in hrun.records]
                     for k in ("tau", "mass", "E", "M", "front_left", "front_right")})
    artifacts.append(hist)
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    taus = [r.tau for r in hrun.records]
    artifacts.append(report.rescaled_history_figure(
        taus, [r.E for r in hrun.records], [r.M for r in hrun.records],
        figures / "history.png"))
    last = hrun.frames[-1]
    artifacts.append(report.profile_figure(last.h.grid.nodes(), last.h.values,
                                           figures / "profile.png"))
    from .diagnostics import front_crossings
    fr = front_crossings(last.h.grid.nodes(), last.h.values, level)
    summary = {"tau_max": taus[-1], "E_h_final": hrun.records[-1].E,
               "M_h_final": hrun.records[-1].M, "mass_final": hrun.records[-1].mass,
               "front_level": level,
               "front_left": None if fr is None else fr[0],
               "front_right": None if fr is None else fr[1],
               "artifacts": [str(a) for a in artifacts]}
    return summary


def _cmd_steady2d(cfg: dict, out: Path, args) -> dict:
    radii = [float(r) for r in cfg.get("radii", (20.0, 24.0, 28.0))]
    unsafe = bool(cfg.get("unsafe_small_r", False)) or args.unsafe_small_R
    sweep = r_sweep(radii, n=cfg.get("n"), unsafe_small_r=unsafe)
    artifacts = []
    per_r = []
    for o in sweep.outcomes:
        sigma, dist = gaussian_distance(o.G)
        row = {"R": o.R, "E_star": o.E, "mass": o.mass, "l2sq": o.l2sq,
               "gap": o.gap, "gap_raw": o.gap_raw, "boundary_flux": o.boundary_flux,
               "sigma_star": sigma, "gauss_rel_dist": dist, "residual": o.residual,
               "min_step_increase": o.min_step_increase, "relax_steps": o.steps}
        per_r.append(row)
        jpath = out / f"steady_R{o.R:g}.json"
        write_json(jpath, row)
        cpath = out / f"profile_R{o.R:g}.csv"
        write_csv(cpath, {"r": o.G.grid.nodes(), "G": o.G.values})
        artifacts += [jpath, cpath]
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    artifacts.append(report.steady_profiles_figure(sweep.outcomes,
                                                   figures / "steady.png"))
    summary = {"radii": radii, "outcomes": per_r,
               "cauchy_sup": sweep.cauchy_sup,
               "artifacts": [str(a) for a in artifacts]}
    return summary


def _cmd_gaussconv(cfg: dict, out: Path, args) -> dict:
    from .gaussconv import decay_rate_bound, run_decay, run_moments

    mode = cfg.get("mode", "decay")
    d = int(cfg.get("d", 4))
    artifacts = []
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    summary = {"mode": mode, "d": d}
    if mode == "decay":
        kw = {}
        for key in ("tau_max", "g0_sigma2", "r_max", "n", "dtau",
                    "nonlinearity_enabled", "fit_window"):
            if key in cfg:
                kw[key] = cfg[key]
        kw.setdefault("tau_max", 15.0)
        if "fit_window" in kw:
            kw["fit_window"] = tuple(kw["fit_window"])
        if "n" in kw:
            kw["n"] = int(kw["n"])
        rep = run_decay(d, **kw)
        cpath = out / "decay.csv"
        write_csv(cpath, {"tau": rep.taus, "w_perp_l2": rep.w_perp,
                          "w_perp_weighted_linf": rep.weighted_sup,
                          "bound_ratio": rep.bound_ratio})
        artifacts.append(cpath)
        artifacts.append(report.decay_figure(
            rep.taus, rep.w_perp, decay_rate_bound(d, rep.taus),
            figures / "decay.png", floor=rep.w_perp_floor))
        summary.update(rate=rep.rate, rate_stderr=rep.rate_stderr,
                       ratio_variation=rep.ratio_variation,
                       w_perp_floor=rep.w_perp_floor,
                       envelope_max=rep.envelope_max,
                       envelope_initial=rep.envelope_initial,
                       fit_window=list(rep.fit_window))
    elif mode == "moments":
        kw = {}
        for key in ("t_max", "r_max", "n", "dtau"):
            if key in cfg:
                kw[key] = cfg[key]
        kw.setdefault("t_max", 1e4)
        if "n" in kw:
            kw["n"] = int(kw["n"])
        rep = run_moments(d, **kw)
        cpath = out / "moments.csv"
        write_csv(cpath, {"t": rep.ts, "m1": rep.m1, "m2": rep.m2, "m4": rep.m4,
                          "sup_rescaled": rep.sup, "l2_rescaled": rep.l2})
        artifacts.append(cpath)
        artifacts.append(report.moment_scaling_figure(
            rep.ts, {"m2^(1/2)": np.sqrt(rep.m2)}, {"m2^(1/2)": rep.slope_m2},
            figures / "moments.png", exponent=0.5))
        summary.update(slope_m2=rep.slope_m2, sup_lo=rep.sup_lo, sup_hi=rep.sup_hi,
                       fit_window=list(rep.fit_window))
    else:
        raise ConfigError(f"unknown gaussconv mode {mode!r}")
    summary["artifacts"] = [str(a) for a in artifacts]
    return summary


def _cmd_fit(cfg: dict, out: Path, args) -> dict:
    path = cfg.get("file")
    if not path:
        raise ConfigError("[fit] requires file")
    data = np.genfromtxt(path, delimiter=",", names=True)
    xcol, ycol = cfg.get("x", "t"), cfg.get("y", "m2")
    if xcol not in data.dtype.names or ycol not in data.dtype.names:
        raise ConfigError(f"columns {xcol!r}/{ycol!r} not in {path}")
    x = np.asarray(data[xcol], float)
    y = np.asarray(data[ycol], float)
    p = float(cfg.get("p", 1.0))
    y = y ** (1.0 / p)
    window = tuple(cfg["window"]) if "window" in cfg else None
    slope, err = fit_exponent(x, y, window=window)
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    fig = report.fit_figure(x, y, slope, figures / "fit.png")
    return {"file": str(path), "x": xcol, "y": ycol, "p": p,
            "window": list(window) if window else None,
            "slope": slope, "stderr": err, "artifacts": [str(fig)]}


def _cmd_accept(cfg: dict, out: Path, args) -> dict:
    from .acceptance import format_table, run_suite

    suite = cfg.get("suite", "primary") if cfg else "primary"
    if suite != "primary":
        raise ConfigError(f"unknown acceptance suite {suite!r}")
    results = run_suite(progress=lambda msg: print(f"  .. {msg}", flush=True))
    table = format_table(results)
    print(table)
    payload = {"suite": suite,
               "criteria": [{
                   "cid": r.cid, "title": r.title, "passed": r.passed,
                   "wall_time_s": r.wall_time_s,
                   "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail}
                              for c in r.checks]} for r in results],
               "all_passed": all(r.passed for r in results)}
    write_json(out / "acceptance.json", payload)
    (out / "acceptance.txt").write_text(table + "\n")
    return payload


_COMMANDS = {
    "simulate1d": _cmd_simulate1d,
    "rescaled": _cmd_rescaled,
    "steady2d": _cmd_steady2d,
    "gaussconv": _cmd_gaussconv,
    "fit": _cmd_fit,
    "accept": _cmd_accept,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyfront",
        description="Solvers and verification harness for a nonlocal "
                    "reaction-diffusion model of spreading densities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="TOML or JSON file with a [%s] table" % name)
        p.add_argument("--out", default=None, help="output directory root")
        p.add_argument("--threads", type=int, default=1,
                       help="worker pool size for independent sub-runs")
        p.add_argument("--unsafe-small-R", action="store_true",
                       dest="unsafe_small_R",
                       help="allow steady-state radii below 20 (exploratory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        cfg = _load_config(args.config, command) if args.config else {}
        out = _out_dir(args, command)
        t0 = time.time()
        summary = _COMMANDS[command](dict(cfg), out, args)
        wall = time.time() - t0
        write_json(out / "summary.json", summary)
        write_manifest(out, command, cfg, wall, summary.get("artifacts", []))
        if command == "accept" and not summary["all_passed"]:
            return 1
        return 0
    except PolyfrontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
