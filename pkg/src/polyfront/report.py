"""Figure rendering for run reports (written to files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import constants  # noqa: E402

_DPI = 140


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def moment_scaling_figure(t, moments: dict, slopes: dict, path: Path,
                          exponent: float = 2.0 / 3.0) -> Path:
    """Log-log moments m_p^(1/p) against t with the reference power law."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    t = np.asarray(t)
    for label, series in moments.items():
        ax.loglog(t, series, lw=1.2,
                  label=f"{label} (slope {slopes.get(label, float('nan')):.4f})")
    ref = moments[next(iter(moments))]
    anchor = ref[len(ref) // 2] / t[len(t) // 2] ** exponent
    ax.loglog(t, anchor * t ** exponent, "k--", lw=0.9, label=f"t^{exponent:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("moment scale")
    ax.legend(fontsize=8)
    return _save(fig, path)


def amplitude_figure(t, sup_scaled, l2_scaled, path: Path) -> Path:
    """Rescaled amplitudes t^(2/3) M and t^(2/3) |g|_2^2 with the limit level."""
    c = constants()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.semilogx(t, sup_scaled, lw=1.2, label="t^(2/3) sup g")
    ax.semilogx(t, l2_scaled, lw=1.2, label="t^(2/3) |g|_2^2")
    ax.axhline(c.theta_crit, color="k", ls="--", lw=0.9,
               label=f"theta = {c.theta_crit:.5f}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)


def profile_figure(y, h, path: Path, overlay_limit: bool = True) -> Path:
    """Stretched-frame profile with the indicator limit overlay."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(y, h, lw=1.2, label="h")
    if overlay_limit:
        c = constants()
        ax.plot(y, np.where(np.abs(y) <= c.c_crit, c.theta_crit, 0.0), "k--",
                lw=0.9, label="theta * indicator([-c, c])")
    ax.set_xlabel("y")
    ax.set_ylabel("h")
    ax.legend(fontsize=8)
    return _save(fig, path)


def rescaled_history_figure(taus, E, M, path: Path) -> Path:
    c = constants()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(taus, E, lw=1.2, label="E_h")
    ax.plot(taus, M, lw=1.2, label="M_h")
    ax.axhline(c.theta_crit, color="k", ls="--", lw=0.9, label="theta")
    ax.set_xlabel("tau")
    ax.legend(fontsize=8)
    return _save(fig, path)


def steady_profiles_figure(outcomes, path: Path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for o in outcomes:
        ax1.plot(o.G.grid.nodes(), o.G.values, lw=1.1, label=f"R = {o.R:g}")
    ax1.set_xlabel("r")
    ax1.set_ylabel("G")
    ax1.set_xlim(0, 8)
    ax1.legend(fontsize=8)
    rs = [o.R for o in outcomes]
    ax2.semilogy(rs, [max(o.gap, 1e-300) for o in outcomes], "o-", label="|E mass - l2|")
    ax2.semilogy(rs, [max(abs(o.boundary_flux), 1e-300) for o in outcomes], "s--",
                 label="|boundary flux|")
    ax2.set_xlabel("R")
    ax2.legend(fontsize=8)
    return _save(fig, path)


def decay_figure(taus, w_perp, bound, path: Path, floor: float = None) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.semilogy(taus, w_perp, lw=1.2, label="|W_perp|_2")
    ax.semilogy(taus, bound, "k--", lw=0.9, label="rate envelope")
    if floor is not None and np.isfinite(floor):
        ax.axhline(floor, color="r", ls=":", lw=0.9, label="discrete floor")
    ax.set_xlabel("tau")
    ax.legend(fontsize=8)
    return _save(fig, path)


def fit_figure(t, y, slope, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(t, y, "o", ms=2.5, label="data")
    anchor = y[len(y) // 2] / t[len(t) // 2] ** slope
    ax.loglog(t, anchor * np.asarray(t) ** slope, "k--", lw=0.9,
              label=f"slope {slope:.4f}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)
