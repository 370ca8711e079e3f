"""Figure rendering for the report paths (headless, PNG to file)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .integrate import Trajectory
from .region import ControlPolynomials, RegionParams
from .ratpoly import peval_float

__all__ = [
    "plot_shells",
    "plot_energy",
    "plot_region",
    "plot_control_polynomials",
    "plot_min_component",
    "plot_psi",
    "plot_weighted_sup",
    "plot_occupation",
]

_DPI = 150


def _save(fig, out) -> Path:
    out = Path(out)
    fig.tight_layout()
    fig.savefig(out, dpi=_DPI)
    plt.close(fig)
    return out


def plot_shells(traj: Trajectory, out) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = traj.n_max
    colors = plt.cm.viridis(np.linspace(0, 1, n))
    floor = 1e-30
    for i in range(n):
        ax.semilogy(
            traj.ts,
            np.maximum(np.abs(traj.ys[:, i]), floor),
            color=colors[i],
            lw=0.9,
            label=f"$|X_{{{i + 1}}}|$" if n <= 10 else None,
        )
    ax.set_xlabel("t")
    ax.set_ylabel("|X_n|")
    if n <= 10:
        ax.legend(fontsize=7, ncol=2)
    ax.set_title("shell amplitudes")
    return _save(fig, out)


def plot_energy(ts: np.ndarray, E: np.ndarray, out, guide_slope: float | None = -2.0) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    pos = (ts > 0) & (E > 0)
    ax.loglog(ts[pos], E[pos], "-", lw=1.2, label="E(t)")
    if guide_slope is not None and pos.sum() > 2:
        t_ref = ts[pos][-1]
        e_ref = E[pos][-1]
        tg = np.array([t_ref / 100, t_ref])
        ax.loglog(tg, e_ref * (tg / t_ref) ** guide_slope, "k--", lw=0.8,
                  label=f"slope {guide_slope:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("E")
    ax.legend()
    ax.set_title("total energy")
    return _save(fig, out)


def plot_region(r: RegionParams, out, pairs: np.ndarray | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = np.linspace(0.0, 1.0, 400)
    h = np.maximum(peval_float(r.h_poly, xs), 0.0)
    g = np.minimum(peval_float(r.g_poly, xs), 1.0)
    ax.fill_between(xs, h, g, where=g >= h, alpha=0.25, label="A")
    ax.plot(xs, h, lw=1.2, label="h")
    ax.plot(xs, g, lw=1.2, label="g")
    if pairs is not None and len(pairs):
        ax.plot(pairs[:, 0], pairs[:, 1], ".", ms=1.5, alpha=0.4,
                label="trajectory pairs")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("$Y_n$")
    ax.set_ylabel("$Y_{n+1}$")
    ax.legend(loc="upper left", fontsize=8)
    ax.set_title("invariant region")
    return _save(fig, out)


def plot_control_polynomials(cp: ControlPolynomials, out) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(8, 6))
    for ax, (name, p, dom) in zip(axes.ravel(), cp.named()):
        xs = np.linspace(float(dom[0]), float(dom[1]), 600)
        ax.plot(xs, peval_float(p, xs), lw=1.2)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_title(name)
        ax.set_xlabel("x")
    fig.suptitle("control polynomials")
    return _save(fig, out)


def plot_min_component(ts: np.ndarray, min_x: np.ndarray, out, tau: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ts, min_x, lw=1.0)
    ax.axhline(0.0, color="k", lw=0.6)
    if tau is not None:
        ax.axvline(tau, color="r", ls="--", lw=0.9, label=f"tau = {tau:.4g}")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("min_n X_n")
    ax.set_title("positivization")
    return _save(fig, out)


def plot_psi(ts: np.ndarray, psi: np.ndarray, out) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ts, np.maximum(psi, 1e-300), lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("psi_N")
    ax.set_title("weighted gap between runs")
    return _save(fig, out)


def plot_weighted_sup(ts: np.ndarray, vals: np.ndarray, out,
                      envelope: np.ndarray | None = None,
                      uniform_level: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = ts > 0
    ax.loglog(ts[pos], vals[pos], lw=1.0, label="weighted sup")
    if envelope is not None:
        ax.loglog(ts[pos], envelope[pos], "k--", lw=0.8, label="decay envelope")
    if uniform_level is not None:
        ax.axhline(uniform_level, color="r", ls=":", lw=0.8, label="12x initial")
    ax.set_xlabel("t")
    ax.set_ylabel("sup_n w_n X_n")
    ax.legend(fontsize=8)
    ax.set_title("critical weighted sup")
    return _save(fig, out)


def plot_occupation(names, measured, bounds, out) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    idx = np.arange(len(names))
    ax.bar(idx - 0.2, measured, width=0.4, label="measured")
    ax.bar(idx + 0.2, bounds, width=0.4, label="bound")
    ax.set_yscale("log")
    ax.set_xticks(idx)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("occupation measure")
    ax.legend()
    ax.set_title("occupation: measured vs bound")
    return _save(fig, out)
