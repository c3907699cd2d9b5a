"""Delimited outputs and the figures rendered alongside them.

CSV is the interchange contract: floats are written with repr (shortest
round-trip form), so identical runs produce bit-identical files.  Each
report path can additionally render a matplotlib figure next to its CSV;
figure rendering is cosmetic and can be disabled wholesale.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "write_csv",
    "ensure_outdir",
    "trajectory_header",
    "trajectory_rows",
    "trajectory_figure",
    "energy_figure",
    "besov_figure",
    "fixedpoint_figure",
]


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def trajectory_header():
    return (
        "time", "h2_a", "h2_theta", "besov_a", "besov_theta",
        "linf_a", "linf_theta", "mass", "min_rho", "min_theta",
    )


def trajectory_rows(traj):
    keys = trajectory_header()[1:]
    for i, t in enumerate(traj.times):
        yield (t, *(traj.norms[k][i] for k in keys))


def _save(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _legend(ax):
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)


def trajectory_figure(traj, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    t = traj.times
    for key, label in (
        ("h2_a", r"$H^2$ (a)"),
        ("h2_theta", r"$H^2$ ($\tilde\theta$)"),
        ("besov_a", "critical Besov (a)"),
        ("besov_theta", r"critical Besov ($\tilde\theta$)"),
    ):
        series = traj.norms[key]
        positive = series > 0
        if positive.any():
            ax1.semilogy(t[positive], series[positive], label=label)
    ax1.set_xlabel("time")
    ax1.set_ylabel("norm")
    _legend(ax1)
    ax1.set_title("norm decay")

    ax2.plot(t, traj.norms["min_rho"], label=r"min $\rho$")
    ax2.plot(t, traj.norms["min_theta"], label=r"min $\theta$")
    mass = traj.norms["mass"]
    ax2.plot(t, mass / mass[0], label="mass / mass(0)")
    ax2.set_xlabel("time")
    _legend(ax2)
    ax2.set_title("positivity and mass")
    _save(fig, path)


def energy_figure(report, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax1.plot(report.times, report.X)
    ax1.set_xlabel("time")
    ax1.set_ylabel("X(t)")
    ax1.set_title("energy functional")
    for series, label in ((report.residual1, "balance 1"), (report.residual2, "balance 2")):
        positive = series > 0
        if positive.any():
            ax2.semilogy(report.times[positive], series[positive], label=label)
    ax2.set_xlabel("time")
    ax2.set_ylabel("identity defect")
    _legend(ax2)
    ax2.set_title("L2 balance defects")
    _save(fig, path)


def besov_figure(js, weighted_by_component, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for label, weighted in weighted_by_component.items():
        w = np.asarray(weighted)
        positive = w > 0
        if positive.any():
            ax.semilogy(np.asarray(js)[positive], w[positive], "o-", label=label)
    ax.set_xlabel("block index j")
    ax.set_ylabel(r"$2^{js}\,\|\Delta_j u\|_{L^p}$")
    _legend(ax)
    ax.set_title("dyadic block spectrum")
    _save(fig, path)


def fixedpoint_figure(report, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax1.plot(range(len(report.iterates)), report.iterates, "o-")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("E(T) norm")
    ax1.set_title("iterate norms")
    if report.differences:
        diffs = np.asarray(report.differences)
        positive = diffs > 0
        its = np.arange(1, len(diffs) + 1)
        if positive.any():
            ax2.semilogy(its[positive], diffs[positive], "o-", label="difference")
    if report.contraction_ratios:
        ax2.plot(
            range(2, len(report.contraction_ratios) + 2),
            report.contraction_ratios,
            "s--",
            label="ratio",
        )
    ax2.set_xlabel("iteration")
    _legend(ax2)
    ax2.set_title("contraction history")
    _save(fig, path)


def ensure_outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
