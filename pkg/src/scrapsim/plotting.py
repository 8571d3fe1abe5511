"""Optional vector-graphic plots derived from run data.

Matplotlib is imported lazily so headless runs without plots never touch it.
All figures are written as SVG.
"""

from __future__ import annotations

import os

import numpy as np


def _mpl():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def populations_plot(trajectory, path: str) -> str:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    n = trajectory.populations.shape[1]
    for i in range(n):
        ax.plot(trajectory.times, trajectory.populations[:, i],
                label=f"P{i}", linewidth=1.2)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return os.path.basename(path)


def eigenvalues_plot(trajectory, path: str) -> str:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    n = trajectory.eigenvalues.shape[1]
    for i in range(n):
        ax.plot(trajectory.times, trajectory.eigenvalues[:, i],
                label=f"mu{i}", linewidth=1.2)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("instantaneous eigenvalue (rad/ns)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return os.path.basename(path)


def adiabaticity_plot(report, path: str) -> str:
    plt = _mpl()
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    top.plot(report.times, report.rabi_rate, label="drive rate")
    top.plot(report.times, report.detuning, label="detuning")
    top.set_ylabel("rad/ns")
    top.legend(fontsize=8)
    bottom.semilogy(report.times, np.maximum(report.margin, 1e-12),
                    label="margin")
    bottom.axhline(report.threshold, color="k", linestyle="--", linewidth=0.8)
    bottom.set_xlabel("t (ns)")
    bottom.set_ylabel("margin")
    bottom.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return os.path.basename(path)


def levels_plot(params, levels, path: str) -> str:
    """Potential profile with the bound levels and scaled wavefunctions."""
    from .circuit import potential_energy

    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    x = levels.grid.points()
    u = potential_energy(params, x)
    ax.plot(x, u, "k", linewidth=1.2)
    span = levels.energies[-1] - levels.energies[0]
    scale = 0.25 * span / max(np.abs(levels.wavefunctions).max(), 1e-12)
    for i in range(levels.n_levels):
        e = levels.energies[i]
        ax.axhline(e, color="grey", linewidth=0.6)
        ax.plot(x, e + scale * levels.wavefunctions[:, i], linewidth=0.9)
    ax.set_xlabel("junction phase")
    ax.set_ylabel("energy (rad/ns)")
    ax.set_ylim(u.min() - 0.1 * span, levels.barrier_energy + span)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return os.path.basename(path)
