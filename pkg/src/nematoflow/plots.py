"""Report figures rendered from a diagnostics series (headless backend)."""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import numpy as np


def render_report_figures(records: Sequence, outdir) -> List[Path]:
    """Render the standard report figures to PNG files; returns the paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t = np.array([r.t for r in records])
    energy = np.array([r.energy for r in records])
    avail = np.array([r.available_energy for r in records])
    entropy = np.array([r.entropy for r in records])
    scale = abs(energy[0]) if energy[0] != 0.0 else 1.0
    paths: List[Path] = []

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.4))
    axes[0].plot(t, (energy - energy[0]) / scale, color="tab:blue")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("relative energy defect")
    axes[0].set_title("total energy drift")
    axes[1].plot(t, avail, color="tab:orange")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("available energy")
    axes[1].set_title("available energy")
    fig.tight_layout()
    path = outdir / "energy_budget.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.4))
    axes[0].plot(t, entropy, color="tab:green")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("total entropy")
    axes[0].set_title("entropy growth")
    if len(t) > 1:
        inc = np.diff(entropy)
        colors = np.where(inc < 0.0, "tab:red", "tab:gray")
        axes[1].bar(t[1:], inc, width=0.8 * np.min(np.diff(t)), color=colors)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("entropy increment")
    axes[1].set_title("per-record increments (red: negative)")
    fig.tight_layout()
    path = outdir / "entropy.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    for name, color in (("u_l2", "tab:blue"), ("grad_theta_l2", "tab:red"),
                        ("grad_d_l2", "tab:purple"), ("d_drift", "tab:gray")):
        series = np.array([getattr(r, name) for r in records])
        positive = series > 0.0
        if np.any(positive):
            ax.semilogy(t[positive], series[positive], label=name, color=color)
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title("field norms")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = outdir / "decay_norms.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)
    return paths
