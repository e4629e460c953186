"""Figure rendering for CLI reports.

Only command-line report paths import this module, keeping matplotlib
out of the library layer.  Every helper writes a file and returns its
path; the Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_loss_curves(path, traces: dict) -> str:
    """Semilog loss trajectories, one labeled line per trace."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, trace in traces.items():
        ax.semilogy(range(len(trace)), trace, label=str(label))
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.grid(True, alpha=0.3)
    if len(traces) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_fidelity_sweep(path, rows) -> str:
    """Mean fidelity vs shot budget, one errorbar line per scheme."""
    schemes = sorted({r["scheme"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme in schemes:
        budgets = sorted({r["shots"] for r in rows if r["scheme"] == scheme})
        means, errs = [], []
        for b in budgets:
            vals = [r["fidelity"] for r in rows
                    if r["scheme"] == scheme and r["shots"] == b
                    and r["fidelity"] is not None]
            means.append(np.mean(vals))
            errs.append(np.std(vals) / max(1, np.sqrt(len(vals))))
        ax.errorbar(budgets, means, yerr=errs, marker="o", capsize=3,
                    label=scheme)
    ax.set_xscale("log")
    ax.set_xlabel("total shots")
    ax.set_ylabel("fidelity")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_correlator_heatmaps(path, reconstructed, reference=None,
                             op: str = "Y") -> str:
    """Connected-correlator matrix of the reconstruction, with an
    optional reference panel."""
    mats = [("reconstructed", reconstructed)]
    if reference is not None:
        mats.append(("reference", reference))
    fig, axes = plt.subplots(1, len(mats), figsize=(5 * len(mats), 4),
                             squeeze=False)
    vmax = max(np.abs(m).max() for _, m in mats) or 1.0
    for ax, (title, mat) in zip(axes[0], mats):
        im = ax.imshow(mat, vmin=-vmax, vmax=vmax, cmap="RdBu_r")
        ax.set_title(f"{title}  <{op}{op}> connected")
        ax.set_xlabel("qubit")
        ax.set_ylabel("qubit")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_holdout_scatter(path, rows) -> str:
    """Predicted vs measured expectations for withheld observables."""
    pred = [r["predicted"] for r in rows]
    meas = [r["measured"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    lim = max(0.1, *(abs(v) for v in pred + meas)) * 1.1
    ax.plot([-lim, lim], [-lim, lim], "k--", alpha=0.5, lw=1)
    ax.scatter(meas, pred, s=25)
    ax.set_xlabel("measured expectation")
    ax.set_ylabel("predicted expectation")
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
