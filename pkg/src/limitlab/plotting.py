"""Figure rendering for sweep and hierarchy reports (Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figures(report, outdir, stem: str) -> List[Path]:
    """Write the three standard sweep figures next to the CSV output."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t = np.array([rec.t for rec in report.records])
    paths = []

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(t, report.type1_values(), "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("restricted weak norm of difference")
    ax.set_title(f"{report.family}: type-1 decay")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = outdir / f"{stem}_type1.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for j, lam in enumerate(report.lam_list):
        vals = [rec.type2[j].measure_est for rec in report.records]
        ax.loglog(t, np.maximum(vals, 1e-300), "o-", label=f"lambda={lam:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("measure of {|op - target| > lambda}")
    ax.set_title(f"{report.family}: type-2 decay")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    p = outdir / f"{stem}_type2.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for j, lam in enumerate(report.lam_list):
        vals = [rec.type3_op[j].measure_est for rec in report.records]
        (line,) = ax.semilogx(t, vals, "o-", label=f"operator, lambda={lam:g}")
        ax.axhline(
            report.type3_target[j].measure_est,
            color=line.get_color(),
            linestyle="--",
            alpha=0.6,
        )
    ax.set_xlabel("t")
    ax.set_ylabel("level-set measure")
    ax.set_title(f"{report.family}: type-3 (dashed = target)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    p = outdir / f"{stem}_type3.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)
    return paths


def render_hierarchy_figure(report, outdir, stem: str) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t = np.array(report.t_list)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.2, 3.4))
    for j, lam in enumerate(report.lam_list):
        ax1.loglog(t, np.maximum(report.type2[:, j], 1e-300), "o-", label=f"lambda={lam:g}")
    ax1.set_xlabel("t")
    ax1.set_ylabel("type-2 measure")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)
    ax2.semilogx(t, report.weak_norms, "s-", label="restricted weak norm")
    ax2.axhline(report.full_space_reference, color="k", linestyle="--", label="full-space value")
    ax2.set_xlabel("t")
    ax2.legend()
    ax2.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = outdir / f"{stem}_hierarchy.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    return p


def render_dini_figure(result, outdir, stem: str) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(result.scales, np.maximum(result.moduli, 1e-300), "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("continuity modulus")
    flag = " (divergence suspected)" if result.divergence_suspected else ""
    ax.set_title(f"integral estimate {result.value:.6g}{flag}")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = outdir / f"{stem}_dini.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    return p
