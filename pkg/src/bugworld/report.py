"""Dataset reporting: a per-step CSV summary plus rendered figures.

Outputs land next to each other in the chosen directory: report.csv,
bug_fraction.png (labelled pixel share per step), trajectory.png
(top-down agent path) and bug_totals.png (labelled pixels per bug).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .datasets import iterate, load_manifest


def build_report(dataset_dir, out_dir=None) -> dict:
    """Summarize a dataset; returns paths of the written artifacts."""
    root = Path(dataset_dir)
    out = Path(out_dir) if out_dir is not None else root
    out.mkdir(parents=True, exist_ok=True)

    manifest = load_manifest(root)
    palette = {name: tuple(int(c) for c in color)
               for name, color in manifest["palette"].items()}
    by_color = {color: name for name, color in palette.items()}

    steps = []
    fractions = []
    xs, zs = [], []
    totals = {name: 0 for name in palette}
    rows = []
    for rec in iterate(root):
        h, w, _ = rec.mask.shape
        npix = h * w
        flat = rec.mask.reshape(-1, 3)
        labelled = int(np.count_nonzero(flat.any(axis=1)))
        per_bug_here = {}
        if labelled:
            colors, counts = np.unique(flat, axis=0, return_counts=True)
            for color, count in zip(colors.tolist(), counts.tolist()):
                name = by_color.get(tuple(color))
                if name is not None:
                    totals[name] += int(count)
                    per_bug_here[name] = int(count)
        steps.append(rec.step)
        fractions.append(labelled / npix)
        if rec.state is not None:
            xs.append(rec.state[0])
            zs.append(rec.state[2])
        rows.append({
            "step": rec.step,
            "action": "" if rec.action is None else rec.action,
            "bug_pixel_fraction": f"{labelled / npix:.6f}",
            "active_bugs": ";".join(rec.active_bugs),
            "labelled_bugs": ";".join(sorted(per_bug_here)),
            "pos_x": f"{rec.state[0]:.4f}" if rec.state else "",
            "pos_y": f"{rec.state[1]:.4f}" if rec.state else "",
            "pos_z": f"{rec.state[2]:.4f}" if rec.state else "",
        })

    csv_path = out / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    fraction_path = out / "bug_fraction.png"
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(steps, fractions, lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("labelled pixel fraction")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(fraction_path, dpi=100)
    plt.close(fig)

    traj_path = out / "trajectory.png"
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(xs, zs, lw=0.8)
    if xs:
        ax.plot(xs[0], zs[0], "go", label="start")
        ax.plot(xs[-1], zs[-1], "rs", label="end")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(traj_path, dpi=100)
    plt.close(fig)

    totals_path = out / "bug_totals.png"
    names = [n for n in palette if totals[n] > 0]
    fig, ax = plt.subplots(figsize=(8, 4))
    if names:
        values = [totals[n] for n in names]
        colors = [tuple(v / 255.0 for v in palette[n]) for n in names]
        ax.bar(range(len(names)), values, color=colors)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("labelled pixels")
    fig.tight_layout()
    fig.savefig(totals_path, dpi=100)
    plt.close(fig)

    return {
        "csv": str(csv_path),
        "figures": [str(fraction_path), str(traj_path), str(totals_path)],
        "steps": len(steps),
        "totals": totals,
    }
