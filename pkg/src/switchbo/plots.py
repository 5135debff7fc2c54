"""Figure rendering for the summary outputs.

Each summarize mode gets companion PNGs next to its CSVs: the p-sweep
curve with confidence bands and the median-best-p trend, or the mean GAP
per policy across switch costs.
"""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_psweep_curve(csv_path: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    costs = sorted({float(r["switch_cost"]) for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for cost in costs:
        pts = sorted((float(r["p"]), float(r["mean_gap"]),
                      float(r["ci_halfwidth"]) if r["ci_halfwidth"] else 0.0)
                     for r in rows if float(r["switch_cost"]) == cost)
        p = [a for a, _, _ in pts]
        mean = [b for _, b, _ in pts]
        ci = [c for _, _, c in pts]
        line, = ax.plot(p, mean, marker="o", markersize=3, label=f"switch cost {cost:g}")
        ax.fill_between(p, [m - c for m, c in zip(mean, ci)],
                        [m + c for m, c in zip(mean, ci)],
                        alpha=0.15, color=line.get_color())
    ax.set_xlabel("reuse probability p")
    ax.set_ylabel("mean GAP")
    ax.set_title("Reuse-probability sweep (95% CI bands)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_best_p(csv_path: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    pts = sorted((float(r["switch_cost"]), float(r["median_best_p"])) for r in rows)
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.plot([a for a, _ in pts], [b for _, b in pts], marker="s")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("switch cost")
    ax.set_ylabel("median best p")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Best reuse probability vs switch cost")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_gap_vs_cost(csv_path: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    policies = sorted({r["policy"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for policy in policies:
        pts = sorted((float(r["cost"]), float(r["mean_gap"]))
                     for r in rows if r["policy"] == policy)
        ax.plot([a for a, _ in pts], [b for _, b in pts], marker="o",
                markersize=4, label=policy)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("switch cost")
    ax.set_ylabel("mean GAP (best configuration per family)")
    ax.set_title("Policy comparison across switch costs")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_summary_figures(mode: str, csv_paths: dict[str, str],
                           out_dir: str) -> dict[str, str]:
    """Render the figures belonging to a summarize mode; returns their paths."""
    out: dict[str, str] = {}
    if mode == "psweep":
        png = os.path.join(out_dir, "psweep_curve.png")
        render_psweep_curve(csv_paths["psweep_curve"], png)
        out["psweep_curve_png"] = png
        png = os.path.join(out_dir, "best_p_vs_cost.png")
        render_best_p(csv_paths["best_p_by_cost"], png)
        out["best_p_png"] = png
    elif mode == "table2":
        png = os.path.join(out_dir, "gap_vs_cost.png")
        render_gap_vs_cost(csv_paths["gap_vs_cost"], png)
        out["gap_vs_cost_png"] = png
    return out
