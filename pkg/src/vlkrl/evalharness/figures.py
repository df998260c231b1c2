"""Matplotlib figures rendered on the report path.

All figures go to files next to the delimited output; nothing opens a
display (Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "figure.figsize": (7.0, 4.2),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
}


def save_training_curves(curves: dict[str, list[dict]], path: str | Path) -> None:
    """Per-seed success rate and mean return against training epoch."""
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for label, rows in sorted(curves.items()):
            epochs = [row["epoch"] for row in rows]
            axes[0].plot(epochs, [row.get("success_rate", 0.0) for row in rows],
                         label=label, linewidth=1.2)
            axes[1].plot(epochs, [row.get("mean_return", 0.0) for row in rows],
                         label=label, linewidth=1.2)
        axes[0].set_xlabel("epoch")
        axes[0].set_ylabel("training success rate")
        axes[1].set_xlabel("epoch")
        axes[1].set_ylabel("mean episode return")
        axes[0].legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, dpi=110)
        plt.close(fig)


def save_failure_breakdown(rates: dict[str, dict[str, float]], path: str | Path) -> None:
    """Bar chart of implicit/explicit failure rates per run label."""
    labels = sorted(rates)
    implicit = [rates[k].get("implicit_failure_rate", 0.0) for k in labels]
    explicit = [rates[k].get("explicit_failure_rate", 0.0) for k in labels]
    x = range(len(labels))
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        width = 0.38
        ax.bar([i - width / 2 for i in x], implicit, width, label="implicit")
        ax.bar([i + width / 2 for i in x], explicit, width, label="explicit")
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=20, ha="right")
        ax.set_ylabel("failure rate (per episode)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=110)
        plt.close(fig)


def save_threshold_drift(curves: dict[str, list[dict]], path: str | Path) -> None:
    """Dynamic gating threshold against epoch, when present in the curves."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        drawn = False
        for label, rows in sorted(curves.items()):
            taus = [row.get("tau") for row in rows]
            if not any(t is not None for t in taus):
                continue
            ax.plot([row["epoch"] for row in rows],
                    [t if t is not None else float("nan") for t in taus],
                    label=label, linewidth=1.2)
            drawn = True
        if not drawn:
            plt.close(fig)
            return
        ax.set_xlabel("epoch")
        ax.set_ylabel("acceptance threshold")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, dpi=110)
        plt.close(fig)


def save_report_figures(report, out_dir: str | Path) -> None:
    out = Path(out_dir)
    if report.curves:
        save_training_curves(report.curves, out / "training_curves.png")
        save_threshold_drift(report.curves, out / "threshold_drift.png")
    save_failure_breakdown(
        {report.config.get("mode", "run"): report.aggregates},
        out / "failure_breakdown.png",
    )
