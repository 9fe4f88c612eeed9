"""Report figures, written to files next to the delimited tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# fixed colours so a model looks the same in every figure
COLORS = {
    "Random": "#9e9e9e",
    "Recency": "#8c6d31",
    "Frequency": "#e6550d",
    "MIM": "#3182bd",
    "Hawkes": "#31a354",
}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def semester_curves(reports, path):
    """Weighted RBO per test semester, one panel per report."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(reports), figsize=(3.4 * len(reports), 2.6), squeeze=False, sharey=True)
        for ax, rep in zip(axes[0], reports):
            for m in rep.models:
                sem = rep.semester_scores(m)
                ax.plot(list(sem), list(sem.values()), marker="o", ms=3, label=m, color=COLORS.get(m))
            ax.set_title(rep.label, fontsize=9)
            ax.set_xlabel("semester")
            ax.xaxis.set_major_locator(MaxNLocator(integer=True))
            ax.set_ylim(0, 1)
        axes[0][0].set_ylabel("weighted RBO")
        axes[0][-1].legend(frameon=False, loc="best")
        return _save(fig, path)


def score_bars(reports, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.2 + 1.4 * len(reports), 2.6))
        models = []
        for rep in reports:
            for m in rep.models:
                if m not in models:
                    models.append(m)
        width = 0.8 / max(len(models), 1)
        for i, m in enumerate(models):
            xs, ys, errs = [], [], []
            for j, rep in enumerate(reports):
                if m in rep.models:
                    xs.append(j + (i - (len(models) - 1) / 2) * width)
                    ys.append(rep.final_score(m))
                    errs.append(rep.group_variance(m) ** 0.5)
            ax.bar(xs, ys, width, yerr=errs, label=m, color=COLORS.get(m), capsize=2)
        ax.set_xticks(range(len(reports)))
        ax.set_xticklabels([r.label for r in reports])
        ax.set_ylabel("final weighted RBO")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False, fontsize=7, ncol=2)
        return _save(fig, path)
