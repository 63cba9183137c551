"""Matplotlib figures written next to the CSV outputs."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def plot_psnr_traces(traces, path, title="PSNR vs. iteration"):
    """Plot one PSNR curve per labelled trace, e.g. ``{"GAP": trace, ...}``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        for label, trace in traces.items():
            it = [r.iteration for r in trace]
            ax.plot(it, trace.psnr, label=label, lw=1.2)
        ax.set_xlabel("iteration")
        ax.set_ylabel("PSNR (dB)")
        ax.set_title(title)
        if len(traces) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_report(report, path):
    """Heatmap of dataset-averaged PSNR, frameworks by TV variant."""
    fws = list(dict.fromkeys(fw for fw, _ in report.grid))
    tags = list(dict.fromkeys(v.tag for _, v in report.grid))
    grid = np.full((len(fws), len(tags)), np.nan)
    for fw, v in report.grid:
        grid[fws.index(fw), tags.index(v.tag)] = report.average(fw, v.tag)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(tags), 0.9 + 0.5 * len(fws)))
        im = ax.imshow(grid, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(tags)), [t.upper() for t in tags], rotation=30, ha="right")
        ax.set_yticks(range(len(fws)), [f.upper() for f in fws])
        for i in range(len(fws)):
            for j in range(len(tags)):
                if np.isfinite(grid[i, j]):
                    ax.text(j, i, f"{grid[i, j]:.2f}", ha="center", va="center",
                            color="w", fontsize=7)
        fig.colorbar(im, ax=ax, label="mean PSNR (dB)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
