"""Figure rendering for experiment summaries.

Draws the convergence curves (median best value so far per arm, with an
interquartile band) and the distribution of final best values, saved as
PNG files next to the CSV/JSON output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {"newton-bo": "tab:blue", "sobol": "tab:gray", "cmaes": "tab:orange"}


def render_figures(summary: dict, out_dir: Path) -> list[Path]:
    """Render the summary's trajectory and final-value figures to out_dir."""
    out_dir = Path(out_dir)
    arms = summary["arms"]
    spec = summary["spec"]
    title = f"{spec['function']} (D={spec['dim']})"
    written = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, arm in arms.items():
        color = _COLORS.get(name)
        median = arm["best_trajectory_median"]
        x = range(1, len(median) + 1)
        ax.plot(x, median, label=name, color=color)
        ax.fill_between(
            x, arm["best_trajectory_q25"], arm["best_trajectory_q75"],
            alpha=0.2, color=color, linewidth=0,
        )
    ax.set_xlabel("evaluations")
    ax.set_ylabel("best value found")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "best_so_far.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    names = list(arms)
    ax.boxplot([arms[m]["final_best"] for m in names], tick_labels=names)
    ax.set_ylabel("final best value")
    ax.set_title(title)
    fig.tight_layout()
    path = out_dir / "final_best_box.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
