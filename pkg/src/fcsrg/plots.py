"""Figure rendering for the report paths.

The CSV/ndrec files stay the canonical outputs; these figures are a quick
visual companion written next to them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_sweep(report, path) -> None:
    """Error and accuracy against compression ratio, one line per solver."""
    solvers = []
    for cell in report.cells:
        if cell.solver not in solvers:
            solvers.append(cell.solver)
    fig, (ax_err, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.6))
    for solver in solvers:
        cells = [c for c in report.cells if c.solver == solver]
        ratios = [c.ratio for c in cells]
        summaries = [c.summary() for c in cells]
        errs = [s["mean_error"] for s in summaries]
        bars = [s["stderr_error"] for s in summaries]
        ax_err.errorbar(ratios, errs, yerr=bars, marker="o", capsize=3,
                        label=solver)
        accs = [(c.ratio, s["mean_accuracy"]) for c, s in zip(cells, summaries)
                if s["mean_accuracy"] is not None]
        if accs:
            ax_acc.plot([a[0] for a in accs], [a[1] for a in accs],
                        marker="s", label=solver)
    ax_err.set_xscale("log", base=2)
    ax_err.set_xlabel("compression ratio N/M")
    ax_err.set_ylabel("mean reconstruction error")
    ax_err.legend(fontsize=8)
    ax_acc.set_xscale("log", base=2)
    ax_acc.set_ylim(-0.05, 1.05)
    ax_acc.set_xlabel("compression ratio N/M")
    ax_acc.set_ylabel("codeword accuracy")
    if ax_acc.get_legend_handles_labels()[0]:
        ax_acc.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_theory(results: dict, path) -> None:
    """Pass/fail bar per configured check."""
    names = list(results)
    values = [1.0 if results[n] else 0.0 for n in names]
    colors = ["tab:green" if v else "tab:red" for v in values]
    fig, ax = plt.subplots(figsize=(max(4, 1.4 * len(names)), 3))
    ax.bar(range(len(names)), [1.0] * len(names), color=colors)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_yticks([])
    for i, v in enumerate(values):
        ax.text(i, 0.5, "pass" if v else "FAIL", ha="center", va="center",
                color="white", fontweight="bold")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
