"""Report figures rendered off-screen with matplotlib's Agg canvas.

Figures are built on ``matplotlib.figure.Figure`` directly, never through
pyplot, so no global figure state or GUI backend is touched.
"""

from pathlib import Path

import numpy as np

RC = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _figure(width, height):
    import matplotlib
    from matplotlib.figure import Figure

    matplotlib.rcParams.update(RC)
    return Figure(figsize=(width, height), dpi=120, layout="constrained")


def fold_traces_figure(report, max_cols=3):
    """One panel per fold: measured and predicted force against time."""
    n = len(report.folds)
    cols = min(max_cols, n)
    rows = int(np.ceil(n / cols))
    fig = _figure(3.2 * cols, 1.9 * rows)
    axes = fig.subplots(rows, cols, squeeze=False, sharey=True)
    for ax, fold in zip(axes.flat, report.folds):
        ax.plot(fold.t, fold.y_true, lw=0.8, color="0.2", label="measured")
        ax.plot(fold.t, fold.y_pred, lw=0.8, color="tab:red", alpha=0.8, label="predicted")
        ax.set_title(f"{fold.held_out_session}  MAE {fold.mae:.2f}")
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    for ax in axes[-1]:
        ax.set_xlabel("time (s)")
    for ax in axes[:, 0]:
        ax.set_ylabel(f"force ({report.units})")
    axes.flat[0].legend(loc="upper left", frameon=False)
    return fig


def fold_metrics_figure(report):
    """Per-fold MAE and RMSE bars, with the outlier threshold line."""
    fig = _figure(6.0, 2.6)
    ax = fig.subplots()
    idx = np.arange(len(report.folds))
    ax.bar(idx - 0.2, [f.mae for f in report.folds], width=0.4, label="MAE")
    ax.bar(idx + 0.2, [f.rmse for f in report.folds], width=0.4, label="RMSE")
    sd_mult = report.config.get("evaluation", {}).get("outlier_sd_multiplier", 2.0)
    threshold = report.mean("mae") + sd_mult * report.sd("mae")
    ax.axhline(threshold, ls="--", lw=0.8, color="0.4", label="outlier threshold")
    ax.set_xticks(idx, [f.held_out_session for f in report.folds], rotation=60, ha="right")
    ax.set_ylabel(report.units)
    ax.legend(frameon=False, ncols=3)
    return fig


def scatter_figure(report):
    fig = _figure(3.4, 3.4)
    ax = fig.subplots()
    y_true = np.concatenate([f.y_true for f in report.folds])
    y_pred = np.concatenate([f.y_pred for f in report.folds])
    # thin the cloud; every tenth sample is plenty for a visual check
    ax.scatter(y_true[::10], y_pred[::10], s=1, alpha=0.3, rasterized=True)
    lo, hi = float(min(y_true.min(), y_pred.min())), float(max(y_true.max(), y_pred.max()))
    ax.plot([lo, hi], [lo, hi], lw=0.8, color="0.3")
    ax.set_xlabel(f"measured ({report.units})")
    ax.set_ylabel(f"predicted ({report.units})")
    ax.set_aspect("equal")
    return fig


def write_report_figures(report, out_dir, fmt="png"):
    """Render every report figure into ``out_dir``; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    figures = {
        "fold_traces": fold_traces_figure(report),
        "fold_metrics": fold_metrics_figure(report),
        "scatter": scatter_figure(report),
    }
    paths = []
    for name, fig in figures.items():
        path = out_dir / f"{report.kind}_{name}.{fmt}"
        fig.savefig(path)
        paths.append(path)
    return paths
