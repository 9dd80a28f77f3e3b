"""SVG figures for embeddings, ROC curves, feature ranking and class balance.

Output is deterministic: a fixed SVG hash salt and no date metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "svg.hashsalt": "nidspipe",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "figure.dpi": 100,
})


def save_svg(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def _class_colors(classes):
    cmap = plt.get_cmap("tab10")
    return {c: cmap(i % 10) for i, c in enumerate(classes)}


def plot_embedding(emb, path, title: str | None = None) -> Path:
    """Scatter the first two embedding axes, one color per class."""
    classes = list(dict.fromkeys(sorted(emb.labels)))
    colors = _class_colors(classes)
    labels = np.asarray(emb.labels, dtype=object)
    fig, ax = plt.subplots(figsize=(6, 5))
    for c in classes:
        pts = emb.coords[labels == c]
        ax.scatter(pts[:, 0], pts[:, 1], s=4, color=colors[c], label=f"{c} ({len(pts)})",
                   alpha=0.7, linewidths=0)
    ax.set_xlabel(f"{emb.method} 1")
    ax.set_ylabel(f"{emb.method} 2")
    ax.set_title(title or f"{emb.method.upper()} embedding ({len(labels)} flows)")
    if emb.dim == 3:
        ax.text(0.01, 0.01, "3-D embedding: axes 1-2 shown", transform=ax.transAxes,
                fontsize=7, va="bottom")
    ax.legend(markerscale=3, loc="best", frameon=False)
    return save_svg(fig, path)


def plot_roc(curves: dict, aucs: dict, path, title: str = "ROC curves") -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    for name, curve in curves.items():
        ax.plot(curve.fpr, curve.tpr, lw=1.2, label=f"{name} (AUC {aucs[name]:.3f})")
    ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="grey")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("Detection rate")
    ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    return save_svg(fig, path)


def plot_feature_ranking(ranked, path, n_selected: int | None = None,
                         max_bars: int = 40) -> Path:
    entries = list(ranked.entries)[:max_bars]
    names = [n for n, _ in entries][::-1]
    scores = [s for _, s in entries][::-1]
    fig, ax = plt.subplots(figsize=(6, max(3, 0.18 * len(entries))))
    colors = ["tab:blue" if n_selected is None or i >= len(entries) - n_selected else "lightgrey"
              for i in range(len(entries))]
    ax.barh(names, scores, color=colors)
    ax.set_xlabel(f"mutual information ({ranked.units})")
    ax.set_title("Mutual information ranking of features")
    return save_svg(fig, path)


def plot_class_distribution(counts: dict, path, title: str = "Traffic type distribution") -> Path:
    names = list(counts)
    values = [counts[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, values, color="tab:blue")
    ax.set_yscale("log")
    ax.set_ylabel("records")
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=45)
    return save_svg(fig, path)


def plot_explained_variance(ratios, path) -> Path:
    ratios = np.asarray(ratios)
    idx = np.arange(1, len(ratios) + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(idx, ratios, color="tab:blue", label="component")
    ax.step(idx, np.cumsum(ratios), where="mid", color="tab:orange", label="cumulative")
    ax.set_xlabel("principal component")
    ax.set_ylabel("explained variance ratio")
    ax.set_xticks(idx)
    ax.set_title(f"PCA explained variance (total {ratios.sum():.4f})")
    ax.legend(frameon=False)
    return save_svg(fig, path)


def plot_metrics(metrics: dict, path) -> Path:
    """Grouped bars of accuracy, detection rate and FPR (percent) per classifier."""
    names = list(metrics)
    keys = [("accuracy", "Accuracy"), ("detection_rate", "Detection rate"),
            ("false_positive_rate", "False positive rate")]
    x = np.arange(len(names))
    width = 0.27
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i, (key, lab) in enumerate(keys):
        ax.bar(x + (i - 1) * width, [100 * metrics[n][key] for n in names], width, label=lab)
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylabel("percent")
    ax.set_title("Binary classification metrics")
    ax.legend(frameon=False, fontsize=7)
    return save_svg(fig, path)
