"""Figures for experiment outputs (rendered off-screen with the Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402


def auc_boxplot(scores: dict[str, list[float]], title: str):
    """One box per technique with the individual AUCs overlaid."""
    techs = sorted(scores)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([scores[t] for t in techs], showmeans=True)
    ax.set_xticks(range(1, len(techs) + 1), techs)
    rng = np.random.default_rng(0)
    for i, t in enumerate(techs, start=1):
        ax.scatter(i + rng.uniform(-0.08, 0.08, len(scores[t])), scores[t], s=10, alpha=0.6, color="k")
    ax.set_ylabel("AUC")
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    return fig


def linsep_heatmap(cells: list[dict], lambdas, strengths):
    """Training accuracy per (lambda, chain strength) cell; cells missing the bait column are hatched."""
    acc = np.full((len(lambdas), len(strengths)), np.nan)
    bait = np.zeros_like(acc, dtype=bool)
    li = {v: i for i, v in enumerate(lambdas)}
    si = {v: j for j, v in enumerate(strengths)}
    for c in cells:
        i, j = li[c["lambda"]], si[c["chain_strength"]]
        acc[i, j] = c["accuracy"]
        bait[i, j] = c["bait_included"]
    fig, ax = plt.subplots(figsize=(1.2 * len(strengths) + 2.5, 0.5 * len(lambdas) + 1.8))
    im = ax.imshow(acc, cmap="viridis", vmin=min(0.8, np.nanmin(acc)), vmax=1.0, aspect="auto")
    for i in range(acc.shape[0]):
        for j in range(acc.shape[1]):
            ax.text(j, i, f"{acc[i, j]:.3f}", ha="center", va="center", color="w", fontsize=8)
            if not bait[i, j]:
                ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, hatch="//", color="r"))
    ax.set_xticks(range(len(strengths)), [f"{s:g}" for s in strengths])
    ax.set_yticks(range(len(lambdas)), [f"{v:g}" for v in lambdas])
    ax.set_xlabel("relative chain strength")
    ax.set_ylabel("lambda")
    ax.set_title("QBoost training accuracy")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    return fig


def embedding_plot(graph, emb):
    """Chimera qubits by unit cell (top row vertical shore, bottom row horizontal), chains coloured."""
    from .chimera import qubit_coordinates

    m = graph.m

    def xy(q):
        r, c, u, k = qubit_coordinates(m, q)
        return c * 6 + k + 0.5 * u, -(r * 6 + 2 * u)

    fig, ax = plt.subplots(figsize=(6, 6))
    segments = [(xy(a), xy(b)) for a, b in graph.edges]
    ax.add_collection(LineCollection(segments, colors="0.85", linewidths=0.4, zorder=0))
    cmap = plt.get_cmap("tab20")
    for v, chain in emb.chains.items():
        pts = np.array([xy(q) for q in sorted(chain)])
        ax.scatter(pts[:, 0], pts[:, 1], s=12, color=cmap(v % 20), zorder=2)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title(f"{len(emb)} chains, {emb.num_qubits} qubits on C{m}")
    fig.tight_layout()
    return fig
