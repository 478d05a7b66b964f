"""Flowchart rendering to image files via matplotlib.

Layout is a single top-to-bottom column following the sequential path;
composite steps are drawn as shaded containers behind their sub-steps,
and jump rules as dashed arcs on the right with the condition as label.
"""

from __future__ import annotations

import textwrap

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrowPatch, FancyBboxPatch

from .flowgraph import EdgeKind, FlowGraph, NodeKind

_BOX_W = 4.2
_BOX_H = 0.9
_GAP = 0.7


def save_flowchart(graph: FlowGraph, path: str, dpi: int = 150) -> None:
    """Draw ``graph`` and write it to ``path`` (format from the extension)."""
    order = [n for n in graph.nodes if n.kind in (NodeKind.START, NodeKind.LEAF, NodeKind.END)]
    composites = {n.uid: n for n in graph.nodes if n.kind == NodeKind.COMPOSITE}
    centers: dict[str, tuple[float, float]] = {}
    total_h = len(order) * (_BOX_H + _GAP)

    fig, ax = plt.subplots(figsize=(9, max(3.0, 0.75 * len(order) + 1.5)))
    ax.set_xlim(-1.5, 9.5)
    ax.set_ylim(-0.5, total_h + 0.5)
    ax.axis("off")

    for i, node in enumerate(order):
        y = total_h - i * (_BOX_H + _GAP)
        centers[node.uid] = (_BOX_W / 2, y)
        if node.kind in (NodeKind.START, NodeKind.END):
            label = "Start" if node.kind == NodeKind.START else "End"
            ax.add_patch(
                FancyBboxPatch(
                    (_BOX_W / 2 - 0.8, y - 0.3),
                    1.6,
                    0.6,
                    boxstyle="round,pad=0.1,rounding_size=0.3",
                    facecolor="#dfe8f5",
                    edgecolor="#3a5a8c",
                )
            )
            ax.text(_BOX_W / 2, y, label, ha="center", va="center", fontsize=9)
        else:
            ax.add_patch(
                FancyBboxPatch(
                    (0, y - _BOX_H / 2),
                    _BOX_W,
                    _BOX_H,
                    boxstyle="round,pad=0.05",
                    facecolor="white",
                    edgecolor="#333333",
                )
            )
            title = f"{node.label}: {node.name}"
            ax.text(
                _BOX_W / 2,
                y,
                textwrap.shorten(title, width=52, placeholder="..."),
                ha="center",
                va="center",
                fontsize=8,
            )

    # containers behind the sub-steps of each composite
    member_ys: dict[str, list[float]] = {}
    for node in order:
        if node.kind != NodeKind.LEAF:
            continue
        parent = node.parent
        while parent is not None:
            member_ys.setdefault(parent, []).append(centers[node.uid][1])
            parent = composites[parent].parent if parent in composites else None
    for depth, (uid, ys) in enumerate(sorted(member_ys.items())):
        comp = composites.get(uid)
        if comp is None:
            continue
        pad = 0.25 + 0.12 * depth
        ax.add_patch(
            FancyBboxPatch(
                (-pad, min(ys) - _BOX_H / 2 - pad),
                _BOX_W + 2 * pad,
                max(ys) - min(ys) + _BOX_H + 2 * pad,
                boxstyle="round,pad=0.02",
                facecolor="#f4f4f4",
                edgecolor="#999999",
                linestyle=":",
                zorder=0,
            )
        )
        ax.text(
            -pad + 0.1,
            max(ys) + _BOX_H / 2 + pad - 0.05,
            f"{comp.label}: {comp.name}",
            fontsize=7,
            color="#666666",
            va="top",
        )

    for edge in graph.edges:
        if edge.src not in centers or edge.dst not in centers:
            continue
        (x1, y1), (x2, y2) = centers[edge.src], centers[edge.dst]
        if edge.kind == EdgeKind.SEQUENTIAL:
            ax.add_patch(
                FancyArrowPatch(
                    (x1, y1 - _BOX_H / 2),
                    (x2, y2 + _BOX_H / 2),
                    arrowstyle="-|>",
                    mutation_scale=12,
                    color="#333333",
                )
            )
        else:
            going_up = y2 > y1
            rad = 0.35 if going_up else -0.35
            arc = FancyArrowPatch(
                (_BOX_W, y1),
                (_BOX_W, y2),
                arrowstyle="-|>",
                mutation_scale=12,
                color="#b03030",
                linestyle="--",
                connectionstyle=f"arc3,rad={rad}",
            )
            ax.add_patch(arc)
            ax.text(
                _BOX_W + 1.2,
                (y1 + y2) / 2,
                textwrap.shorten(edge.condition or "", width=30, placeholder="..."),
                fontsize=7,
                color="#b03030",
                ha="left",
                va="center",
            )

    if graph.task:
        ax.set_title(textwrap.shorten(graph.task, width=80, placeholder="..."), fontsize=10)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
