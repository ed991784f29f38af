"""Deterministic SVG scatter of a 2-D projection colored by cluster.

Output bytes depend only on the inputs: coordinates are formatted to fixed
precision, the palette is a pure function of the cluster count, and markers
are emitted in row order. That keeps golden-file comparisons exact.
"""

import colorsys
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError
from .validation import check_labels, check_matrix

MARGIN = 40.0
LEGEND_ROW = 18


@dataclass
class ScatterSpec:
    """File-level description of one scatter: where the 2-D projection and
    the assignments live, plus rendering options."""
    projection_path: str
    labels_path: str
    point_radius: float = 3.0
    width: int = 800
    height: int = 600
    highlight: list[int] = field(default_factory=list)


def palette(k: int) -> list[str]:
    """k visually distinct hex colors from an even hue rotation."""
    colors = []
    for i in range(max(k, 1)):
        r, g, b = colorsys.hls_to_rgb((i / max(k, 1)) % 1.0, 0.5, 0.65)
        colors.append(
            f"#{int(round(r * 255)):02x}{int(round(g * 255)):02x}"
            f"{int(round(b * 255)):02x}"
        )
    return colors


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_scatter(points, labels, record_ids=None, point_radius: float = 3.0,
                   width: int = 800, height: int = 600,
                   highlight=(), colors=None) -> str:
    """Render an SVG scatter; one circle per row, cluster-colored, with a
    legend of cluster ids and sizes. Record ids in `highlight` get an outline
    ring. An empty projection yields a valid plot with the legend omitted."""
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        points = points.reshape(0, 2)
    points = check_matrix(points, "projection")
    if points.shape[1] != 2:
        raise DimensionError(
            f"scatter needs a 2-D projection, got {points.shape[1]} columns"
        )
    n = points.shape[0]
    labels = check_labels(np.asarray(labels), n) if n else np.empty(0, np.int64)
    if record_ids is None:
        record_ids = np.arange(n, dtype=np.int64)
    record_ids = np.asarray(record_ids, dtype=np.int64)
    highlight = set(int(h) for h in highlight)

    uniq = sorted(int(u) for u in np.unique(labels)) if n else []
    if colors is None:
        colors = palette(len(uniq))
    if len(colors) < len(uniq):
        raise ValueError(
            f"palette has {len(colors)} colors for {len(uniq)} clusters"
        )
    color_of = {lab: colors[i] for i, lab in enumerate(uniq)}

    if n:
        xmin, ymin = points.min(axis=0)
        xmax, ymax = points.max(axis=0)
    else:
        xmin = ymin = 0.0
        xmax = ymax = 1.0
    xspan = (xmax - xmin) or 1.0
    yspan = (ymax - ymin) or 1.0
    pw = width - 2 * MARGIN
    ph = height - 2 * MARGIN

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for i in range(n):
        px = MARGIN + (points[i, 0] - xmin) / xspan * pw
        py = height - MARGIN - (points[i, 1] - ymin) / yspan * ph
        color = color_of[int(labels[i])]
        out.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{_fmt(point_radius)}" '
            f'fill="{color}"/>'
        )
        if int(record_ids[i]) in highlight:
            out.append(
                f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" '
                f'r="{_fmt(point_radius + 2.5)}" fill="none" '
                f'stroke="#111111" stroke-width="1.5"/>'
            )
    for idx, lab in enumerate(uniq):
        count = int((labels == lab).sum())
        y = MARGIN / 2 + idx * LEGEND_ROW
        out.append(
            f'<rect x="{_fmt(width - 170.0)}" y="{_fmt(y)}" width="12" '
            f'height="12" fill="{color_of[lab]}"/>'
        )
        out.append(
            f'<text x="{_fmt(width - 152.0)}" y="{_fmt(y + 10.0)}" '
            f'font-family="monospace" font-size="12">'
            f'cluster {lab} (n={count})</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
