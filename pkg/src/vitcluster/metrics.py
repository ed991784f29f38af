"""Cluster-validity indices and the per-dimension metrics report.

All three indices are computed in 64-bit arithmetic regardless of the input
dtype: pairwise-distance sums over large inputs accumulate visible error in
float32.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import CoincidentCentroidsError, MetricError
from .validation import check_labels, check_matrix


def _group_indices(labels: np.ndarray):
    """Row indices per cluster, keyed by ascending label value."""
    values = np.unique(labels)
    return values, [np.flatnonzero(labels == v) for v in values]


def silhouette_score(X, labels, sample_size: int | None = None,
                     random_state: int | None = None) -> float:
    """Mean silhouette over all points.

    Per point: a = mean distance to its own cluster (excluding itself),
    b = smallest mean distance to any other cluster, s = (b - a) / max(a, b).
    Points in singleton clusters score 0.

    The exact mode is O(n^2). For large n pass ``sample_size`` to score a
    seeded uniform subsample instead; reports should record which mode ran.
    """
    X = check_matrix(X, dtype=np.float64)
    labels = check_labels(labels, X.shape[0])

    if sample_size is not None and sample_size < X.shape[0]:
        rng = np.random.default_rng(random_state)
        keep = np.sort(rng.choice(X.shape[0], size=sample_size, replace=False))
        X, labels = X[keep], labels[keep]

    n = X.shape[0]
    if n < 3:
        raise MetricError(f"silhouette needs at least 3 points, got {n}")
    values, groups = _group_indices(labels)
    if len(values) < 2:
        raise MetricError("silhouette needs at least 2 clusters")

    member_of = np.empty(n, dtype=np.int64)
    for ci, g in enumerate(groups):
        member_of[g] = ci

    scores = np.zeros(n)
    for p in range(n):
        d = np.sqrt(((X - X[p]) ** 2).sum(axis=1))
        ci = member_of[p]
        size = len(groups[ci])
        if size == 1:
            continue
        a = d[groups[ci]].sum() / (size - 1)  # self-distance 0 drops out
        b = min(d[g].mean() for gi, g in enumerate(groups) if gi != ci)
        scores[p] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(scores.mean())


def calinski_harabasz_score(X, labels) -> float:
    """Between- over within-cluster dispersion, normalized by degrees of freedom.

    CH = [B / (k - 1)] / [W / (n - k)]. Returns +inf when W == 0 so that
    perfectly tight clusterings rank best instead of crashing a sweep.
    """
    X = check_matrix(X, dtype=np.float64)
    labels = check_labels(labels, X.shape[0])
    n = X.shape[0]
    values, groups = _group_indices(labels)
    k = len(values)
    if k < 2 or k >= n:
        raise MetricError(f"calinski-harabasz needs 2 <= k < n, got k={k}, n={n}")

    grand_mean = X.mean(axis=0)
    between = 0.0
    within = 0.0
    for g in groups:
        mu = X[g].mean(axis=0)
        between += len(g) * float(((mu - grand_mean) ** 2).sum())
        within += float(((X[g] - mu) ** 2).sum())
    if within == 0.0:
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def davies_bouldin_score(X, labels) -> float:
    """Mean over clusters of the worst-case similarity R_ij = (s_i + s_j) / d_ij.

    s_i is the mean distance of cluster-i points to their centroid, d_ij the
    centroid distance. Lower is better; coincident centroids are an error.
    """
    X = check_matrix(X, dtype=np.float64)
    labels = check_labels(labels, X.shape[0])
    values, groups = _group_indices(labels)
    k = len(values)
    if k < 2:
        raise MetricError(f"davies-bouldin needs at least 2 clusters, got {k}")

    centroids = np.stack([X[g].mean(axis=0) for g in groups])
    spreads = np.array([
        float(np.sqrt(((X[g] - centroids[i]) ** 2).sum(axis=1)).mean())
        for i, g in enumerate(groups)
    ])

    total = 0.0
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if j == i:
                continue
            d = float(np.sqrt(((centroids[i] - centroids[j]) ** 2).sum()))
            if d == 0.0:
                raise CoincidentCentroidsError(i, j)
            worst = max(worst, (spreads[i] + spreads[j]) / d)
        total += worst
    return float(total / k)


@dataclass
class MetricsRow:
    """One row of the per-dimension report."""
    dim: int
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float
    silhouette_mode: str = "exact"

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "silhouette": self.silhouette,
            "calinski_harabasz": self.calinski_harabasz,
            "davies_bouldin": self.davies_bouldin,
            "silhouette_mode": self.silhouette_mode,
        }


def metrics_row(dim: int, X, labels, sample_size: int | None = None,
                random_state: int | None = None) -> MetricsRow:
    """Score one projection/labeling pair on all three indices."""
    n = np.asarray(X).shape[0]
    mode = "exact"
    if sample_size is not None and sample_size < n:
        mode = f"subsampled(n={sample_size}, seed={random_state})"
    return MetricsRow(
        dim=dim,
        silhouette=silhouette_score(X, labels, sample_size, random_state),
        calinski_harabasz=calinski_harabasz_score(X, labels),
        davies_bouldin=davies_bouldin_score(X, labels),
        silhouette_mode=mode,
    )


def metrics_table(by_dim: dict) -> tuple[list[MetricsRow], dict[int, str]]:
    """Score every (projection, labels) pair, ascending by dim.

    A failing dim is reported in the error map without aborting the others.
    """
    rows: list[MetricsRow] = []
    errors: dict[int, str] = {}
    for dim in sorted(by_dim):
        X, labels = by_dim[dim]
        try:
            rows.append(metrics_row(dim, X, labels))
        except MetricError as exc:
            errors[dim] = f"{type(exc).__name__}: {exc}"
    return rows, errors


def _fmt_silhouette(value: float) -> str:
    # Table style drops the leading zero: 0.0126 renders as .0126.
    text = f"{value:.4f}"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def _fmt_ch(value: float) -> str:
    return "inf" if np.isinf(value) else f"{value:.1f}"


def _fmt_db(value: float) -> str:
    return f"{value:.3f}"


def render_metrics_table(rows: list[MetricsRow], mark_best: bool = False) -> str:
    """Fixed-layout plain-text table with columns Dim./Silhouette/C-H/D-B.

    Columns are right-aligned and sized to their content. With ``mark_best``
    the best-silhouette row gets a trailing ``*`` and a footnote.
    """
    headers = ("Dim.", "Silhouette", "C-H", "D-B")
    cells = [
        (str(r.dim), _fmt_silhouette(r.silhouette), _fmt_ch(r.calinski_harabasz),
         _fmt_db(r.davies_bouldin))
        for r in rows
    ]
    widths = [
        max(len(h), *(len(c[i]) for c in cells)) if cells else len(h)
        for i, h in enumerate(headers)
    ]
    best = max(range(len(rows)), key=lambda i: rows[i].silhouette) if rows else -1

    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for i, row_cells in enumerate(cells):
        line = "  ".join(c.rjust(w) for c, w in zip(row_cells, widths))
        if mark_best and i == best:
            line += " *"
        lines.append(line)
    if mark_best and rows:
        lines.append("* best silhouette")
    return "\n".join(lines) + "\n"
