"""Markdown summary of a finished run directory.

The report pulls together the metrics table, the fitted cluster model, row
assignments, centroid-nearest representatives, and the 2-D scatter. Each
cluster section lists the representatives assigned to that cluster, so a
cluster with fewer members than the representative budget lists only its own
members.
"""

import json
from pathlib import Path

from .exceptions import ReportError

METRICS_FILES = ("sweep.txt", "metrics.txt")


def _load_assignments(path: Path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def build_report(run_dir, out_path=None) -> str:
    """Assemble report.md from a run directory; missing stage outputs raise
    ReportError naming the gap."""
    run_dir = Path(run_dir)

    metrics_path = next(
        (run_dir / name for name in METRICS_FILES if (run_dir / name).exists()),
        None,
    )
    if metrics_path is None:
        raise ReportError(
            f"no metrics table ({' or '.join(METRICS_FILES)}) in {run_dir}"
        )
    model_path = run_dir / "model.json"
    if not model_path.exists():
        raise ReportError(f"no cluster model (model.json) in {run_dir}")
    assignments_path = run_dir / "assignments.jsonl"
    if not assignments_path.exists():
        raise ReportError(f"no assignments (assignments.jsonl) in {run_dir}")
    reps_path = run_dir / "representatives.json"
    if not reps_path.exists():
        raise ReportError(f"no representatives (representatives.json) in {run_dir}")
    scatter_path = run_dir / "scatter.svg"
    if not scatter_path.exists():
        raise ReportError(f"no scatter (scatter.svg) in {run_dir}")

    metrics_text = metrics_path.read_text(encoding="utf-8").rstrip("\n")
    model = json.loads(model_path.read_text(encoding="utf-8"))
    assignments = _load_assignments(assignments_path)
    reps = json.loads(reps_path.read_text(encoding="utf-8"))

    k = int(model["k"])
    total_inertia = sum(row["sqdist"] for row in assignments)
    sizes = {c: 0 for c in range(k)}
    inertia_by_cluster = {c: 0.0 for c in range(k)}
    member_of = {}
    for row in assignments:
        label = int(row["label"])
        sizes[label] = sizes.get(label, 0) + 1
        inertia_by_cluster[label] = inertia_by_cluster.get(label, 0.0) + row["sqdist"]
        member_of[int(row["record_id"])] = label

    lines = [
        "# Cluster report",
        "",
        f"Rows: {len(assignments)}  Clusters: {k}  "
        f"Inertia: {model['inertia']:.6g}",
        "",
        "## Metrics",
        "",
        "```",
        metrics_text,
        "```",
        "",
        "## Scatter",
        "",
        f"![cluster scatter]({scatter_path.name})",
        "",
        "## Clusters",
    ]
    by_cluster = {int(entry["cluster"]): entry["items"]
                  for entry in reps.get("clusters", [])}
    for c in range(k):
        size = sizes.get(c, 0)
        share = inertia_by_cluster.get(c, 0.0) / total_inertia if total_inertia else 0.0
        lines += [
            "",
            f"### Cluster {c}",
            "",
            f"- size: {size}",
            f"- inertia share: {100.0 * share:.1f}%",
            "- representatives:",
        ]
        members = [item for item in by_cluster.get(c, [])
                   if member_of.get(int(item["record_id"])) == c]
        for rank, item in enumerate(members, start=1):
            path = item.get("image_path", "")
            lines.append(
                f"  {rank}. {path} (record {item['record_id']}, "
                f"distance {item['distance']:.6g})"
            )
        if not members:
            lines.append("  (none)")

    text = "\n".join(lines) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text
