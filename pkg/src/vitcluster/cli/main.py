"""Pipeline entry point.

Every subcommand reads files, writes files into --out, and records a
<stage>.manifest.json; stage order is enforced by file-format validation, not
hidden state. Exit codes: 0 success, 2 usage error, 3 data/validation error,
4 internal error. Failures print one machine-readable JSON object to stderr.
"""

import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .. import __version__
from ..cluster import KMeans, load_model, representatives, save_model
from ..exceptions import AlignmentError, LockError, VitClusterError
from ..metrics import metrics_row, render_metrics_table
from ..plotting import ScatterSpec, render_scatter
from ..reduction import UMAP
from ..report import build_report
from ..store import (
    EmbeddingMatrix,
    Manifest,
    atomic_write,
    deduplicate,
    ingest,
    read_store,
    sample,
    write_store,
)
from ..vit import ModelConfig, ModelWeights, ViTEncoder, load_weights
from .configfile import parse_config, resolve
from .runmanifest import write_run_manifest

EXIT_DATA = 3
EXIT_INTERNAL = 4


class Settings:
    """Global options resolved as CLI flag > config file > default."""

    def __init__(self, config_path, seed, threads, out):
        try:
            self.config = parse_config(config_path) if config_path else {}
        except ValueError as exc:
            raise click.UsageError(str(exc)) from None
        self.seed = self.opt(seed, "seed", 0, int)
        self.threads = self.opt(threads, "threads", 1, int)
        self.out = Path(self.opt(out, "out", "out", str))

    def opt(self, flag_value, key, default, cast):
        try:
            return resolve(flag_value, self.config, key, default, cast)
        except ValueError as exc:
            raise click.UsageError(
                f"config key {key!r}: {exc}") from None


def _fail(code: int, exc: BaseException) -> None:
    click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
               err=True)
    sys.exit(code)


@contextmanager
def _output_lock(out_dir: Path):
    """Reject concurrent writers of one output directory via O_EXCL."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".vitcluster.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(
            f"output directory {out_dir} is in use (lock file {lock})"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _run_stage(settings: Settings, stage: str, config: dict,
               inputs: list, fn) -> None:
    """Run one stage body under the output lock and record its manifest."""
    start = time.monotonic()
    try:
        with _output_lock(settings.out):
            outputs = fn()
            write_run_manifest(settings.out, stage, __version__, config,
                               [str(p) for p in inputs],
                               [str(p) for p in outputs],
                               settings.seed, time.monotonic() - start)
    except click.ClickException:
        raise
    except VitClusterError as exc:
        _fail(EXIT_DATA, exc)
    except OSError as exc:
        _fail(EXIT_DATA, exc)
    except Exception as exc:  # noqa: BLE001 - process boundary
        _fail(EXIT_INTERNAL, exc)


def _parse_int_list(raw: str, what: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {what} list {raw!r}") from None
    if not values:
        raise click.BadParameter(f"empty {what} list")
    return values


def _labels_for(manifest: Manifest, assignments_path) -> np.ndarray:
    """Align assignment rows to store rows by record_id."""
    by_id = {}
    with open(assignments_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            by_id[int(row["record_id"])] = int(row["label"])
    labels = np.empty(len(manifest), dtype=np.int64)
    for i, record in enumerate(manifest):
        if record.record_id not in by_id:
            raise AlignmentError(
                f"record {record.record_id} has no assignment in "
                f"{assignments_path}"
            )
        labels[i] = by_id[record.record_id]
    if len(by_id) != len(manifest):
        raise AlignmentError(
            f"{assignments_path} has {len(by_id)} assignments for "
            f"{len(manifest)} store rows"
        )
    return labels


@click.group()
@click.version_option(__version__, prog_name="vitcluster")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="key = value config file (CLI flags take precedence).")
@click.option("--seed", type=int, default=None,
              help="Seed for every stochastic stage (default 0, never time-based).")
@click.option("--threads", type=int, default=None,
              help="Worker threads for per-file stages (default 1).")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Output directory (default ./out).")
@click.pass_context
def cli(ctx, config_path, seed, threads, out):
    """Image clustering pipeline: ViT embeddings, UMAP reduction, k-means
    clusters, validity metrics, and reports."""
    ctx.obj = Settings(config_path, seed, threads, out)


@cli.command("ingest")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--source", default=None, help="Provenance label for records.")
@click.option("--no-dedup", is_flag=True, default=False,
              help="Keep byte-identical duplicates.")
@click.option("--sample", "sample_n", type=int, default=None,
              help="Random sample size after dedup.")
@click.pass_obj
def ingest_cmd(settings, directory, source, no_dedup, sample_n):
    """Scan DIRECTORY for decodable images; write manifest.jsonl."""
    sample_n = settings.opt(sample_n, "sample", None, int)

    def body():
        manifest = ingest(directory, source=source, n_threads=settings.threads)
        if not no_dedup:
            manifest = deduplicate(manifest)
        if sample_n is not None:
            manifest = sample(manifest, sample_n, settings.seed)
        path = settings.out / "manifest.jsonl"
        manifest.to_jsonl(path)
        click.echo(f"ingested {len(manifest)} records -> {path}")
        return [path]

    config = {
        "directory": str(directory),
        "source": source or Path(directory).name,
        "dedup": not no_dedup,
        "sample": sample_n,
        "threads": settings.threads,
    }
    _run_stage(settings, "ingest", config, [directory], body)


@cli.command("embed")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", "weights_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Binary weight file.")
@click.option("--random-weights", is_flag=True, default=False,
              help="Seeded random weights (testing).")
@click.option("--toy", is_flag=True, default=False,
              help="Small encoder config for fast tests.")
@click.option("--image-size", type=int, default=None)
@click.option("--patch-size", type=int, default=None)
@click.option("--hidden-dim", type=int, default=None)
@click.option("--layers", "num_layers", type=int, default=None)
@click.option("--heads", "num_heads", type=int, default=None)
@click.option("--mlp-dim", type=int, default=None)
@click.option("--no-normalize", is_flag=True, default=False,
              help="Skip L2 normalization of embeddings.")
@click.pass_obj
def embed_cmd(settings, manifest_path, weights_path, random_weights, toy,
              image_size, patch_size, hidden_dim, num_layers, num_heads,
              mlp_dim, no_normalize):
    """Embed every image in MANIFEST_PATH; write embeddings.bin."""
    if weights_path is None and not random_weights:
        raise click.UsageError("provide --weights PATH or --random-weights")

    base = ModelConfig.toy() if toy else ModelConfig()
    overrides = {
        "image_size": settings.opt(image_size, "image_size", None, int),
        "patch_size": settings.opt(patch_size, "patch_size", None, int),
        "hidden_dim": settings.opt(hidden_dim, "hidden_dim", None, int),
        "num_layers": settings.opt(num_layers, "layers", None, int),
        "num_heads": settings.opt(num_heads, "heads", None, int),
        "mlp_dim": settings.opt(mlp_dim, "mlp_dim", None, int),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    cfg = replace(base, **overrides) if overrides else base

    def body():
        manifest = Manifest.from_jsonl(manifest_path)
        if weights_path is not None:
            weights = load_weights(weights_path, cfg)
        else:
            weights = ModelWeights.random(cfg, settings.seed)
        encoder = ViTEncoder(config=cfg, weights=weights,
                             normalize_output=not no_normalize,
                             n_threads=settings.threads).fit()
        images = [Path(r.image_path).read_bytes() for r in manifest]
        X = encoder.transform(images)
        path = settings.out / "embeddings.bin"
        write_store(EmbeddingMatrix(values=X, normalized=not no_normalize),
                    manifest, path)
        click.echo(f"embedded {X.shape[0]} images at dim {X.shape[1]} -> {path}")
        return [path, Path(str(path) + ".jsonl")]

    config = {
        "manifest": str(manifest_path),
        "weights": str(weights_path) if weights_path else "random",
        "image_size": cfg.image_size,
        "patch_size": cfg.patch_size,
        "hidden_dim": cfg.hidden_dim,
        "num_layers": cfg.num_layers,
        "num_heads": cfg.num_heads,
        "mlp_dim": cfg.mlp_dim,
        "normalize": not no_normalize,
        "threads": settings.threads,
    }
    inputs = [manifest_path] + ([weights_path] if weights_path else [])
    _run_stage(settings, "embed", config, inputs, body)


@cli.command("reduce")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dim", "-d", type=int, default=None, help="Target dim (default 2).")
@click.option("--n-neighbors", type=int, default=None)
@click.option("--min-dist", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--negative-samples", type=int, default=None)
@click.option("--parallel", is_flag=True, default=False,
              help="Faster layout; forfeits bit-reproducibility.")
@click.pass_obj
def reduce_cmd(settings, store_path, dim, n_neighbors, min_dist, epochs,
               learning_rate, negative_samples, parallel):
    """Project STORE_PATH to a lower dimension; write reduced_<d>.bin."""
    d = settings.opt(dim, "dim", 2, int)
    params = {
        "n_neighbors": settings.opt(n_neighbors, "n_neighbors", 15, int),
        "min_dist": settings.opt(min_dist, "min_dist", 0.1, float),
        "n_epochs": settings.opt(epochs, "epochs", 200, int),
        "learning_rate": settings.opt(learning_rate, "learning_rate", 1.0, float),
        "negative_samples": settings.opt(negative_samples, "negative_samples",
                                         5, int),
    }

    def body():
        emb, manifest = read_store(store_path)
        reducer = UMAP(n_components=d, random_state=settings.seed,
                       parallel=parallel, **params)
        projection = reducer.fit_transform(emb.values.astype(np.float64))
        path = settings.out / f"reduced_{d}.bin"
        write_store(EmbeddingMatrix(values=projection.astype(np.float32),
                                    normalized=False), manifest, path)
        click.echo(f"reduced {projection.shape[0]} rows to dim {d} -> {path}")
        return [path, Path(str(path) + ".jsonl")]

    config = {"store": str(store_path), "dim": d, "parallel": parallel,
              **params}
    _run_stage(settings, "reduce", config, [store_path], body)


def _write_assignments(path, manifest: Manifest, labels: np.ndarray,
                       sqdists: np.ndarray) -> None:
    lines = []
    for record, label, sq in zip(manifest, labels, sqdists):
        lines.append(json.dumps(
            {"record_id": record.record_id, "label": int(label),
             "sqdist": float(sq)},
            sort_keys=True,
        ))
    atomic_write(path, ("\n".join(lines) + "\n" if lines else "").encode("utf-8"))


@cli.command("cluster")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=None, help="Cluster count (default 20).")
@click.option("--n-init", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.pass_obj
def cluster_cmd(settings, store_path, k, n_init, max_iter, tol):
    """k-means over STORE_PATH; write model.json + assignments.jsonl."""
    params = {
        "n_clusters": settings.opt(k, "k", 20, int),
        "n_init": settings.opt(n_init, "n_init", 10, int),
        "max_iter": settings.opt(max_iter, "max_iter", 300, int),
        "tol": settings.opt(tol, "tol", 1e-4, float),
    }

    def body():
        emb, manifest = read_store(store_path)
        X = emb.values.astype(np.float64)
        model = KMeans(random_state=settings.seed, **params).fit(X)
        model_path = settings.out / "model.json"
        save_model(model, model_path, seed=settings.seed)
        sq = ((X - model.cluster_centers_[model.labels_]) ** 2).sum(axis=1)
        assign_path = settings.out / "assignments.jsonl"
        _write_assignments(assign_path, manifest, model.labels_, sq)
        click.echo(
            f"clustered {X.shape[0]} rows into k={params['n_clusters']} "
            f"(inertia {model.inertia_:.6g}) -> {model_path}"
        )
        return [model_path, assign_path]

    config = {"store": str(store_path), **params}
    _run_stage(settings, "cluster", config, [store_path], body)


@cli.command("metrics")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("assignments_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sample-size", type=int, default=None,
              help="Subsample for silhouette on large stores.")
@click.pass_obj
def metrics_cmd(settings, store_path, assignments_path, sample_size):
    """Score STORE_PATH rows against ASSIGNMENTS_PATH; write metrics.txt/json."""
    sample_size = settings.opt(sample_size, "sample_size", None, int)

    def body():
        emb, manifest = read_store(store_path)
        labels = _labels_for(manifest, assignments_path)
        row = metrics_row(emb.values.shape[1], emb.values.astype(np.float64),
                          labels, sample_size=sample_size,
                          random_state=settings.seed)
        table = render_metrics_table([row])
        txt_path = settings.out / "metrics.txt"
        json_path = settings.out / "metrics.json"
        atomic_write(txt_path, table.encode("utf-8"))
        atomic_write(json_path, (json.dumps(row.to_dict(), sort_keys=True,
                                            indent=1) + "\n").encode("utf-8"))
        click.echo(table, nl=False)
        return [txt_path, json_path]

    config = {"store": str(store_path), "assignments": str(assignments_path),
              "sample_size": sample_size}
    _run_stage(settings, "metrics", config,
               [store_path, assignments_path], body)


@cli.command("sweep")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dims", default=None,
              help="Comma-separated target dims (default 16,32,64,128).")
@click.option("--k", type=int, default=None, help="Cluster count (default 20).")
@click.option("--n-neighbors", type=int, default=None)
@click.option("--min-dist", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--n-init", type=int, default=None)
@click.option("--sample-size", type=int, default=None)
@click.pass_obj
def sweep_cmd(settings, store_path, dims, k, n_neighbors, min_dist, epochs,
              n_init, sample_size):
    """Reduce, cluster, and score STORE_PATH at several dims; write
    sweep.txt/json plus per-dim artifacts."""
    dims = _parse_int_list(settings.opt(dims, "dims", "16,32,64,128", str),
                           "dims")
    k = settings.opt(k, "k", 20, int)
    n_neighbors = settings.opt(n_neighbors, "n_neighbors", 15, int)
    min_dist = settings.opt(min_dist, "min_dist", 0.1, float)
    epochs = settings.opt(epochs, "epochs", 200, int)
    n_init = settings.opt(n_init, "n_init", 10, int)
    sample_size = settings.opt(sample_size, "sample_size", None, int)

    def body():
        emb, manifest = read_store(store_path)
        X = emb.values.astype(np.float64)
        rows = []
        errors: dict[str, str] = {}
        outputs = []
        for d in dims:
            try:
                reducer = UMAP(n_components=d, n_neighbors=n_neighbors,
                               min_dist=min_dist, n_epochs=epochs,
                               random_state=settings.seed)
                projection = reducer.fit_transform(X)
                reduced_path = settings.out / f"reduced_{d}.bin"
                write_store(EmbeddingMatrix(projection.astype(np.float32)),
                            manifest, reduced_path)
                model = KMeans(n_clusters=k, n_init=n_init,
                               random_state=settings.seed).fit(projection)
                model_path = settings.out / f"model_{d}.json"
                save_model(model, model_path, seed=settings.seed)
                sq = ((projection
                       - model.cluster_centers_[model.labels_]) ** 2).sum(axis=1)
                assign_path = settings.out / f"assignments_{d}.jsonl"
                _write_assignments(assign_path, manifest, model.labels_, sq)
                outputs += [reduced_path, model_path, assign_path]
                rows.append(metrics_row(d, projection, model.labels_,
                                        sample_size=sample_size,
                                        random_state=settings.seed))
            except VitClusterError as exc:
                errors[str(d)] = f"{type(exc).__name__}: {exc}"
        table = render_metrics_table(rows, mark_best=True)
        txt_path = settings.out / "sweep.txt"
        json_path = settings.out / "sweep.json"
        atomic_write(txt_path, table.encode("utf-8"))
        payload = {"rows": [r.to_dict() for r in rows], "errors": errors,
                   "k": k}
        atomic_write(json_path, (json.dumps(payload, sort_keys=True,
                                            indent=1) + "\n").encode("utf-8"))
        click.echo(table, nl=False)
        for d, message in sorted(errors.items(), key=lambda kv: int(kv[0])):
            click.echo(f"dim {d} failed: {message}", err=True)
        if not rows:
            raise VitClusterError(f"every dim failed: {errors}")
        return outputs + [txt_path, json_path]

    config = {"store": str(store_path), "dims": dims, "k": k,
              "n_neighbors": n_neighbors, "min_dist": min_dist,
              "epochs": epochs, "n_init": n_init, "sample_size": sample_size}
    _run_stage(settings, "sweep", config, [store_path], body)


@cli.command("representatives")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", "m_reps", type=int, default=None,
              help="Records per centroid (default 10).")
@click.pass_obj
def representatives_cmd(settings, store_path, model_path, m_reps):
    """Nearest records to each centroid of MODEL_PATH; write
    representatives.json."""
    m_reps = settings.opt(m_reps, "m", 10, int)

    def body():
        emb, manifest = read_store(store_path)
        model = load_model(model_path)
        record_ids = np.asarray([r.record_id for r in manifest], dtype=np.int64)
        reps = representatives(emb.values.astype(np.float64), record_ids,
                               model.cluster_centers_, m=m_reps)
        image_paths = {r.record_id: r.image_path for r in manifest}
        path = settings.out / "representatives.json"
        atomic_write(path, (json.dumps(reps.to_dict(image_paths),
                                       sort_keys=True, indent=1)
                            + "\n").encode("utf-8"))
        click.echo(
            f"wrote {m_reps} representatives for "
            f"{model.cluster_centers_.shape[0]} clusters -> {path}"
        )
        return [path]

    config = {"store": str(store_path), "model": str(model_path), "m": m_reps}
    _run_stage(settings, "representatives", config,
               [store_path, model_path], body)


@cli.command("plot")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("assignments_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--radius", type=float, default=None, help="Marker radius px.")
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.option("--highlight", default=None,
              help="Comma-separated record ids to ring.")
@click.pass_obj
def plot_cmd(settings, store_path, assignments_path, radius, width, height,
             highlight):
    """SVG scatter of a 2-D STORE_PATH colored by ASSIGNMENTS_PATH; write
    scatter.svg."""
    spec = ScatterSpec(
        projection_path=str(store_path),
        labels_path=str(assignments_path),
        point_radius=settings.opt(radius, "radius", 3.0, float),
        width=settings.opt(width, "width", 800, int),
        height=settings.opt(height, "height", 600, int),
        highlight=(_parse_int_list(highlight, "highlight")
                   if highlight is not None else []),
    )

    def body():
        emb, manifest = read_store(spec.projection_path)
        labels = _labels_for(manifest, spec.labels_path)
        record_ids = np.asarray([r.record_id for r in manifest], dtype=np.int64)
        svg = render_scatter(emb.values.astype(np.float64), labels,
                             record_ids=record_ids,
                             point_radius=spec.point_radius,
                             width=spec.width, height=spec.height,
                             highlight=spec.highlight)
        path = settings.out / "scatter.svg"
        atomic_write(path, svg.encode("utf-8"))
        click.echo(f"plotted {emb.values.shape[0]} points -> {path}")
        return [path]

    config = {"store": spec.projection_path, "assignments": spec.labels_path,
              "radius": spec.point_radius, "width": spec.width,
              "height": spec.height, "highlight": spec.highlight}
    _run_stage(settings, "plot", config,
               [store_path, assignments_path], body)


@cli.command("report")
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory of stage outputs (default --out).")
@click.pass_obj
def report_cmd(settings, run_dir):
    """Summarize a run directory into report.md."""
    target = Path(run_dir) if run_dir is not None else settings.out

    def body():
        path = settings.out / "report.md"
        build_report(target, path)
        click.echo(f"wrote report -> {path}")
        return [path]

    config = {"run_dir": str(target)}
    _run_stage(settings, "report", config, [], body)


def main() -> None:
    cli(prog_name="vitcluster")


if __name__ == "__main__":
    main()
