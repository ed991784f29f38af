"""vitcluster: batch pipeline turning image collections into ViT embeddings,
UMAP projections, k-means clusters, and cluster-quality reports."""

__version__ = "0.1.0"

from .cluster import KMeans, Representatives, representatives
from .exceptions import VitClusterError
from .metrics import (
    MetricsRow,
    calinski_harabasz_score,
    davies_bouldin_score,
    metrics_row,
    metrics_table,
    render_metrics_table,
    silhouette_score,
)
from .reduction import PCA, UMAP
from .store import (
    EmbeddingMatrix,
    Manifest,
    PostRecord,
    deduplicate,
    ingest,
    read_store,
    sample,
    write_store,
)
from .vit import ModelConfig, ModelWeights, ViTEncoder

__all__ = [
    "__version__",
    "VitClusterError",
    "ModelConfig",
    "ModelWeights",
    "ViTEncoder",
    "PostRecord",
    "Manifest",
    "EmbeddingMatrix",
    "ingest",
    "deduplicate",
    "sample",
    "write_store",
    "read_store",
    "UMAP",
    "PCA",
    "KMeans",
    "Representatives",
    "representatives",
    "silhouette_score",
    "calinski_harabasz_score",
    "davies_bouldin_score",
    "MetricsRow",
    "metrics_row",
    "metrics_table",
    "render_metrics_table",
]
