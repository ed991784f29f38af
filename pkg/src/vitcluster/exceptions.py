"""Exception hierarchy shared across the pipeline.

Every error raised by this package derives from VitClusterError so the CLI
can map domain failures to a single exit code.
"""


class VitClusterError(Exception):
    """Base class for all vitcluster errors."""


# --- image decoding / ViT ---

class DecodeError(VitClusterError):
    """Raw bytes could not be decoded as a supported image format."""


class InvalidImageError(VitClusterError):
    """Decoded image is unusable (e.g. zero width or height)."""


class PatchError(VitClusterError):
    """Image dimensions are not divisible by the patch size."""


class ShapeError(VitClusterError):
    """Array shapes are inconsistent with the model or data contract."""


class NoHeadError(VitClusterError):
    """Classification requested but the model has no head weights."""


class MissingTensorError(VitClusterError):
    """Weight file lacks a required tensor."""


class CorruptWeightsError(VitClusterError):
    """Weight file is malformed (bad magic, header, or payload)."""


# --- embedding store ---

class SampleError(VitClusterError):
    """Requested sample size exceeds the manifest length."""


class AlignmentError(VitClusterError):
    """Row counts of matrix, manifest, or labels disagree."""


class CorruptStoreError(VitClusterError):
    """Store file has a bad magic or malformed header."""


class TruncatedStoreError(VitClusterError):
    """Store payload is shorter than the header promises."""


# --- reduction / clustering ---

class TooFewPointsError(VitClusterError):
    """Not enough points for the requested neighbors or clusters."""


class FitError(VitClusterError):
    """Curve fitting failed to converge."""


# --- metrics ---

class MetricError(VitClusterError):
    """Inputs violate a validity-index precondition."""


class CoincidentCentroidsError(MetricError):
    """Two cluster centroids coincide; the index is undefined."""

    def __init__(self, i: int, j: int):
        self.pair = (i, j)
        super().__init__(f"centroids {i} and {j} coincide")


# --- CLI / reporting ---

class DimensionError(VitClusterError):
    """Projection dimensionality does not match what the operation needs."""


class ReportError(VitClusterError):
    """A stage output required by the report is missing."""


class LockError(VitClusterError):
    """Another run holds the output-directory lock."""
