"""Command-line pipeline: ingest, embed, reduce, cluster, metrics, sweep,
representatives, plot, report."""

from .main import cli

__all__ = ["cli"]
