"""Argument-quality scoring toolkit.

Pipeline stages: corpus ingestion and splitting, multi-annotator aggregation
with reliability statistics, feature extraction, SVR and multi-task neural
regressors, and a correlation-based evaluation harness with reproducible
experiment runs.
"""

__version__ = "0.1.0"

from .corpus import ALL_DIMENSIONS, ArgumentDoc, Dimension, Domain, Split

__all__ = ["ALL_DIMENSIONS", "ArgumentDoc", "Dimension", "Domain", "Split", "__version__"]
