"""Ramsey-type dichotomies for finite metric spaces."""

from .errors import CapExceeded, MdichError
from .metric import (
    EmbeddingCert,
    MetricSpace,
    SubspaceWitness,
    aspect_ratio,
    distortion_of,
    equilateral_distortion,
    restrict,
    validate_metric,
)
from .trees import HstTree, LacunarySequence, hst, hst_metric, lacunary_metric

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "EmbeddingCert",
    "HstTree",
    "LacunarySequence",
    "MdichError",
    "MetricSpace",
    "SubspaceWitness",
    "aspect_ratio",
    "distortion_of",
    "equilateral_distortion",
    "hst",
    "hst_metric",
    "lacunary_metric",
    "restrict",
    "validate_metric",
]
