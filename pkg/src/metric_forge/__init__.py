"""Hilbert-type distances induced through function families, with certificates and embeddings."""

__version__ = "0.1.0"

from .embedder import DistanceMatrix, EmbeddingResult, distance_matrix, isometry_residual, schoenberg_embed
from .inducer import (
    InducedMetric,
    InnerProductSpace,
    check_separation,
    induce_distance,
    induced_inner_product,
    induced_norm,
    inner_product_space,
    verify_metric_axioms,
)
from .kernels import (
    CheckReport,
    CoefficientVector,
    Kernel,
    absolute_difference,
    check_negative_definite,
    check_strictly_negative_definite,
    get_kernel,
    quadratic_form,
    squared_difference,
    squared_euclidean,
    user_kernel,
)
from .measures import FunctionFamily, IndexMeasure, IntegralEstimate, integrate, make_family, support_sample
from .mforms import (
    MKernel,
    SignedDiscreteMeasure,
    check_assumption1,
    check_m_negative_definite,
    check_strong_m_negative,
    induce_m_kernel,
    lm_distance,
    m_form,
    matching_kernel,
)

__all__ = [
    "CheckReport", "CoefficientVector", "DistanceMatrix", "EmbeddingResult", "FunctionFamily",
    "IndexMeasure", "InducedMetric", "InnerProductSpace", "IntegralEstimate", "Kernel", "MKernel",
    "SignedDiscreteMeasure", "absolute_difference", "check_assumption1", "check_m_negative_definite", "check_negative_definite",
    "check_separation", "check_strictly_negative_definite", "check_strong_m_negative", "distance_matrix",
    "get_kernel", "induce_distance", "induce_m_kernel", "induced_inner_product", "induced_norm", "inner_product_space",
    "integrate", "isometry_residual", "lm_distance", "m_form", "make_family", "matching_kernel",
    "quadratic_form", "schoenberg_embed", "squared_difference", "squared_euclidean", "support_sample",
    "user_kernel", "verify_metric_axioms",
]
