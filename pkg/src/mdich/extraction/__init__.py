"""Constructive extraction algorithms."""

from .annulus import AnnulusResult, find_dense_annulus, sparsify_chain, sparsify_sequence
from .greedy import chain_failures, greedy_equilateral_or_lacunary
from .hst import (
    equilateral_or_binary_hst,
    hst_dichotomy,
    hst_relabel,
    monochromatic_bound,
    monochromatic_subset,
    triangle_to_binary_hst,
)
from .increasing import (
    IncreasingExtraction,
    equilateral_or_lacunary,
    extract_k_increasing,
    increasing_dichotomy,
)
from .results import BINARY_HST, EQUILATERAL, LACUNARY, DichotomyResult, Guarantee

__all__ = [
    "AnnulusResult",
    "BINARY_HST",
    "DichotomyResult",
    "EQUILATERAL",
    "Guarantee",
    "IncreasingExtraction",
    "LACUNARY",
    "chain_failures",
    "equilateral_or_binary_hst",
    "equilateral_or_lacunary",
    "extract_k_increasing",
    "find_dense_annulus",
    "greedy_equilateral_or_lacunary",
    "hst_dichotomy",
    "hst_relabel",
    "increasing_dichotomy",
    "monochromatic_bound",
    "monochromatic_subset",
    "sparsify_chain",
    "sparsify_sequence",
    "triangle_to_binary_hst",
]
