from .pca import PcaBasis, PrincipalComponents, pca_fit, pca_project, pca_project_rows
from .vectorops import (
    SUBCODE_WIDTH,
    BinaryCode,
    Metric,
    binarize,
    binarize_rows,
    distance,
    hamming,
    hamming_to_many,
    normalize,
    normalize_rows,
    pack_bits,
    squared_distances,
)

__all__ = [
    "SUBCODE_WIDTH",
    "BinaryCode",
    "Metric",
    "PcaBasis",
    "PrincipalComponents",
    "binarize",
    "binarize_rows",
    "distance",
    "hamming",
    "hamming_to_many",
    "normalize",
    "normalize_rows",
    "pack_bits",
    "pca_fit",
    "pca_project",
    "pca_project_rows",
    "squared_distances",
]
