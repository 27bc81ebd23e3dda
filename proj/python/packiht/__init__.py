"""Iterative hard thresholding on PLINK-compressed genotypes."""

from ._core import (
    Design,
    PackedGenotypeMatrix,
    PackihtError,
    make_folds,
    precision_recall,
    project_sparse,
    random_genotypes,
    read_bed,
    write_bed,
)

__all__ = [
    "Design",
    "PackedGenotypeMatrix",
    "PackihtError",
    "make_folds",
    "precision_recall",
    "project_sparse",
    "random_genotypes",
    "read_bed",
    "write_bed",
]

__version__ = "0.1.0"
