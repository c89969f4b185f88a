"""BIRCH clustering, silhouette validation and transfer case selection."""

from ._core import (
    BirchParams,
    CfTree,
    Error,
    Representation,
    RepresentationDb,
    agglomerative,
    birch_fit,
    dbscan,
    demand_check,
    exp_sequence,
    gen_synthetic,
    kmeans,
    minibatch_kmeans,
    silhouette,
    similarity_check,
)

__all__ = [
    "BirchParams",
    "CfTree",
    "Error",
    "Representation",
    "RepresentationDb",
    "agglomerative",
    "birch_fit",
    "dbscan",
    "demand_check",
    "exp_sequence",
    "gen_synthetic",
    "kmeans",
    "minibatch_kmeans",
    "silhouette",
    "similarity_check",
]
