"""
EEG graphs, normalized Laplacians, Chebyshev machinery and coarsening.
"""

from src.graph.weighted_graph import WeightedGraph
from src.graph.electrodes import DEAP_CHANNELS, NUM_ELECTRODES, ElectrodeLayout, standard_layout
from src.graph.construction import (
    CorrelationAccumulator,
    GraphConfig,
    build_merged_graph,
    corr_graph,
    dist_graph,
    merge_bands,
    rand_graph,
    sparsify_topk,
)
from src.graph.laplacian import (
    NormalizedLaplacian,
    SpectralDecomposition,
    cheb_basis,
    lambda_max,
    normalized_laplacian,
    scale_laplacian,
    spectral_filter_oracle,
)
from src.graph.coarsening import CoarseningHierarchy, build_perm, graclus_coarsen, perm_data
from src.graph.export import load_graph_text, write_graph_text, write_hierarchy_text

__all__ = [
    "WeightedGraph",
    "DEAP_CHANNELS",
    "NUM_ELECTRODES",
    "ElectrodeLayout",
    "standard_layout",
    "CorrelationAccumulator",
    "GraphConfig",
    "build_merged_graph",
    "corr_graph",
    "dist_graph",
    "merge_bands",
    "rand_graph",
    "sparsify_topk",
    "NormalizedLaplacian",
    "SpectralDecomposition",
    "cheb_basis",
    "lambda_max",
    "normalized_laplacian",
    "scale_laplacian",
    "spectral_filter_oracle",
    "CoarseningHierarchy",
    "build_perm",
    "graclus_coarsen",
    "perm_data",
    "load_graph_text",
    "write_graph_text",
    "write_hierarchy_text",
]
