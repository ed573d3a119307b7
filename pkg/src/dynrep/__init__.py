"""Dynamic network embeddings with spline-valued outgoing vectors.

Each node ``j`` gets a time-varying sending embedding ``alpha_j(t)`` expanded
in a clamped B-spline basis and a static receiving embedding ``beta_j``; a
directed link ``j -> k`` at time ``t`` appears with probability
``sigmoid(<alpha_j(t), beta_k>)``.
"""

from .cluster import KMeansResult, kmeans_euclidean, kmeans_functional, kmeans_objective
from .evaluation import (
    HoldoutTable,
    adjusted_rand_index,
    f1_score,
    run_link_holdout,
    run_timepoint_holdout,
)
from .kernels import BACKEND
from .model import (
    ClusterState,
    EmbeddingModel,
    Penalties,
    grad_beta,
    grad_gamma,
    log_likelihood,
    penalized_objective,
    predict_links,
    probability_matrix,
)
from .network import (
    DynamicNetwork,
    EdgeListError,
    HoldoutSplit,
    from_snapshots,
    hold_out_links,
    hold_out_timepoints,
    load_edge_list,
    write_edge_list,
)
from .spline import BasisSystem, default_num_basis, design_matrix, make_basis
from .synthesis import GeneratorSpec, SyntheticNetwork, generate
from .trainer import TrainConfig, TrainReport, TrainingError, cluster_at_time, fit, init_model

__version__ = "0.1.0"

__all__ = [
    "KMeansResult",
    "kmeans_euclidean",
    "kmeans_functional",
    "kmeans_objective",
    "HoldoutTable",
    "adjusted_rand_index",
    "f1_score",
    "run_link_holdout",
    "run_timepoint_holdout",
    "BACKEND",
    "ClusterState",
    "EmbeddingModel",
    "Penalties",
    "grad_beta",
    "grad_gamma",
    "log_likelihood",
    "penalized_objective",
    "predict_links",
    "probability_matrix",
    "DynamicNetwork",
    "EdgeListError",
    "HoldoutSplit",
    "from_snapshots",
    "hold_out_links",
    "hold_out_timepoints",
    "load_edge_list",
    "write_edge_list",
    "BasisSystem",
    "default_num_basis",
    "design_matrix",
    "make_basis",
    "GeneratorSpec",
    "SyntheticNetwork",
    "generate",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "cluster_at_time",
    "fit",
    "init_model",
]
