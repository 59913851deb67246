"""Monte-Carlo conflict resolution: state clustering over per-turn feature
vectors, return bookkeeping, and the Normal-distribution selection policy."""

from .clustering import ClusterModel, assign_cluster, fit_clusters, update_cluster_turns
from .features import FEATURE_NAMES, FEATURE_WEIGHTS, FeatureVector, build_feature_vector
from .policy import (
    PolicyParams, StateActionTable, episode_returns, normal_sf, policy_params,
    select_action, selection_probabilities, update_values,
)

__all__ = [
    "ClusterModel", "assign_cluster", "fit_clusters", "update_cluster_turns",
    "FEATURE_NAMES", "FEATURE_WEIGHTS", "FeatureVector", "build_feature_vector",
    "PolicyParams", "StateActionTable", "episode_returns", "normal_sf",
    "policy_params", "select_action", "selection_probabilities", "update_values",
]
