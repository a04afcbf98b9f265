"""Tabular off-policy evaluation estimators."""

from ._core import (
    DirectConfig,
    Dataset,
    OpeError,
    TabularMDP,
    direct_q,
    direct_value,
    eps_greedy_policy,
    estimator_names,
    exact_value,
    generate_dataset,
    graph,
    graph_mc,
    gridworld,
    hybrid_estimate,
    ih_estimate,
    ips_estimate,
    near_top_frequency,
    policy_mismatch,
    relative_mse,
    run_experiment,
    static_policy,
    uniform_policy,
)

__all__ = [
    "DirectConfig",
    "Dataset",
    "OpeError",
    "TabularMDP",
    "direct_q",
    "direct_value",
    "eps_greedy_policy",
    "estimator_names",
    "exact_value",
    "generate_dataset",
    "graph",
    "graph_mc",
    "gridworld",
    "hybrid_estimate",
    "ih_estimate",
    "ips_estimate",
    "near_top_frequency",
    "policy_mismatch",
    "relative_mse",
    "run_experiment",
    "static_policy",
    "uniform_policy",
]
