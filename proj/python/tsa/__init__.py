"""Python bindings for the tree-structured auxiliary training library."""

from tsa._core import (
    Network,
    NetworkSpec,
    TreeNetwork,
    TreeSpec,
    build_topology,
    cross_entropy,
    gen_blobs,
    gen_spirals,
    instantiate,
    joint_loss,
    kl_div,
    load_config,
    mean_pairwise_kl,
    run_cli,
    softmax_temp,
    train,
)

__all__ = [
    "Network",
    "NetworkSpec",
    "TreeNetwork",
    "TreeSpec",
    "build_topology",
    "cross_entropy",
    "gen_blobs",
    "gen_spirals",
    "instantiate",
    "joint_loss",
    "kl_div",
    "load_config",
    "mean_pairwise_kl",
    "run_cli",
    "softmax_temp",
    "train",
]
