"""Repulsive Gaussian mixtures: priors that push component centers apart,
the matching exchangeable-partition calculus, and a blocked-collapsed
Gibbs sampler for density estimation and model-based clustering."""

from .datasets import Dataset, generate_synthetic, load_dataset, pair_consecutive, write_dataset
from .diagnostics import (
    CoClusterSummary,
    DensityGrid,
    autocorrelation,
    coclustering,
    log_cpo,
    posterior_k_distribution,
    predictive_density_grid,
    shrinkage_constant,
)
from .distributions import KPrior, mvn_diag_logpdf, sample_truncated_inv_gamma
from .partition import (
    Partition,
    VnTable,
    bruteforce_partition_prior,
    compute_vn_table,
    enumerate_set_partitions,
    log_partition_prior,
    sample_k_given_partition,
)
from .repulsion import (
    RepulsionSpec,
    ZkEstimate,
    estimate_log_zk,
    g_repulse,
    joint_prior_logdensity,
    repulse_h,
    sample_centers_rejection,
)
from .sampler import (
    ChainTables,
    MixtureState,
    ModelConfig,
    Trace,
    build_chain_tables,
    init_state,
    iter_sweeps,
    reassign_step,
    resample_centers_step,
    resample_covariances_step,
    resample_k_step,
    run_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ChainTables",
    "CoClusterSummary",
    "Dataset",
    "DensityGrid",
    "KPrior",
    "MixtureState",
    "ModelConfig",
    "Partition",
    "RepulsionSpec",
    "Trace",
    "VnTable",
    "ZkEstimate",
    "autocorrelation",
    "build_chain_tables",
    "bruteforce_partition_prior",
    "coclustering",
    "compute_vn_table",
    "enumerate_set_partitions",
    "estimate_log_zk",
    "g_repulse",
    "generate_synthetic",
    "init_state",
    "iter_sweeps",
    "joint_prior_logdensity",
    "load_dataset",
    "log_cpo",
    "log_partition_prior",
    "mvn_diag_logpdf",
    "pair_consecutive",
    "posterior_k_distribution",
    "predictive_density_grid",
    "reassign_step",
    "repulse_h",
    "resample_centers_step",
    "resample_covariances_step",
    "resample_k_step",
    "run_chain",
    "sample_centers_rejection",
    "sample_k_given_partition",
    "sample_truncated_inv_gamma",
    "shrinkage_constant",
    "write_dataset",
]
