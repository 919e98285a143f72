//! Random walks attracted by subcritical site-percolation clusters.
//!
//! The walk on `Z^d` moves from `x` to a neighbor `y` with probability
//! proportional to `e^{β|C(y)|}`, where `C(y)` is the open cluster of `y`.
//! This crate samples the environment (eagerly on boxes, lazily by the
//! generation method), simulates the walk, computes exact spectral gaps and
//! canonical-path bounds for the walk confined to a box, and runs the
//! diffusion/trapping experiments.

pub mod cluster;
pub mod env;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod lattice;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod stats;
pub mod tail;
pub mod walk;

pub use cluster::{
    grow_with, holes, label_clusters, sample_labeled, ClusterMap, ClusterScope, ClusterSizes,
    GrownCluster, LazyClusters, DEFAULT_GROWTH_CAP,
};
pub use env::{
    default_margin, sample_environment, sample_environment_with, subcritical_guard, Environment,
    LazyEnvironment, SampleOptions, SiteField,
};
pub use error::{Error, Result};
pub use kernel::{
    local_kernel, log_reversible_measure, restrict_to_box, reversible_measure,
    stationary_box_measure, KernelParams, LocalKernel, Restriction, ReversibleMeasure,
};
pub use lattice::{BoxSpec, LatticePoint, Region};
pub use rng::{CounterRng, Stream};
pub use spectral::{
    build_chain, canonical_path, column_mass_diagnostic, edge_load_bound, exact_gap, BoxChain,
    CanonicalPath, ChainMatrix, SpectralReport,
};
pub use tail::{cluster_tail, TailStats};
pub use walk::{
    continuize, simulate_discrete, step, BoxRestriction, ContinuizedClock, WalkTrajectory, Walker,
};
