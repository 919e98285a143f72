//! Measurable versions of the walk's headline behavior: the diffusion
//! exponent as a function of `β`, sojourns in clusters, escape from the
//! origin, and the cluster-entry construction.

mod displacement;
mod entry;
mod escape;
mod exponent;
mod sojourn;

pub use displacement::{displacement_tail, DisplacementTail};
pub use entry::{entry_probe, EntryProbeConfig, EntryProbeRecord, EntryProbeResult, ProbeStop};
pub use escape::{escape_time, EscapeSummary};
pub use exponent::{
    beta_sweep, estimate_exponent, estimate_exponent_with, fit_range, time_grid, ExponentConfig,
    ExponentEstimate, MIN_REPLICAS,
};
pub use sojourn::{
    geometric_floor, mean_sojourn_by_size, sojourn_experiment, sojourn_statistics, SizeSojourn,
    SojournRecord,
};

use crate::cluster::LazyClusters;
use crate::env::{check_probability, SiteField};
use crate::error::Result;

/// Lazily sampled clusters for one replica: a fresh field per replica when
/// annealed, the replica-0 field for every replica when quenched.
pub(crate) fn replica_clusters(
    p: f64,
    d: usize,
    seed: u64,
    replica: u64,
    quenched: bool,
) -> Result<LazyClusters> {
    check_probability(p)?;
    let field = SiteField::bernoulli(d, p, seed, if quenched { 0 } else { replica })?;
    Ok(LazyClusters::from_field(field))
}
