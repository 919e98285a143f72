use thiserror::Error;

use crate::cluster::GrownCluster;
use crate::lattice::LatticePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("site {0} lies outside the labeled region")]
    OutOfRegion(LatticePoint),

    /// The generation method hit its site cap. The partially grown cluster is
    /// kept for inspection.
    #[error("cluster growth exceeded the cap of {cap} sites")]
    GrowthCap {
        cap: usize,
        partial: Box<GrownCluster>,
    },

    #[error("growth cap hit in {hits} of {samples} samples; p looks supercritical")]
    Supercritical { hits: usize, samples: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
