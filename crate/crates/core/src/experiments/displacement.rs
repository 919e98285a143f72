use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replica_clusters;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::lattice::LatticePoint;
use crate::walk::Walker;

/// Frequency of `‖ξ_t‖∞ >= t^{1/2 + ε}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementTail {
    pub t: u64,
    pub epsilon: f64,
    pub threshold: f64,
    pub hits: usize,
    pub replicas: usize,
    pub frequency: f64,
}

pub fn displacement_tail(
    p: f64,
    d: usize,
    beta: f64,
    t: u64,
    replicas: usize,
    epsilon: f64,
    seed: u64,
) -> Result<DisplacementTail> {
    if replicas == 0 || t == 0 {
        return Err(Error::param("need t >= 1 and at least one replica"));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::param("ε must be nonnegative"));
    }
    let params = KernelParams::new(beta, d)?;
    let threshold = (t as f64).powf(0.5 + epsilon);
    let hits = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let mut sizes = replica_clusters(p, d, seed, r, false)?;
            let mut w = Walker::new(params, LatticePoint::origin(d), seed, r);
            for _ in 0..t {
                w.step(&mut sizes)?;
            }
            Ok(w.position().norm_inf() as f64 >= threshold)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    Ok(DisplacementTail {
        t,
        epsilon,
        threshold,
        hits,
        replicas,
        frequency: hits as f64 / replicas as f64,
    })
}
