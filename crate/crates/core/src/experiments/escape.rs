use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSizes;
use crate::error::{Error, Result};
use crate::kernel::{stationary_box_measure, KernelParams, Restriction};
use crate::lattice::{BoxSpec, LatticePoint};
use crate::stats::quantile_sorted;
use crate::walk::{BoxRestriction, Walker};

/// Censoring horizon in units of `n^2`.
pub const CENSOR_FACTOR: u64 = 50;

/// Hitting times of `{4‖x‖∞ >= n}` by the box-restricted walk from the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeSummary {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub restriction: Restriction,
    pub replicas: usize,
    /// Step budget; unfinished runs are recorded at this value.
    pub budget: u64,
    pub censored: usize,
    /// `None` for censored runs.
    pub hitting_times: Vec<Option<u64>>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// `median / n^2`
    pub median_over_n2: f64,
    /// `π^{(n)}` mass of the far set
    pub far_mass: f64,
    /// Fraction of box sites in the far set.
    pub far_fraction: f64,
}

pub fn escape_time<S: ClusterSizes + Clone + Send + Sync>(
    sizes: &S,
    box_spec: &BoxSpec,
    params: &KernelParams,
    restriction: Restriction,
    replicas: usize,
    seed: u64,
) -> Result<EscapeSummary> {
    if replicas == 0 {
        return Err(Error::param("need at least one replica"));
    }
    let n = box_spec.n as u64;
    let budget = CENSOR_FACTOR * n * n;
    let confine = BoxRestriction {
        box_spec: *box_spec,
        restriction,
    };
    let origin = LatticePoint::origin(box_spec.d);
    let times: Vec<Option<u64>> = (0..replicas as u64)
        .into_par_iter()
        .map_init(
            || sizes.clone(),
            |local, r| -> Result<Option<u64>> {
                let mut w = Walker::new(*params, origin, seed, r).confined(confine);
                if box_spec.is_far(&origin) {
                    return Ok(Some(0));
                }
                while w.time() < budget {
                    let x = w.step(local)?;
                    if box_spec.is_far(&x) {
                        return Ok(Some(w.time()));
                    }
                }
                Ok(None)
            },
        )
        .collect::<Result<_>>()?;

    let mut sorted: Vec<f64> = times.iter().map(|t| t.unwrap_or(budget) as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let median = quantile_sorted(&sorted, 0.5);

    let mut local = sizes.clone();
    let pi = stationary_box_measure(&mut local, box_spec, params, restriction)?;
    let mut far_mass = 0.0;
    let mut far_count = 0usize;
    for (x, v) in pi.sites.iter().zip(&pi.values) {
        if box_spec.is_far(x) {
            far_mass += v;
            far_count += 1;
        }
    }
    Ok(EscapeSummary {
        n: box_spec.n,
        d: box_spec.d,
        beta: params.beta,
        restriction,
        replicas,
        budget,
        censored: times.iter().filter(|t| t.is_none()).count(),
        hitting_times: times,
        median,
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        median_over_n2: median / (n * n) as f64,
        far_mass,
        far_fraction: far_count as f64 / box_spec.volume() as f64,
    })
}
