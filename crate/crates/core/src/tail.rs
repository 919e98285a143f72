//! Empirical tail of `|C(0)|` over fresh lazily grown environments.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_size_bfs, DEFAULT_GROWTH_CAP};
use crate::env::SiteField;
use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::stats::fit_line;

/// Thresholds need this many exceedances to enter the regression.
pub const MIN_HITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub threshold: usize,
    /// Samples with `|C(0)| > threshold`.
    pub count: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailStats {
    pub p: f64,
    pub d: usize,
    pub seed: u64,
    pub sample_count: usize,
    pub points: Vec<TailPoint>,
    /// Slope of `ln P[|C(0)| > N]` against `N`; NaN if fewer than two
    /// thresholds qualify.
    pub fitted_slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub cap_hits: usize,
}

impl TailStats {
    /// Empirical `P[|C(0)| >= k]`.
    pub fn frequency_at_least(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            _ => self.frequency_above(k - 1),
        }
    }

    /// Empirical `P[|C(0)| > threshold]`.
    pub fn frequency_above(&self, threshold: usize) -> f64 {
        self.points.get(threshold).map_or(0.0, |pt| pt.frequency)
    }
}

/// Sizes of `C(0)` for `samples` independent environments; `None` marks a cap hit.
pub fn origin_cluster_sizes(
    p: f64,
    d: usize,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<Vec<Option<usize>>> {
    // validate once
    SiteField::bernoulli(d, p, seed, 0)?;
    Ok((0..samples as u64)
        .into_par_iter()
        .map_init(
            || (FxHashSet::default(), Vec::new()),
            |(seen, stack), i| {
                let field = SiteField::bernoulli(d, p, seed, i).unwrap();
                cluster_size_bfs(
                    LatticePoint::origin(d),
                    |x| field.is_open(x),
                    cap,
                    seen,
                    stack,
                )
            },
        )
        .collect())
}

pub fn cluster_tail(p: f64, d: usize, samples: usize, seed: u64) -> Result<TailStats> {
    cluster_tail_with_cap(p, d, samples, seed, DEFAULT_GROWTH_CAP)
}

pub fn cluster_tail_with_cap(
    p: f64,
    d: usize,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<TailStats> {
    if samples < 1000 {
        return Err(Error::param(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let sizes = origin_cluster_sizes(p, d, samples, seed, cap)?;
    let cap_hits = sizes.iter().filter(|s| s.is_none()).count();
    if cap_hits * 1000 > samples {
        return Err(Error::Supercritical {
            hits: cap_hits,
            samples,
        });
    }
    let sizes: Vec<usize> = sizes.into_iter().map(|s| s.unwrap_or(cap + 1)).collect();
    Ok(tail_from_sizes(p, d, seed, &sizes, cap_hits))
}

pub fn tail_from_sizes(p: f64, d: usize, seed: u64, sizes: &[usize], cap_hits: usize) -> TailStats {
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &s in sizes {
        hist[s] += 1;
    }
    let n = sizes.len();
    let mut points = Vec::with_capacity(max + 1);
    let mut above = n;
    for (threshold, &h) in hist.iter().enumerate() {
        above -= h;
        points.push(TailPoint {
            threshold,
            count: above,
            frequency: above as f64 / n as f64,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|pt| pt.count >= MIN_HITS)
        .map(|pt| (pt.threshold as f64, pt.frequency.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    TailStats {
        p,
        d,
        seed,
        sample_count: n,
        points,
        fitted_slope: fit.map_or(f64::NAN, |f| f.slope),
        intercept: fit.map_or(f64::NAN, |f| f.intercept),
        r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
        cap_hits,
    }
}

/// Exact `P[|C(0)| >= k]` in `d = 1`, `k >= 1`: the run containing the origin
/// has length `s` with probability `s p^s (1-p)^2`, so the tail sums to
/// `p^k (k(1-p) + p)`.
pub fn exact_tail_1d(p: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    p.powi(k as i32) * (k as f64 * (1.0 - p) + p)
}
