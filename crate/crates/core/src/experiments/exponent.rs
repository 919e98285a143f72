use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replica_clusters;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::lattice::LatticePoint;
use crate::stats::{fit_line, mean, sample_sd, slope_weights};
use crate::walk::Walker;

pub const MIN_REPLICAS: usize = 30;
const MIN_T_MAX: u64 = 1000;
const FIRST_GRID_EXPONENT: u32 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub p: f64,
    pub d: usize,
    pub beta: f64,
    pub t_max: u64,
    pub replicas: usize,
    pub seed: u64,
    /// Reuse one environment for all replicas.
    pub quenched: bool,
}

/// Fitted growth exponent of `M(t) = max_{s<=t} ‖ξ(s)‖∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub beta: f64,
    pub p: f64,
    pub d: usize,
    pub seed: u64,
    pub quenched: bool,
    pub time_grid: Vec<u64>,
    /// Replica average of `log M(t)` at each grid time.
    pub mean_log_maxdisp: Vec<f64>,
    /// Index of the first grid point used in the fit.
    pub fit_from: usize,
    pub slope: f64,
    pub intercept: f64,
    /// `sd(per-replica slopes) / √replicas`
    pub stderr: f64,
    /// Residual standard error of the fit to the averaged curve.
    pub residual_stderr: f64,
    pub replicas: usize,
}

/// `2^6, 2^7, ...` up to `t_max`.
pub fn time_grid(t_max: u64) -> Vec<u64> {
    (FIRST_GRID_EXPONENT..64)
        .map(|k| 1u64 << k)
        .take_while(|&t| t <= t_max)
        .collect()
}

/// Indices of the grid points in the fit: the upper half.
pub fn fit_range(len: usize) -> std::ops::Range<usize> {
    len / 2..len
}

pub fn estimate_exponent(
    p: f64,
    d: usize,
    beta: f64,
    t_max: u64,
    replicas: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    estimate_exponent_with(&ExponentConfig {
        p,
        d,
        beta,
        t_max,
        replicas,
        seed,
        quenched: false,
    })
}

pub fn estimate_exponent_with(cfg: &ExponentConfig) -> Result<ExponentEstimate> {
    if cfg.replicas < MIN_REPLICAS {
        return Err(Error::param(format!(
            "at least {MIN_REPLICAS} replicas are needed, got {}",
            cfg.replicas
        )));
    }
    if cfg.t_max < MIN_T_MAX {
        return Err(Error::param(format!("t_max must be at least {MIN_T_MAX}")));
    }
    let params = KernelParams::new(cfg.beta, cfg.d)?;
    let grid = time_grid(cfg.t_max);
    let logs: Vec<Vec<f64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| log_max_displacement(cfg, &params, &grid, r))
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = grid.iter().map(|&t| (t as f64).ln()).collect();
    let mean_log: Vec<f64> = (0..grid.len())
        .map(|k| mean(&logs.iter().map(|l| l[k]).collect::<Vec<_>>()))
        .collect();
    let range = fit_range(grid.len());
    let fit = fit_line(&xs[range.clone()], &mean_log[range.clone()])
        .ok_or_else(|| Error::param("t_max too small for a fit"))?;
    let w = slope_weights(&xs[range.clone()]);
    let per_replica: Vec<f64> = logs
        .iter()
        .map(|l| w.iter().zip(&l[range.clone()]).map(|(w, y)| w * y).sum())
        .collect();
    let stderr = sample_sd(&per_replica) / (cfg.replicas as f64).sqrt();
    if !fit.slope.is_finite() {
        return Err(Error::Invariant(format!("non-finite slope {}", fit.slope)));
    }
    Ok(ExponentEstimate {
        beta: cfg.beta,
        p: cfg.p,
        d: cfg.d,
        seed: cfg.seed,
        quenched: cfg.quenched,
        time_grid: grid,
        mean_log_maxdisp: mean_log,
        fit_from: range.start,
        slope: fit.slope,
        intercept: fit.intercept,
        stderr,
        residual_stderr: fit.slope_stderr,
        replicas: cfg.replicas,
    })
}

fn log_max_displacement(
    cfg: &ExponentConfig,
    params: &KernelParams,
    grid: &[u64],
    replica: u64,
) -> Result<Vec<f64>> {
    let mut sizes = replica_clusters(cfg.p, cfg.d, cfg.seed, replica, cfg.quenched)?;
    let mut walker = Walker::new(*params, LatticePoint::origin(cfg.d), cfg.seed, replica);
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        while walker.time() < t {
            walker.step(&mut sizes)?;
        }
        out.push((walker.max_displacement() as f64).ln());
    }
    Ok(out)
}

/// One estimate per `β`, all with the same seed.
pub fn beta_sweep(
    p: f64,
    d: usize,
    beta_grid: &[f64],
    t_max: u64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<ExponentEstimate>> {
    if beta_grid.is_empty() {
        return Err(Error::param("empty β grid"));
    }
    beta_grid
        .iter()
        .map(|&beta| estimate_exponent(p, d, beta, t_max, replicas, seed))
        .collect()
}
