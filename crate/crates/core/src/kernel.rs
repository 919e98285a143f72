//! The cluster-attracted transition kernel
//! `P(x, y) = e^{β|C(y)|} / Σ_{z∼x} e^{β|C(z)|}` and its reversible measure
//! `π(x) = e^{β|C(x)|} Σ_{z∼x} e^{β|C(z)|}`.
//!
//! Weights are handled as log-weights `β|C|`. Below [`LINEAR_LIMIT`] the
//! probabilities are formed as plain ratios `w_y / Σ w`; above it the
//! max-shift trick keeps everything finite.

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSizes;
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, LatticePoint, MAX_DIM};

/// Largest `β|C|` for which weights are exponentiated directly.
pub const LINEAR_LIMIT: f64 = 500.0;

const MAX_NEIGHBORS: usize = 2 * MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub beta: f64,
    pub d: usize,
}

impl KernelParams {
    pub fn new(beta: f64, d: usize) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::param(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::param(format!("unsupported dimension {d}")));
        }
        Ok(KernelParams { beta, d })
    }
}

/// How the walk is confined to `Λ_n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    /// Moves leaving the box become self-loops with the same probability.
    #[default]
    SelfLoop,
    /// Only in-box neighbors are weighted and renormalized.
    Renormalize,
}

impl std::str::FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selfloop" => Ok(Restriction::SelfLoop),
            "renormalize" => Ok(Restriction::Renormalize),
            _ => Err(Error::param(format!("unknown restriction {s:?}"))),
        }
    }
}

impl std::fmt::Display for Restriction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Restriction::SelfLoop => "selfloop",
            Restriction::Renormalize => "renormalize",
        })
    }
}

/// One row of the unrestricted kernel.
#[derive(Clone, Copy, Debug)]
pub struct LocalKernel {
    site: LatticePoint,
    len: usize,
    neighbors: [LatticePoint; MAX_NEIGHBORS],
    sizes: [u32; MAX_NEIGHBORS],
    log_weights: [f64; MAX_NEIGHBORS],
    probs: [f64; MAX_NEIGHBORS],
    /// `ln Σ_z e^{β|C(z)|}`
    log_total: f64,
}

impl LocalKernel {
    pub fn site(&self) -> LatticePoint {
        self.site
    }

    pub fn neighbors(&self) -> &[LatticePoint] {
        &self.neighbors[..self.len]
    }

    pub fn neighbor_sizes(&self) -> &[u32] {
        &self.sizes[..self.len]
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights[..self.len]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs[..self.len]
    }

    pub fn log_total_weight(&self) -> f64 {
        self.log_total
    }

    pub fn probability_to(&self, y: &LatticePoint) -> f64 {
        self.neighbors()
            .iter()
            .position(|z| z == y)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Samples a neighbor index from a uniform `u ∈ [0, 1)`.
    #[inline]
    pub fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for i in 0..self.len - 1 {
            acc += self.probs[i];
            if u < acc {
                return i;
            }
        }
        self.len - 1
    }
}

/// Normalizes log-weights in place into `probs`, returning `ln Σ e^{lw}`.
fn normalize(log_weights: &[f64], probs: &mut [f64]) -> f64 {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max <= LINEAR_LIMIT {
        let mut total = 0.0;
        for (p, &lw) in probs.iter_mut().zip(log_weights) {
            *p = lw.exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        total.ln()
    } else {
        let mut total = 0.0;
        for (p, &lw) in probs.iter_mut().zip(log_weights) {
            *p = (lw - max).exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        max + total.ln()
    }
}

pub fn local_kernel<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
) -> Result<LocalKernel> {
    let mut k = LocalKernel {
        site: *x,
        len: 2 * x.dim(),
        neighbors: [*x; MAX_NEIGHBORS],
        sizes: [0; MAX_NEIGHBORS],
        log_weights: [0.0; MAX_NEIGHBORS],
        probs: [0.0; MAX_NEIGHBORS],
        log_total: 0.0,
    };
    for (i, y) in x.neighbors().enumerate() {
        let s = sizes.size_of(&y)?;
        k.neighbors[i] = y;
        k.sizes[i] = s;
        k.log_weights[i] = params.beta * s as f64;
    }
    k.log_total = normalize(&k.log_weights[..k.len], &mut k.probs[..k.len]);
    Ok(k)
}

/// Unnormalized `π(x)`; may be `inf` when `β|C|` is very large, see
/// [`log_reversible_measure`].
pub fn reversible_measure<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
) -> Result<f64> {
    let own = params.beta * sizes.size_of(x)? as f64;
    let k = local_kernel(sizes, x, params)?;
    if own.max(k.log_weights().iter().copied().fold(0.0, f64::max)) <= LINEAR_LIMIT {
        let total: f64 = k.log_weights().iter().map(|lw| lw.exp()).sum();
        Ok(own.exp() * total)
    } else {
        Ok((own + k.log_total).exp())
    }
}

pub fn log_reversible_measure<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
) -> Result<f64> {
    let own = params.beta * sizes.size_of(x)? as f64;
    Ok(own + local_kernel(sizes, x, params)?.log_total)
}

/// A row of the kernel restricted to `Λ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedRow {
    pub site: LatticePoint,
    /// In-box neighbors and their probabilities.
    pub moves: Vec<(LatticePoint, f64)>,
    pub self_loop: f64,
}

impl RestrictedRow {
    pub fn total(&self) -> f64 {
        self.self_loop + self.moves.iter().map(|(_, p)| p).sum::<f64>()
    }
}

pub fn restrict_to_box<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
    box_spec: &BoxSpec,
    restriction: Restriction,
) -> Result<RestrictedRow> {
    if !box_spec.contains(x) {
        return Err(Error::param(format!("{x} is not in the box")));
    }
    let k = local_kernel(sizes, x, params)?;
    let mut row = RestrictedRow {
        site: *x,
        moves: Vec::with_capacity(k.len),
        self_loop: 0.0,
    };
    match restriction {
        Restriction::SelfLoop => {
            for (y, &p) in k.neighbors().iter().zip(k.probabilities()) {
                if box_spec.contains(y) {
                    row.moves.push((*y, p));
                } else {
                    row.self_loop += p;
                }
            }
        }
        Restriction::Renormalize => {
            let inside: Vec<(LatticePoint, f64)> = k
                .neighbors()
                .iter()
                .zip(k.log_weights())
                .filter(|(y, _)| box_spec.contains(y))
                .map(|(y, &lw)| (*y, lw))
                .collect();
            if inside.is_empty() {
                row.self_loop = 1.0;
            } else {
                let lws: Vec<f64> = inside.iter().map(|(_, lw)| *lw).collect();
                let mut probs = vec![0.0; lws.len()];
                normalize(&lws, &mut probs);
                row.moves = inside.iter().map(|(y, _)| *y).zip(probs).collect();
            }
        }
    }
    Ok(row)
}

/// `π^{(n)}` on `Λ_n`, listed in the box's row-major site order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReversibleMeasure {
    pub sites: Vec<LatticePoint>,
    /// Normalized values, summing to 1.
    pub values: Vec<f64>,
    /// `ln` of the unnormalized values.
    pub log_unnormalized: Vec<f64>,
    /// `Z`; infinite if it overflows, in which case use `log_normalizer`.
    pub normalizer: f64,
    pub log_normalizer: f64,
    pub restriction: Restriction,
}

impl ReversibleMeasure {
    pub fn value(&self, x: &LatticePoint) -> Option<f64> {
        self.sites
            .iter()
            .position(|y| y == x)
            .map(|i| self.values[i])
    }
}

/// The stationary measure of the restricted chain. For [`Restriction::SelfLoop`]
/// this is `π` with full-lattice neighbor sums normalized over `Λ_n`; for
/// [`Restriction::Renormalize`] the neighbor sum runs over in-box neighbors.
pub fn stationary_box_measure<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    box_spec: &BoxSpec,
    params: &KernelParams,
    restriction: Restriction,
) -> Result<ReversibleMeasure> {
    if box_spec.volume() == 0 {
        return Err(Error::param("empty box"));
    }
    let sites: Vec<LatticePoint> = box_spec.sites().collect();
    let mut logs = Vec::with_capacity(sites.len());
    for x in &sites {
        let own = params.beta * sizes.size_of(x)? as f64;
        let k = local_kernel(sizes, x, params)?;
        let log_sum = match restriction {
            Restriction::SelfLoop => k.log_total,
            Restriction::Renormalize => {
                let lws: Vec<f64> = k
                    .neighbors()
                    .iter()
                    .zip(k.log_weights())
                    .filter(|(y, _)| box_spec.contains(y))
                    .map(|(_, &lw)| lw)
                    .collect();
                if lws.is_empty() {
                    0.0
                } else {
                    log_sum_exp(&lws)
                }
            }
        };
        logs.push(own + log_sum);
    }
    let log_z = log_sum_exp(&logs);
    let values = logs.iter().map(|l| (l - log_z).exp()).collect();
    Ok(ReversibleMeasure {
        sites,
        values,
        log_unnormalized: logs,
        normalizer: log_z.exp(),
        log_normalizer: log_z,
        restriction,
    })
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
