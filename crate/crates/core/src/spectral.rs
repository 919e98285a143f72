//! Spectral gap of the continuized box chain and the canonical-path bound
//! `λ >= 1/A` with
//!
//! ```text
//! A = max_u (1/Q(u)) Σ_{x,y : γ(x,y) ∋ u} |γ(x,y)| π(x) π(y),
//! Q(u) = e^{β(|C(z1)| + |C(z2)|)} / Z  for u = <z1, z2>,
//! ```
//!
//! where `γ(x, y)` fixes the last coordinate first, then the one before it,
//! and so on. The continuized chain has generator `K - I`, so its gap is
//! `1 - μ_2(K)`, computed on the π-symmetrized kernel with a dense symmetric
//! eigensolver (Householder tridiagonalization + implicit QR, via nalgebra).

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSizes;
use crate::error::{Error, Result};
use crate::kernel::{
    restrict_to_box, stationary_box_measure, KernelParams, Restriction, ReversibleMeasure,
};
use crate::lattice::{BoxSpec, LatticePoint, Region};
use crate::rng::{CounterRng, Stream};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;
const SYMMETRY_TOL: f64 = 1e-12;
const POINCARE_TOL: f64 = 1e-10;
pub const GAP_RESOLUTION: f64 = 1e-12;
/// Pairs of `x` sites handled per parallel block when streaming `A`.
const PAIR_BLOCK: usize = 8;

/// Everything about the box chain except the dense kernel.
#[derive(Clone, Debug)]
pub struct BoxChain {
    pub box_spec: BoxSpec,
    pub params: KernelParams,
    pub states: Vec<LatticePoint>,
    pub pi: ReversibleMeasure,
    /// `β|C(x)|` per state
    pub log_weights: Vec<f64>,
}

impl BoxChain {
    pub fn new<S: ClusterSizes + ?Sized>(
        sizes: &mut S,
        box_spec: &BoxSpec,
        params: &KernelParams,
        restriction: Restriction,
    ) -> Result<Self> {
        let pi = stationary_box_measure(sizes, box_spec, params, restriction)?;
        let log_weights = pi
            .sites
            .iter()
            .map(|x| Ok(params.beta * sizes.size_of(x)? as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoxChain {
            box_spec: *box_spec,
            params: *params,
            states: pi.sites.clone(),
            pi,
            log_weights,
        })
    }

    pub fn restriction(&self) -> Restriction {
        self.pi.restriction
    }

    fn region(&self) -> Region {
        self.box_spec.region()
    }

    /// `Q(u)` for the edge between states `i` and `j`, closed form.
    pub fn edge_flow(&self, i: usize, j: usize) -> f64 {
        (self.log_weights[i] + self.log_weights[j] - self.pi.log_normalizer).exp()
    }
}

/// Dense restricted kernel plus its stationary vector.
#[derive(Clone, Debug)]
pub struct ChainMatrix {
    pub chain: BoxChain,
    pub kernel: DMatrix<f64>,
}

pub fn build_chain<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    box_spec: &BoxSpec,
    params: &KernelParams,
    restriction: Restriction,
) -> Result<ChainMatrix> {
    build_chain_with_limit(sizes, box_spec, params, restriction, DEFAULT_DENSE_LIMIT)
}

pub fn build_chain_with_limit<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    box_spec: &BoxSpec,
    params: &KernelParams,
    restriction: Restriction,
    dense_limit: usize,
) -> Result<ChainMatrix> {
    let states = box_spec.volume();
    if states > dense_limit {
        return Err(Error::Capacity(format!(
            "{states} states exceed the dense limit {dense_limit}; use the sampled-pairs estimator"
        )));
    }
    let chain = BoxChain::new(sizes, box_spec, params, restriction)?;
    let region = chain.region();
    let mut kernel = DMatrix::zeros(states, states);
    for (i, x) in chain.states.iter().enumerate() {
        let row = restrict_to_box(sizes, x, params, box_spec, restriction)?;
        kernel[(i, i)] += row.self_loop;
        for (y, p) in &row.moves {
            kernel[(i, region.index(y).expect("move stays in box"))] += p;
        }
    }
    Ok(ChainMatrix { chain, kernel })
}

impl ChainMatrix {
    pub fn states(&self) -> &[LatticePoint] {
        &self.chain.states
    }

    pub fn pi(&self) -> &[f64] {
        &self.chain.pi.values
    }

    /// `D^{1/2} K D^{-1/2}` and its largest entrywise asymmetry.
    pub fn symmetrized(&self) -> (DMatrix<f64>, f64) {
        let n = self.kernel.nrows();
        let logs = &self.chain.pi.log_unnormalized;
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let k = self.kernel[(i, j)];
                if k != 0.0 {
                    s[(i, j)] = k * ((logs[i] - logs[j]) / 2.0).exp();
                }
            }
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((s[(i, j)] - s[(j, i)]).abs());
            }
        }
        (s, asym)
    }

    /// Eigenvalues of `K`, descending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let (s, asym) = self.symmetrized();
        if asym > SYMMETRY_TOL {
            return Err(Error::Invariant(format!(
                "π-symmetrized kernel asymmetric by {asym:e}"
            )));
        }
        let sym = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev)
    }

    /// `max |π K - π|`
    pub fn stationarity_residual(&self) -> f64 {
        let pi = nalgebra::DVector::from_column_slice(self.pi());
        let moved = self.kernel.transpose() * &pi;
        (moved - pi).amax()
    }
}

/// Spectral gap `λ = 1 - μ_2(K)` of the continuized chain.
pub fn exact_gap(chain: &ChainMatrix) -> Result<f64> {
    if chain.kernel.nrows() < 2 {
        return Err(Error::param("spectral gap needs at least two states"));
    }
    let ev = chain.spectrum()?;
    let gap = 1.0 - ev[1];
    // The box chain is irreducible, so a vanishing gap means the true value
    // is below the eigensolver's absolute accuracy (about n·ε).
    if gap <= GAP_RESOLUTION {
        return Err(Error::Capacity(format!(
            "spectral gap {gap:e} is below the dense eigensolver's resolution {GAP_RESOLUTION:e}"
        )));
    }
    Ok(gap)
}

/// The canonical path `γ(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalPath {
    pub sites: Vec<LatticePoint>,
}

impl CanonicalPath {
    /// Number of edges `|γ|`.
    pub fn length(&self) -> usize {
        self.sites.len() - 1
    }
}

pub fn canonical_path(
    x: &LatticePoint,
    y: &LatticePoint,
    box_spec: &BoxSpec,
) -> Result<CanonicalPath> {
    for p in [x, y] {
        if !box_spec.contains(p) {
            return Err(Error::param(format!("{p} is not in the box")));
        }
    }
    let mut sites = vec![*x];
    let mut cur = *x;
    for axis in (0..x.dim()).rev() {
        let target = y.coord(axis);
        let dir = (target - cur.coord(axis)).signum();
        while cur.coord(axis) != target {
            cur = cur.shifted(axis, dir);
            sites.push(cur);
        }
    }
    Ok(CanonicalPath { sites })
}

/// Edge `{z, z + e_axis}` identified by the index of `z` in the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub lower: usize,
    pub axis: usize,
}

/// Per-edge congestion totals `Σ_{γ ∋ u} |γ| π(x) π(y)` over ordered pairs.
pub fn edge_loads(chain: &BoxChain) -> Vec<f64> {
    let region = chain.region();
    let d = region.dim;
    let n_states = chain.states.len();
    let side = region.side;
    let strides: Vec<usize> = (0..d).map(|k| side.pow((d - 1 - k) as u32)).collect();
    let coords: Vec<Vec<i32>> = chain.states.iter().map(|x| x.coords().to_vec()).collect();
    let pi = &chain.pi.values;

    let blocks: Vec<Vec<f64>> = (0..n_states)
        .collect::<Vec<_>>()
        .par_chunks(PAIR_BLOCK)
        .map(|xs| {
            let mut loads = vec![0.0; n_states * d];
            let mut cur = vec![0i32; d];
            for &i in xs {
                for j in 0..n_states {
                    if i == j {
                        continue;
                    }
                    let len: i32 = (0..d).map(|k| (coords[i][k] - coords[j][k]).abs()).sum();
                    let w = len as f64 * pi[i] * pi[j];
                    cur.copy_from_slice(&coords[i]);
                    let mut idx = i;
                    for k in (0..d).rev() {
                        let dir = (coords[j][k] - cur[k]).signum();
                        while cur[k] != coords[j][k] {
                            let next = if dir > 0 {
                                idx + strides[k]
                            } else {
                                idx - strides[k]
                            };
                            loads[idx.min(next) * d + k] += w;
                            cur[k] += dir;
                            idx = next;
                        }
                    }
                }
            }
            loads
        })
        .collect();

    let mut total = vec![0.0; n_states * d];
    for block in blocks {
        for (t, b) in total.iter_mut().zip(block) {
            *t += b;
        }
    }
    total
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeLoad {
    pub z1: LatticePoint,
    pub z2: LatticePoint,
    pub load: f64,
    /// `load / Q(u)`
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub restriction: Restriction,
    pub gap: f64,
    /// `A`
    pub congestion: f64,
    /// `1/A`
    pub bound: f64,
    pub worst_edge: (LatticePoint, LatticePoint),
    pub edge_loads: Vec<EdgeLoad>,
    /// `gap - bound`
    pub margin: f64,
    pub approximate: bool,
}

impl SpectralReport {
    pub fn poincare_holds(&self) -> bool {
        self.gap >= self.bound - POINCARE_TOL
    }
}

/// Computes `A` exactly by streaming over all ordered pairs and checks it
/// against the exact gap.
pub fn edge_load_bound(chain: &ChainMatrix) -> Result<SpectralReport> {
    let bc = &chain.chain;
    let loads = edge_loads(bc);
    let gap = exact_gap(chain)?;
    let region = bc.region();
    let d = region.dim;
    let mut edges = Vec::new();
    let mut worst: Option<(f64, usize)> = None;
    for lower in 0..bc.states.len() {
        // z1 + e_{d-1} precedes z1 + e_0 lexicographically
        for axis in (0..d).rev() {
            let z1 = bc.states[lower];
            let z2 = z1.shifted(axis, 1);
            let Some(upper) = region.index(&z2) else {
                continue;
            };
            let q = bc.edge_flow(lower, upper);
            if q <= 0.0 || !q.is_finite() {
                return Err(Error::Invariant(format!("Q({z1},{z2}) = {q}")));
            }
            let directed = 0.5
                * (chain.kernel[(lower, upper)] * bc.pi.values[lower]
                    + chain.kernel[(upper, lower)] * bc.pi.values[upper]);
            if (directed - q).abs() > 1e-10 * q {
                return Err(Error::Invariant(format!(
                    "closed-form Q {q:e} differs from directed-flow average {directed:e}"
                )));
            }
            let load = loads[lower * d + axis];
            let ratio = load / q;
            if worst.is_none_or(|(r, _)| ratio > r) {
                worst = Some((ratio, edges.len()));
            }
            edges.push(EdgeLoad {
                z1,
                z2,
                load,
                ratio,
            });
        }
    }
    let (congestion, wi) = worst.ok_or_else(|| Error::param("box has no edges"))?;
    let bound = 1.0 / congestion;
    let report = SpectralReport {
        n: bc.box_spec.n,
        d,
        beta: bc.params.beta,
        restriction: bc.restriction(),
        gap,
        congestion,
        bound,
        worst_edge: (edges[wi].z1, edges[wi].z2),
        edge_loads: edges,
        margin: gap - bound,
        approximate: false,
    };
    if !report.poincare_holds() {
        return Err(Error::Invariant(format!(
            "canonical-path bound violated: gap {gap:e} < 1/A {bound:e}"
        )));
    }
    Ok(report)
}

/// Horvitz–Thompson estimate of `A` from `samples` uniformly drawn ordered
/// pairs; for boxes beyond the dense limit. The result is approximate.
pub fn edge_load_estimate(
    chain: &BoxChain,
    samples: usize,
    seed: u64,
) -> Result<(f64, (LatticePoint, LatticePoint))> {
    let n_states = chain.states.len();
    if n_states < 2 || samples == 0 {
        return Err(Error::param("need at least two states and one sample"));
    }
    let region = chain.region();
    let d = region.dim;
    let scale = (n_states * (n_states - 1)) as f64 / samples as f64;
    let mut rng = CounterRng::new(seed, Stream::Aux(7, 0));
    let mut loads = rustc_hash::FxHashMap::<EdgeId, f64>::default();
    let pi = &chain.pi.values;
    for _ in 0..samples {
        let i = (rng.next_f64() * n_states as f64) as usize;
        let mut j = (rng.next_f64() * (n_states - 1) as f64) as usize;
        if j >= i {
            j += 1;
        }
        let path = canonical_path(&chain.states[i], &chain.states[j], &chain.box_spec)?;
        let w = path.length() as f64 * pi[i] * pi[j] * scale;
        for pair in path.sites.windows(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            let axis = (0..d).find(|&k| a.coord(k) != b.coord(k)).unwrap();
            *loads
                .entry(EdgeId {
                    lower: region.index(&a).unwrap(),
                    axis,
                })
                .or_default() += w;
        }
    }
    let mut best = (0.0f64, EdgeId { lower: 0, axis: 0 });
    let mut keys: Vec<_> = loads.keys().copied().collect();
    keys.sort();
    for e in keys {
        let upper = region
            .index(&chain.states[e.lower].shifted(e.axis, 1))
            .unwrap();
        let ratio = loads[&e] / chain.edge_flow(e.lower, upper);
        if ratio > best.0 {
            best = (ratio, e);
        }
    }
    let z1 = chain.states[best.1.lower];
    Ok((best.0, (z1, z1.shifted(best.1.axis, 1))))
}

/// Mass of one axis-aligned line `Ĩ_u`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineMass {
    pub axis: usize,
    /// Point of the line with the smallest coordinate along `axis`.
    pub base: LatticePoint,
    /// `Σ_{x ∈ line} π^{(n)}(x) · Z / n`
    pub mass: f64,
}

/// Line statistic `Σ_{x∈Ĩ_u} π^{(n)}(x) Z / n` for every line along every axis.
pub fn column_mass_diagnostic(chain: &BoxChain) -> Vec<LineMass> {
    let b = chain.box_spec;
    let region = chain.region();
    let mut out = Vec::new();
    for axis in (0..b.d).rev() {
        for base in region.points().filter(|x| x.coord(axis) == b.lo()) {
            let mass: f64 = (0..b.n)
                .map(|k| {
                    let x = base.shifted(axis, k as i32);
                    chain.pi.log_unnormalized[region.index(&x).unwrap()].exp()
                })
                .sum::<f64>()
                / b.n as f64;
            out.push(LineMass { axis, base, mass });
        }
    }
    out
}

/// `(Σ_{x∈I_u} π(x), Σ_{y∈R_u} π(y))` for the edge `u = {z, z + e_axis}`:
/// `I_u` is the part of the line through `z` at or below `z`, `R_u` the
/// half-box strictly above it.
pub fn split_masses(chain: &BoxChain, z: &LatticePoint, axis: usize) -> (f64, f64) {
    let mut below = 0.0;
    let mut above = 0.0;
    for (x, p) in chain.states.iter().zip(&chain.pi.values) {
        let same_line = (0..x.dim()).all(|k| k == axis || x.coord(k) == z.coord(k));
        if same_line && x.coord(axis) <= z.coord(axis) {
            below += p;
        }
        if x.coord(axis) > z.coord(axis) {
            above += p;
        }
    }
    (below, above)
}
