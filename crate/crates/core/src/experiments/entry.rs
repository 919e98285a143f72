use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::cluster::{holes, ClusterSizes, LazyClusters, DEFAULT_GROWTH_CAP};
use crate::env::{check_probability, LazyEnvironment, SiteField};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::lattice::{BoxSpec, LatticePoint};
use crate::walk::Walker;

/// Parameters of the cluster-entry construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryProbeConfig {
    pub p: f64,
    pub d: usize,
    pub n: usize,
    pub delta: f64,
    pub beta: f64,
    /// Construction-step budget is `⌈n^{1-θ}⌉`.
    pub theta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub replica: u64,
    /// Walk steps allowed inside one `G_i` before giving up.
    pub max_walk_steps: u64,
    pub growth_cap: usize,
}

impl EntryProbeConfig {
    /// Defaults `θ = 0.25`, `ε = δ ln(1/p) + 0.01`.
    pub fn new(p: f64, d: usize, n: usize, delta: f64, beta: f64, seed: u64) -> Self {
        EntryProbeConfig {
            p,
            d,
            n,
            delta,
            beta,
            theta: 0.25,
            epsilon: delta * (1.0 / p).ln() + 0.01,
            seed,
            replica: 0,
            max_walk_steps: 1_000_000,
            growth_cap: DEFAULT_GROWTH_CAP,
        }
    }

    /// `δ ln n`
    pub fn threshold(&self) -> f64 {
        self.delta * (self.n as f64).ln()
    }

    pub fn step_budget(&self) -> usize {
        (self.n as f64).powf(1.0 - self.theta).ceil() as usize
    }
}

/// One construction step: the walk left `G_i` at time `τ_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryProbeRecord {
    pub step_index: usize,
    pub tau: u64,
    pub site: LatticePoint,
    pub cluster_size: u32,
    pub found_big: bool,
    /// `|G_i|`
    pub g_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStop {
    StepBudget,
    LeftBox,
    WalkBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryProbeResult {
    pub config: EntryProbeConfig,
    pub threshold: f64,
    pub records: Vec<EntryProbeRecord>,
    pub stop: ProbeStop,
    pub hits: usize,
    pub frequency: f64,
    /// `p^{δ ln n}`
    pub path_bound: f64,
    /// `n^{-ε}`
    pub epsilon_bound: f64,
}

/// Runs the construction: `H_i` is the set of sites the generation method
/// samples from the current frontier point (`C ∪ ∂C`, or the point alone when
/// it is closed), `G_i = G_{i-1} ∪ H_i` with holes filled, and the walk runs
/// until it leaves `G_i`; the site where it lands is the next frontier point.
pub fn entry_probe(cfg: &EntryProbeConfig) -> Result<EntryProbeResult> {
    check_probability(cfg.p)?;
    if !(cfg.delta > 0.0) || !(0.0..1.0).contains(&cfg.theta) || !(cfg.epsilon > 0.0) {
        return Err(Error::param("need δ > 0, 0 <= θ < 1 and ε > 0"));
    }
    let box_spec = BoxSpec::new(cfg.n, cfg.d)?;
    let params = KernelParams::new(cfg.beta, cfg.d)?;
    let lazy = LazyEnvironment::new(SiteField::bernoulli(cfg.d, cfg.p, cfg.seed, cfg.replica)?);
    let mut sizes = LazyClusters::with_cap(lazy.clone(), cfg.growth_cap);
    let mut walker = Walker::new(params, LatticePoint::origin(cfg.d), cfg.seed, cfg.replica);
    let threshold = cfg.threshold();
    let budget = cfg.step_budget();

    let mut g: FxHashSet<LatticePoint> = FxHashSet::default();
    let mut seen_clusters: FxHashSet<LatticePoint> = FxHashSet::default();
    let mut records: Vec<EntryProbeRecord> = Vec::new();
    let mut frontier = walker.position();
    let stop = loop {
        let grown = lazy.grow_cluster(frontier, cfg.growth_cap)?;
        if grown.cluster.iter().any(|y| seen_clusters.contains(y)) {
            return Err(Error::Invariant(format!(
                "cluster at {frontier} meets an earlier one"
            )));
        }
        seen_clusters.extend(grown.cluster.iter().copied());
        let before = g.len();
        g.extend(grown.sampled_sites().copied());
        let filled = holes(&g, None)?;
        g.extend(filled);
        if g.len() <= before {
            return Err(Error::Invariant("G did not grow".into()));
        }

        let start = walker.time();
        while g.contains(&walker.position()) {
            if walker.time() - start >= cfg.max_walk_steps {
                break;
            }
            walker.step(&mut sizes)?;
        }
        if g.contains(&walker.position()) {
            break ProbeStop::WalkBudget;
        }
        let site = walker.position();
        let cluster_size = sizes.size_of(&site)?;
        records.push(EntryProbeRecord {
            step_index: records.len() + 1,
            tau: walker.time(),
            site,
            cluster_size,
            found_big: cluster_size as f64 >= threshold,
            g_size: g.len(),
        });
        if !box_spec.contains(&site) {
            break ProbeStop::LeftBox;
        }
        if records.len() >= budget {
            break ProbeStop::StepBudget;
        }
        frontier = site;
    };

    let hits = records.iter().filter(|r| r.found_big).count();
    Ok(EntryProbeResult {
        config: cfg.clone(),
        threshold,
        frequency: if records.is_empty() {
            0.0
        } else {
            hits as f64 / records.len() as f64
        },
        hits,
        records,
        stop,
        path_bound: cfg.p.powf(threshold),
        epsilon_bound: (cfg.n as f64).powf(-cfg.epsilon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_the_constraints() {
        let c = EntryProbeConfig::new(0.3, 2, 1024, 0.5, 1.0, 1);
        assert!(c.delta * (1.0 / c.p).ln() < c.epsilon);
        assert!(1.0 - c.theta > c.epsilon);
        assert_eq!(c.step_budget(), 182);
        assert!((c.threshold() - 0.5 * 1024f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn structural_invariants() {
        for seed in 0..5 {
            let r = entry_probe(&EntryProbeConfig::new(0.3, 2, 1024, 0.5, 1.0, seed)).unwrap();
            eprintln!(
                "{seed}: {:?} {} records, {} hits",
                r.stop,
                r.records.len(),
                r.hits
            );
            assert!(r.stop != ProbeStop::LeftBox);
            assert!(r.records.len() <= 182);
            assert_eq!(r.stop == ProbeStop::StepBudget, r.records.len() == 182);
            assert!(r
                .records
                .windows(2)
                .all(|w| w[0].tau < w[1].tau && w[0].g_size < w[1].g_size));
            assert!(r.path_bound > r.epsilon_bound);
        }
    }

    #[test]
    fn degenerate_threshold_counts_every_open_entry() {
        // δ ln n <= 1: found_big exactly when the entered site is open
        let mut cfg = EntryProbeConfig::new(0.3, 2, 16, 0.3, 0.5, 2);
        cfg.theta = 0.0;
        let r = entry_probe(&cfg).unwrap();
        assert!(r.threshold <= 1.0);
        assert!(r
            .records
            .iter()
            .all(|x| x.found_big == (x.cluster_size > 0)));
    }

    #[test]
    fn deterministic() {
        let c = EntryProbeConfig::new(0.3, 2, 256, 0.5, 1.0, 9);
        assert_eq!(entry_probe(&c).unwrap(), entry_probe(&c).unwrap());
    }

    #[test]
    fn rejects_bad_knobs() {
        let mut c = EntryProbeConfig::new(0.3, 2, 64, 0.5, 1.0, 1);
        c.theta = 1.0;
        assert!(entry_probe(&c).is_err());
        c.theta = 0.2;
        c.delta = 0.0;
        assert!(entry_probe(&c).is_err());
    }
}
