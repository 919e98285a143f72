//! Run configuration: a flat TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use clusterwalk::env::subcritical_guard;
use clusterwalk::{ClusterScope, Restriction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub p: f64,
    pub d: usize,
    pub n: usize,
    pub beta: f64,
    pub beta_grid: Vec<f64>,
    pub t_max: u64,
    pub replicas: usize,
    pub seed: u64,
    pub restriction: Restriction,
    pub cluster_scope: ClusterScope,
    pub margin: Option<usize>,
    pub out: PathBuf,
    pub deterministic: bool,
    pub allow_supercritical: bool,
    pub quenched: bool,
    pub confine: bool,
    pub continuous: bool,
    /// Box sizes for the gap sweep; empty means `[n]`.
    pub ns: Vec<usize>,
    /// Environments per box size in the gap sweep.
    pub seeds: usize,
    pub sampled_pairs: Option<usize>,
    pub samples: usize,
    pub delta: f64,
    pub theta: f64,
    pub epsilon: Option<f64>,
    pub runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            p: 0.3,
            d: 2,
            n: 16,
            beta: 0.1,
            beta_grid: vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0],
            t_max: 10_000,
            replicas: 100,
            seed: 1,
            restriction: Restriction::SelfLoop,
            cluster_scope: ClusterScope::Margin,
            margin: None,
            out: PathBuf::from("out"),
            deterministic: false,
            allow_supercritical: false,
            quenched: false,
            confine: false,
            continuous: false,
            ns: Vec::new(),
            seeds: 1,
            sampled_pairs: None,
            samples: 100_000,
            delta: 0.5,
            theta: 0.25,
            epsilon: None,
            runs: 1,
        }
    }
}

/// Flags shared by every subcommand; anything set here wins over the file.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Flat TOML file with any of the keys below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Open-site probability
    #[arg(long)]
    pub p: Option<f64>,
    /// Lattice dimension, 1 to 3
    #[arg(long)]
    pub d: Option<usize>,
    /// Box side length
    #[arg(long)]
    pub n: Option<usize>,
    /// Attraction strength β ≥ 0
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated β values for `sweep`
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
    /// Walk steps per replica
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Independent walks (and environments unless quenched)
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// selfloop or renormalize
    #[arg(long)]
    pub restriction: Option<Restriction>,
    /// margin or truncated
    #[arg(long)]
    pub cluster_scope: Option<ClusterScope>,
    /// Initial margin ring width around the box
    #[arg(long)]
    pub margin: Option<usize>,
    /// Omit timestamps so every output is byte-reproducible
    #[arg(long)]
    pub deterministic: bool,
    /// Skip the subcritical guard on p
    #[arg(long)]
    pub allow_supercritical: bool,
    /// Reuse one environment across replicas
    #[arg(long)]
    pub quenched: bool,
    /// Confine `simulate` to the box
    #[arg(long)]
    pub confine: bool,
    /// Continuize `simulate` with a rate-1 Poisson clock
    #[arg(long)]
    pub continuous: bool,
    /// Comma-separated box sizes for `gap`
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Consecutive seeds per box size for `gap`
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Estimate A from this many sampled pairs when the box is too large
    #[arg(long)]
    pub sampled_pairs: Option<usize>,
    /// Cluster samples for `tail`
    #[arg(long)]
    pub samples: Option<usize>,
    /// Big-cluster threshold factor: size ≥ δ ln n
    #[arg(long)]
    pub delta: Option<f64>,
    /// Construction budget exponent: n^(1-θ) steps
    #[arg(long)]
    pub theta: Option<f64>,
    /// Companion bound exponent n^(-ε)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Independent `entry-probe` runs
    #[arg(long)]
    pub runs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// File (if any), then flags, then validation.
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self, CliError> {
        let mut c = match &flags.config {
            Some(path) => Self::load(path)?,
            None => RunConfig::default(),
        };
        c.command = command.to_string();
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &flags.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        take!(
            p,
            d,
            n,
            beta,
            beta_grid,
            t_max,
            replicas,
            seed,
            out,
            restriction,
            cluster_scope
        );
        take!(ns, seeds, samples, delta, theta, runs);
        if flags.margin.is_some() {
            c.margin = flags.margin;
        }
        if flags.sampled_pairs.is_some() {
            c.sampled_pairs = flags.sampled_pairs;
        }
        if flags.epsilon.is_some() {
            c.epsilon = flags.epsilon;
        }
        c.deterministic |= flags.deterministic;
        c.allow_supercritical |= flags.allow_supercritical;
        c.quenched |= flags.quenched;
        c.confine |= flags.confine;
        c.continuous |= flags.continuous;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=3).contains(&self.d) {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p must lie in (0, 1), got {}", self.p));
        }
        let guard = subcritical_guard(self.d);
        if !self.allow_supercritical && self.p >= guard {
            return bad(format!(
                "p = {} is not safely subcritical in d = {} (limit {guard}); pass --allow-supercritical to override",
                self.p, self.d
            ));
        }
        if self.n == 0 || self.ns.contains(&0) {
            return bad("n must be at least 1".into());
        }
        let betas = std::iter::once(self.beta).chain(self.beta_grid.iter().copied());
        if betas.clone().any(|b| !b.is_finite() || b < 0.0) {
            return bad("β must be finite and nonnegative".into());
        }
        if self.replicas == 0 || self.seeds == 0 || self.runs == 0 {
            return bad("replicas, seeds and runs must be positive".into());
        }
        Ok(())
    }

    pub fn box_sizes(&self) -> Vec<usize> {
        if self.ns.is_empty() {
            vec![self.n]
        } else {
            self.ns.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.command = "gap".into();
        c.margin = Some(3);
        c.epsilon = Some(0.61);
        c.ns = vec![4, 8];
        c.restriction = Restriction::Renormalize;
        c.beta = 0.1 + 0.2;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "p = 0.2\nn = 8\nseed = 5\n").unwrap();
        let flags = Flags {
            config: Some(path),
            seed: Some(9),
            ..Flags::default()
        };
        let c = RunConfig::resolve("tail", &flags).unwrap();
        assert_eq!((c.p, c.n, c.seed), (0.2, 8, 9));
        assert_eq!(c.command, "tail");
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            RunConfig {
                p: 1.2,
                ..ok.clone()
            },
            RunConfig {
                p: 0.6,
                ..ok.clone()
            },
            RunConfig { d: 4, ..ok.clone() },
            RunConfig { n: 0, ..ok.clone() },
            RunConfig {
                beta: -1.0,
                ..ok.clone()
            },
            RunConfig {
                replicas: 0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(RunConfig {
            p: 0.6,
            allow_supercritical: true,
            ..ok
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }
}
