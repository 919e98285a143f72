//! Site-percolation environments.
//!
//! A [`SiteField`] is the infinite i.i.d. Bernoulli(p) field `ω` as a pure
//! function of `(seed, replica, site)`. An [`Environment`] materializes the field
//! densely on `Λ_n` plus a margin ring; a [`LazyEnvironment`] answers queries
//! straight from the field, optionally pinned to previously recorded statuses.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, LatticePoint, Region};
use crate::rng::{SiteHasher, Stream};

/// Default cap on materialized sites for eager environments.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 26;

/// `max(1, 4⌈ln n⌉)`; at least one ring is needed so boundary sites of the box
/// see all `2d` neighbors.
pub fn default_margin(n: usize) -> usize {
    let m = 4 * (n as f64).ln().ceil() as usize;
    m.max(1)
}

/// Largest `p` accepted without an explicit override: conservative values
/// below the numerical site-percolation thresholds (`p_cr ≈ 0.593` for `d=2`,
/// `≈ 0.312` for `d=3`; `p_cr = 1` for `d=1`).
pub fn subcritical_guard(d: usize) -> f64 {
    match d {
        1 => 1.0,
        2 => 0.55,
        _ => 0.30,
    }
}

pub fn check_probability(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("p must lie in (0, 1), got {p}")))
    }
}

#[derive(Clone, Debug)]
enum Source {
    Bernoulli {
        p: f64,
        hasher: SiteHasher,
    },
    /// Hand-built environments: the listed sites are open, all others closed.
    Explicit(FxHashSet<LatticePoint>),
}

/// The status map `x -> ω(x)` on all of `Z^d`.
#[derive(Clone, Debug)]
pub struct SiteField {
    dim: usize,
    source: Source,
    seed: u64,
    replica: u64,
}

impl SiteField {
    pub fn bernoulli(dim: usize, p: f64, seed: u64, replica: u64) -> Result<Self> {
        check_probability(p)?;
        check_dim(dim)?;
        Ok(SiteField {
            dim,
            source: Source::Bernoulli {
                p,
                hasher: SiteHasher::new(seed, Stream::Environment(replica)),
            },
            seed,
            replica,
        })
    }

    pub fn explicit(dim: usize, open: impl IntoIterator<Item = LatticePoint>) -> Result<Self> {
        check_dim(dim)?;
        let open: FxHashSet<_> = open.into_iter().collect();
        if let Some(bad) = open.iter().find(|x| x.dim() != dim) {
            return Err(Error::param(format!("site {bad} has wrong dimension")));
        }
        Ok(SiteField {
            dim,
            source: Source::Explicit(open),
            seed: 0,
            replica: 0,
        })
    }

    /// Every site closed.
    pub fn all_closed(dim: usize) -> Result<Self> {
        Self::explicit(dim, std::iter::empty())
    }

    #[inline]
    pub fn is_open(&self, x: &LatticePoint) -> bool {
        match &self.source {
            Source::Bernoulli { p, hasher } => hasher.uniform(x.coords()) < *p,
            Source::Explicit(open) => open.contains(x),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> Option<f64> {
        match self.source {
            Source::Bernoulli { p, .. } => Some(p),
            Source::Explicit(_) => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=crate::lattice::MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::param(format!("unsupported dimension {dim}")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SampleOptions {
    /// `None` selects [`default_margin`].
    pub margin: Option<usize>,
    pub memory_budget: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            margin: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Statuses materialized on `Λ_{n+2m}`.
#[derive(Clone, Debug)]
pub struct Environment {
    box_spec: BoxSpec,
    margin: usize,
    region: Region,
    open: Vec<bool>,
    p: f64,
    seed: u64,
    field: Option<SiteField>,
    pub(crate) escalations: u32,
}

/// Samples an i.i.d. Bernoulli(p) environment on the box plus margin.
pub fn sample_environment(p: f64, box_spec: BoxSpec, seed: u64) -> Result<Environment> {
    sample_environment_with(p, box_spec, seed, &SampleOptions::default())
}

pub fn sample_environment_with(
    p: f64,
    box_spec: BoxSpec,
    seed: u64,
    opts: &SampleOptions,
) -> Result<Environment> {
    let field = SiteField::bernoulli(box_spec.d, p, seed, 0)?;
    Environment::materialize(
        field,
        box_spec,
        opts.margin.unwrap_or(default_margin(box_spec.n)),
        opts.memory_budget,
    )
}

impl Environment {
    /// Materializes `field` on the box grown by `margin`.
    pub fn materialize(
        field: SiteField,
        box_spec: BoxSpec,
        margin: usize,
        memory_budget: usize,
    ) -> Result<Self> {
        if field.dim() != box_spec.d {
            return Err(Error::param("field and box dimensions differ"));
        }
        let region = box_spec.region().grown(margin);
        let volume = region
            .checked_volume()
            .filter(|&v| v <= memory_budget)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "box n={} d={} with margin {margin} exceeds the budget of {memory_budget} sites",
                    box_spec.n, box_spec.d
                ))
            })?;
        let open = (0..volume)
            .map(|i| field.is_open(&region.point(i)))
            .collect();
        Ok(Environment {
            box_spec,
            margin,
            region,
            open,
            p: field.p().unwrap_or(f64::NAN),
            seed: field.seed(),
            field: Some(field),
            escalations: 0,
        })
    }

    /// An environment with explicit statuses on `Λ_{n+2m}` in row-major order.
    pub fn from_statuses(
        box_spec: BoxSpec,
        margin: usize,
        statuses: Vec<bool>,
        p: f64,
        seed: u64,
    ) -> Result<Self> {
        let region = box_spec.region().grown(margin);
        if region.checked_volume() != Some(statuses.len()) {
            return Err(Error::param(format!(
                "expected {} statuses, got {}",
                region.volume(),
                statuses.len()
            )));
        }
        Ok(Environment {
            box_spec,
            margin,
            region,
            open: statuses,
            p,
            seed,
            field: None,
            escalations: 0,
        })
    }

    /// Re-materializes the same field on a wider margin. Statuses already
    /// present are unchanged because the field is a pure function of the site.
    pub fn with_margin(&self, margin: usize, memory_budget: usize) -> Result<Self> {
        let field = self.field.clone().ok_or_else(|| {
            Error::Capacity("environment has no generating field; cannot widen margin".into())
        })?;
        let mut env = Environment::materialize(field, self.box_spec, margin, memory_budget)?;
        env.escalations = self.escalations;
        Ok(env)
    }

    pub fn box_spec(&self) -> BoxSpec {
        self.box_spec
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn field(&self) -> Option<&SiteField> {
        self.field.as_ref()
    }

    /// Number of times the margin was doubled while labeling.
    pub fn escalations(&self) -> u32 {
        self.escalations
    }

    pub fn statuses(&self) -> &[bool] {
        &self.open
    }

    pub fn status(&self, x: &LatticePoint) -> Result<bool> {
        self.region
            .index(x)
            .map(|i| self.open[i])
            .ok_or(Error::OutOfRegion(*x))
    }

    #[inline]
    pub(crate) fn status_at(&self, idx: usize) -> bool {
        self.open[idx]
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Open fraction over `Λ_n` only.
    pub fn box_open_fraction(&self) -> f64 {
        let open = self
            .box_spec
            .sites()
            .filter(|x| self.open[self.region.index(x).unwrap()])
            .count();
        open as f64 / self.box_spec.volume() as f64
    }
}

/// Environment on all of `Z^d`, answered lazily from a field. Statuses can be
/// pinned (e.g. to replay an eager environment); pinned values take priority.
#[derive(Clone, Debug)]
pub struct LazyEnvironment {
    field: SiteField,
    pinned: FxHashMap<LatticePoint, bool>,
}

impl LazyEnvironment {
    pub fn new(field: SiteField) -> Self {
        LazyEnvironment {
            field,
            pinned: FxHashMap::default(),
        }
    }

    /// Replays the statuses of an eager environment; outside its region the
    /// eager environment's field (or closed, if it has none) answers.
    pub fn replay(env: &Environment) -> Self {
        let field = env
            .field()
            .cloned()
            .unwrap_or_else(|| SiteField::all_closed(env.box_spec().d).unwrap());
        let mut lazy = LazyEnvironment::new(field);
        let region = env.region();
        for (i, &o) in env.statuses().iter().enumerate() {
            lazy.pinned.insert(region.point(i), o);
        }
        lazy
    }

    pub fn pin(&mut self, x: LatticePoint, open: bool) {
        self.pinned.insert(x, open);
    }

    #[inline]
    pub fn is_open(&self, x: &LatticePoint) -> bool {
        if self.pinned.is_empty() {
            return self.field.is_open(x);
        }
        match self.pinned.get(x) {
            Some(&o) => o,
            None => self.field.is_open(x),
        }
    }

    pub fn field(&self) -> &SiteField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_probability() {
        let b = BoxSpec::new(4, 2).unwrap();
        for p in [0.0, 1.0, 1.2, -0.1, f64::NAN] {
            assert!(matches!(
                sample_environment(p, b, 1),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn capacity_error_for_huge_box() {
        let b = BoxSpec::new(10_000, 3).unwrap();
        assert!(matches!(
            sample_environment(0.3, b, 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn tiny_p_closes_everything() {
        let env = sample_environment(1e-9, BoxSpec::new(8, 2).unwrap(), 5).unwrap();
        assert_eq!(env.box_open_fraction(), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = BoxSpec::new(4, 2).unwrap();
        let a = sample_environment(0.3, b, 42).unwrap();
        let c = sample_environment(0.3, b, 42).unwrap();
        assert_eq!(a.statuses(), c.statuses());
        let other = sample_environment(0.3, BoxSpec::new(16, 2).unwrap(), 43).unwrap();
        let same = sample_environment(0.3, BoxSpec::new(16, 2).unwrap(), 42).unwrap();
        assert_ne!(other.statuses(), same.statuses());
    }

    #[test]
    fn widening_margin_keeps_inner_statuses() {
        let b = BoxSpec::new(6, 2).unwrap();
        let env = sample_environment_with(
            0.4,
            b,
            9,
            &SampleOptions {
                margin: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let wide = env.with_margin(5, DEFAULT_MEMORY_BUDGET).unwrap();
        for x in env.region().points() {
            assert_eq!(env.status(&x).unwrap(), wide.status(&x).unwrap());
        }
    }

    #[test]
    fn margin_defaults() {
        assert_eq!(default_margin(1), 1);
        assert_eq!(default_margin(64), 4 * 5);
        assert_eq!(default_margin(16), 12);
    }

    #[test]
    fn open_fraction_law_of_large_numbers() {
        // 10^4 seeds of a 64x64 box, counted independently of Environment
        // through the raw field.
        let b = BoxSpec::new(64, 2).unwrap();
        let mut open = 0usize;
        let seeds = 10_000u64;
        for seed in 0..seeds {
            let f = SiteField::bernoulli(2, 0.3, seed, 0).unwrap();
            open += b.sites().filter(|x| f.is_open(x)).count();
        }
        let frac = open as f64 / (seeds as f64 * 4096.0);
        assert!((frac - 0.3).abs() < 0.01, "open fraction {frac}");
        let env = sample_environment(0.3, b, 77).unwrap();
        assert!((env.box_open_fraction() - 0.3).abs() < 0.05);
    }

    #[test]
    fn replay_pins_statuses() {
        let b = BoxSpec::new(4, 1).unwrap();
        let env =
            Environment::from_statuses(b, 1, vec![true, false, true, true, false, false], 0.5, 0)
                .unwrap();
        let lazy = LazyEnvironment::replay(&env);
        for x in env.region().points() {
            assert_eq!(lazy.is_open(&x), env.status(&x).unwrap());
        }
        assert!(!lazy.is_open(&LatticePoint::at(&[50])));
    }
}
