//! Discrete-time simulation of the walk and its continuization by a rate-1
//! Poisson clock.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSizes;
use crate::error::{Error, Result};
use crate::kernel::{local_kernel, restrict_to_box, KernelParams, Restriction};
use crate::lattice::{BoxSpec, LatticePoint};
use crate::rng::{CounterRng, Stream};

/// Confinement of the walk to a box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRestriction {
    pub box_spec: BoxSpec,
    pub restriction: Restriction,
}

/// One move from `x`.
pub fn step<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
    rng: &mut CounterRng,
) -> Result<LatticePoint> {
    if params.beta == 0.0 {
        let k = rng.below(2 * x.dim() as u32) as usize;
        return Ok(x.shifted(k / 2, if k % 2 == 0 { 1 } else { -1 }));
    }
    let k = local_kernel(sizes, x, params)?;
    Ok(k.neighbors()[k.pick(rng.next_f64())])
}

/// One move of the restricted chain `ξ^{(n)}`.
pub fn step_restricted<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    x: &LatticePoint,
    params: &KernelParams,
    confine: &BoxRestriction,
    rng: &mut CounterRng,
) -> Result<LatticePoint> {
    if confine.restriction == Restriction::SelfLoop {
        // same draw as the free walk; leaving moves are rejected in place
        let y = step(sizes, x, params, rng)?;
        return Ok(if confine.box_spec.contains(&y) { y } else { *x });
    }
    let row = restrict_to_box(sizes, x, params, &confine.box_spec, confine.restriction)?;
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (y, p) in &row.moves {
        acc += p;
        if u < acc {
            return Ok(*y);
        }
    }
    Ok(row.moves.last().map_or(*x, |(y, _)| *y))
}

/// A single walker with its own random stream and running maximum.
#[derive(Clone, Debug)]
pub struct Walker {
    pub params: KernelParams,
    pub confine: Option<BoxRestriction>,
    position: LatticePoint,
    time: u64,
    max_disp: u32,
    rng: CounterRng,
}

impl Walker {
    pub fn new(params: KernelParams, start: LatticePoint, seed: u64, replica: u64) -> Self {
        Walker {
            params,
            confine: None,
            position: start,
            time: 0,
            max_disp: start.norm_inf(),
            rng: CounterRng::new(seed, Stream::Walker(replica)),
        }
    }

    pub fn confined(mut self, confine: BoxRestriction) -> Self {
        self.confine = Some(confine);
        self
    }

    #[inline]
    pub fn position(&self) -> LatticePoint {
        self.position
    }

    #[inline]
    pub fn time(&self) -> u64 {
        self.time
    }

    /// `max_{s <= t} ‖ξ(s)‖∞`
    #[inline]
    pub fn max_displacement(&self) -> u32 {
        self.max_disp
    }

    #[inline]
    pub fn step<S: ClusterSizes + ?Sized>(&mut self, sizes: &mut S) -> Result<LatticePoint> {
        let next = match &self.confine {
            None => step(sizes, &self.position, &self.params, &mut self.rng)?,
            Some(c) => step_restricted(sizes, &self.position, &self.params, c, &mut self.rng)?,
        };
        self.position = next;
        self.time += 1;
        self.max_disp = self.max_disp.max(next.norm_inf());
        Ok(next)
    }
}

/// Positions `ξ(0..=t_max)` with cluster annotations and `M(t)`; when
/// continuized, `jump_times[k]` is the time of the `k`-th jump (`jump_times[0] = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkTrajectory {
    pub positions: Vec<LatticePoint>,
    /// `|C(ξ(t))|`
    pub cluster_sizes: Vec<u32>,
    /// Identity of `C(ξ(t))`, `None` on closed sites.
    pub cluster_labels: Vec<Option<u32>>,
    pub max_displacement: Vec<u32>,
    pub jump_times: Option<Vec<f64>>,
}

impl WalkTrajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_continuous(&self) -> bool {
        self.jump_times.is_some()
    }

    /// The embedded jump chain: the same trajectory with the clock removed.
    pub fn embedded(&self) -> WalkTrajectory {
        WalkTrajectory {
            jump_times: None,
            ..self.clone()
        }
    }

    /// `ξ̂(t) = ξ(N_t)` for a continuized trajectory.
    pub fn position_at(&self, t: f64) -> Option<LatticePoint> {
        let times = self.jump_times.as_ref()?;
        let k = times.partition_point(|&s| s <= t);
        k.checked_sub(1).map(|k| self.positions[k])
    }
}

/// Simulates `t_max` steps from `start` (the origin by default).
pub fn simulate_discrete<S: ClusterSizes + ?Sized>(
    sizes: &mut S,
    params: &KernelParams,
    start: Option<LatticePoint>,
    confine: Option<BoxRestriction>,
    t_max: usize,
    seed: u64,
    replica: u64,
) -> Result<WalkTrajectory> {
    let start = start.unwrap_or_else(|| LatticePoint::origin(params.d));
    if start.dim() != params.d {
        return Err(Error::param("start site has the wrong dimension"));
    }
    if let Some(c) = &confine {
        if !c.box_spec.contains(&start) {
            return Err(Error::param(format!("start {start} outside the box")));
        }
    }
    let mut walker = Walker::new(*params, start, seed, replica);
    walker.confine = confine;
    let mut traj = WalkTrajectory {
        positions: Vec::with_capacity(t_max + 1),
        cluster_sizes: Vec::with_capacity(t_max + 1),
        cluster_labels: Vec::with_capacity(t_max + 1),
        max_displacement: Vec::with_capacity(t_max + 1),
        jump_times: None,
    };
    let record = |traj: &mut WalkTrajectory, w: &Walker, sizes: &mut S| -> Result<()> {
        let x = w.position();
        traj.positions.push(x);
        traj.cluster_sizes.push(sizes.size_of(&x)?);
        traj.cluster_labels.push(sizes.label_of(&x)?);
        traj.max_displacement.push(w.max_displacement());
        Ok(())
    };
    record(&mut traj, &walker, sizes)?;
    for _ in 0..t_max {
        walker.step(sizes)?;
        record(&mut traj, &walker, sizes)?;
    }
    Ok(traj)
}

/// Jump times `S_k = T_1 + ... + T_k` of a rate-1 Poisson process.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuizedClock {
    pub jump_times: Vec<f64>,
}

impl ContinuizedClock {
    pub const RATE: f64 = 1.0;

    /// `jumps` exponential(1) holding times.
    pub fn sample(jumps: usize, rng: &mut CounterRng) -> Self {
        let mut t = 0.0;
        let jump_times = (0..jumps)
            .map(|_| {
                let hold: f64 = rng.sample(Exp1);
                t += hold;
                t
            })
            .collect();
        ContinuizedClock { jump_times }
    }

    /// `N_t`, the number of jumps in `[0, t]`.
    pub fn count_until(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }
}

/// `N_t` for a fresh rate-1 Poisson process, drawn without storing jump times.
pub fn poisson_count(t: f64, rng: &mut CounterRng) -> u64 {
    let mut s = 0.0;
    let mut k = 0;
    loop {
        let hold: f64 = rng.sample(Exp1);
        s += hold;
        if s > t {
            return k;
        }
        k += 1;
    }
}

/// Attaches exponential(1) holding times to a discrete trajectory.
pub fn continuize(traj: &WalkTrajectory, seed: u64, replica: u64) -> WalkTrajectory {
    let mut out = traj.embedded();
    if traj.is_empty() {
        out.jump_times = Some(Vec::new());
        return out;
    }
    let mut rng = CounterRng::new(seed, Stream::Clock(replica));
    let clock = ContinuizedClock::sample(traj.len() - 1, &mut rng);
    let mut times = Vec::with_capacity(traj.len());
    times.push(0.0);
    times.extend(clock.jump_times);
    out.jump_times = Some(times);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::LazyClusters;
    use crate::env::SiteField;
    use crate::stats::mean;

    fn lazy(seed: u64) -> LazyClusters {
        LazyClusters::from_field(SiteField::bernoulli(2, 0.3, seed, 0).unwrap())
    }

    #[test]
    fn zero_steps_is_origin_only() {
        let p = KernelParams::new(1.0, 2).unwrap();
        let t = simulate_discrete(&mut lazy(1), &p, None, None, 0, 1, 0).unwrap();
        assert_eq!(t.positions, vec![LatticePoint::origin(2)]);
    }

    #[test]
    fn trajectory_is_a_nearest_neighbor_path() {
        let p = KernelParams::new(0.5, 2).unwrap();
        let t = simulate_discrete(&mut lazy(2), &p, None, None, 2000, 4, 0).unwrap();
        assert_eq!(t.len(), 2001);
        assert!(t.positions.windows(2).all(|w| w[0].is_neighbor(&w[1])));
        assert!(t.max_displacement.windows(2).all(|w| w[0] <= w[1]));
        for (i, x) in t.positions.iter().enumerate() {
            assert!(t.max_displacement[i] >= x.norm_inf());
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = KernelParams::new(2.0, 2).unwrap();
        let a = simulate_discrete(&mut lazy(3), &p, None, None, 500, 9, 1).unwrap();
        let b = simulate_discrete(&mut lazy(3), &p, None, None, 500, 9, 1).unwrap();
        assert_eq!(a, b);
        // parallel replicas give the same answer as sequential ones
        use rayon::prelude::*;
        let par: Vec<_> = (0..4u64)
            .into_par_iter()
            .map(|r| simulate_discrete(&mut lazy(3), &p, None, None, 200, 9, r).unwrap())
            .collect();
        for (r, tr) in par.iter().enumerate() {
            assert_eq!(
                tr,
                &simulate_discrete(&mut lazy(3), &p, None, None, 200, 9, r as u64).unwrap()
            );
        }
    }

    /// Independent simple random walk: coordinate increments drawn directly.
    fn srw_l2_sq(t: usize, rng: &mut CounterRng) -> f64 {
        let (mut a, mut b) = (0i64, 0i64);
        for _ in 0..t {
            match rng.below(4) {
                0 => a += 1,
                1 => a -= 1,
                2 => b += 1,
                _ => b -= 1,
            }
        }
        (a * a + b * b) as f64
    }

    #[test]
    fn beta_zero_matches_simple_random_walk() {
        let t = 400;
        let walks = 1000;
        let p = KernelParams::new(0.0, 2).unwrap();
        let mut ours = Vec::new();
        let mut oracle = Vec::new();
        let mut orng = CounterRng::new(77, Stream::Aux(1, 0));
        for r in 0..walks {
            let tr = simulate_discrete(&mut lazy(r), &p, None, None, t, 5, r).unwrap();
            ours.push(tr.positions.last().unwrap().norm2_sq() as f64 / t as f64);
            oracle.push(srw_l2_sq(t, &mut orng) / t as f64);
        }
        let m = mean(&ours);
        assert!((m - 1.0).abs() < 0.1, "E|ξ_t|²/t = {m}");
        assert!((m - mean(&oracle)).abs() < 0.15);
    }

    #[test]
    fn confined_walk_stays_in_box() {
        let b = BoxSpec::new(4, 2).unwrap();
        for r in [Restriction::SelfLoop, Restriction::Renormalize] {
            let c = BoxRestriction {
                box_spec: b,
                restriction: r,
            };
            let p = KernelParams::new(1.0, 2).unwrap();
            let t = simulate_discrete(&mut lazy(1), &p, None, Some(c), 3000, 2, 0).unwrap();
            assert!(t.positions.iter().all(|x| b.contains(x)));
        }
    }

    #[test]
    fn continuize_preserves_the_jump_chain() {
        let p = KernelParams::new(1.0, 2).unwrap();
        let t = simulate_discrete(&mut lazy(5), &p, None, None, 1000, 1, 0).unwrap();
        let c = continuize(&t, 1, 0);
        assert_eq!(c.embedded(), t);
        let times = c.jump_times.as_ref().unwrap();
        assert_eq!(times.len(), t.len());
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(c.position_at(0.0), Some(t.positions[0]));
        assert_eq!(c.position_at(times[10]), Some(t.positions[10]));
    }

    #[test]
    fn continuize_empty() {
        let empty = WalkTrajectory {
            positions: vec![],
            cluster_sizes: vec![],
            cluster_labels: vec![],
            max_displacement: vec![],
            jump_times: None,
        };
        let c = continuize(&empty, 0, 0);
        assert!(c.is_empty());
        assert_eq!(c.jump_times, Some(vec![]));
    }

    #[test]
    fn holding_times_have_unit_mean() {
        let mut rng = CounterRng::new(12, Stream::Clock(0));
        let clock = ContinuizedClock::sample(1_000_000, &mut rng);
        let m = clock.jump_times.last().unwrap() / 1e6;
        assert!((m - 1.0).abs() < 0.01, "mean holding {m}");
    }

    #[test]
    fn poisson_count_concentrates() {
        use rayon::prelude::*;
        let t = 1e5;
        let good = (0..1000u64)
            .into_par_iter()
            .filter(|&r| {
                let mut rng = CounterRng::new(3, Stream::Clock(r));
                ((poisson_count(t, &mut rng) as f64 / t) - 1.0).abs() <= 0.02
            })
            .count();
        assert!(good >= 990, "{good}");
        let mut rng = CounterRng::new(3, Stream::Clock(5000));
        let clock = ContinuizedClock::sample(200, &mut rng);
        let t_mid = clock.jump_times[99];
        assert_eq!(clock.count_until(t_mid), 100);
    }
}
