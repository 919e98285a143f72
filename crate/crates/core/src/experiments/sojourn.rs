use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replica_clusters;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::walk::simulate_discrete;
use crate::walk::WalkTrajectory;

/// One maximal run of the trajectory inside a single open cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SojournRecord {
    pub cluster_label: u32,
    pub cluster_size: u32,
    /// 1 for the first entry into this cluster.
    pub visit_index: u32,
    /// Step index of the entry (`T'_i`).
    pub entry_step: usize,
    /// Clock value at entry; the step index for discrete trajectories.
    pub entry_time: f64,
    /// Number of trajectory points in the run, at least 1.
    pub steps: usize,
    /// Time spent in the cluster (`T_i`): `steps` for discrete trajectories,
    /// otherwise the clock time between entry and exit.
    pub sojourn: f64,
    /// The run reaches the end of the trajectory.
    pub censored: bool,
}

/// Splits a trajectory into maximal runs inside open clusters.
pub fn sojourn_statistics(traj: &WalkTrajectory) -> Vec<SojournRecord> {
    let mut out = Vec::new();
    let mut visits: BTreeMap<u32, u32> = BTreeMap::new();
    let len = traj.len();
    let clock = |k: usize| traj.jump_times.as_ref().map_or(k as f64, |j| j[k]);
    let mut k = 0;
    while k < len {
        let Some(label) = traj.cluster_labels[k] else {
            k += 1;
            continue;
        };
        let start = k;
        while k < len && traj.cluster_labels[k] == Some(label) {
            k += 1;
        }
        let visit = visits.entry(label).or_default();
        *visit += 1;
        let censored = k == len;
        let sojourn = match &traj.jump_times {
            None => (k - start) as f64,
            Some(_) if censored => clock(len - 1) - clock(start),
            Some(_) => clock(k) - clock(start),
        };
        out.push(SojournRecord {
            cluster_label: label,
            cluster_size: traj.cluster_sizes[start],
            visit_index: *visit,
            entry_step: start,
            entry_time: clock(start),
            steps: k - start,
            sojourn,
            censored,
        });
    }
    out
}

/// Mean completed sojourn per cluster size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSojourn {
    pub cluster_size: u32,
    pub visits: usize,
    pub mean_steps: f64,
    /// Lower bound on the mean from the geometric comparison.
    pub floor: f64,
}

/// Lower bound on the expected number of steps per visit to a cluster of
/// size `s`: from every site of such a cluster at most `2d - 1` neighbors
/// lie outside it, all closed, so each step exits with probability at most
/// `(2d - 1) / (2d - 1 + e^{βs})`. A single site is always left after one step.
pub fn geometric_floor(size: u32, d: usize, beta: f64) -> f64 {
    if size <= 1 {
        return 1.0;
    }
    let out = (2 * d - 1) as f64;
    (out + (beta * size as f64).exp()) / out
}

/// Aggregates uncensored records by cluster size.
pub fn mean_sojourn_by_size(records: &[SojournRecord], d: usize, beta: f64) -> Vec<SizeSojourn> {
    let mut acc: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.censored) {
        let e = acc.entry(r.cluster_size).or_default();
        e.0 += 1;
        e.1 += r.steps;
    }
    acc.into_iter()
        .map(|(s, (visits, steps))| SizeSojourn {
            cluster_size: s,
            visits,
            mean_steps: steps as f64 / visits as f64,
            floor: geometric_floor(s, d, beta),
        })
        .collect()
}

/// Sojourn records pooled over annealed replicas of `t_max` steps each.
pub fn sojourn_experiment(
    p: f64,
    d: usize,
    beta: f64,
    t_max: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<SojournRecord>> {
    if replicas == 0 {
        return Err(Error::param("need at least one replica"));
    }
    let params = KernelParams::new(beta, d)?;
    let per: Vec<Vec<SojournRecord>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut sizes = replica_clusters(p, d, seed, r, false)?;
            let traj = simulate_discrete(&mut sizes, &params, None, None, t_max, seed, r)?;
            let recs = sojourn_statistics(&traj);
            check_conservation(&traj, &recs)?;
            Ok(recs)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn check_conservation(traj: &WalkTrajectory, recs: &[SojournRecord]) -> Result<()> {
    let inside: usize = recs.iter().map(|r| r.steps).sum();
    let closed = traj.cluster_labels.iter().filter(|l| l.is_none()).count();
    if inside + closed != traj.len() {
        return Err(Error::Invariant(format!(
            "sojourns {inside} + closed {closed} != {} trajectory points",
            traj.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::LazyClusters;
    use crate::env::SiteField;
    use crate::lattice::LatticePoint;
    use crate::walk::continuize;

    fn field(open: &[[i32; 2]]) -> LazyClusters {
        LazyClusters::from_field(
            SiteField::explicit(2, open.iter().map(|c| LatticePoint::at(c))).unwrap(),
        )
    }

    #[test]
    fn no_open_sites_no_records() {
        let mut s = field(&[]);
        let params = KernelParams::new(1.0, 2).unwrap();
        let traj = simulate_discrete(&mut s, &params, None, None, 500, 1, 0).unwrap();
        assert!(sojourn_statistics(&traj).is_empty());
    }

    #[test]
    fn singletons_last_one_step() {
        let mut s = field(&[[0, 0], [2, 0], [0, 2], [1, 1], [-1, -1], [3, 3]]);
        let params = KernelParams::new(2.0, 2).unwrap();
        let traj = simulate_discrete(&mut s, &params, None, None, 5000, 4, 0).unwrap();
        let recs = sojourn_statistics(&traj);
        assert!(!recs.is_empty());
        assert!(recs
            .iter()
            .all(|r| r.cluster_size == 1 && (r.steps == 1 || r.censored)));
        check_conservation(&traj, &recs).unwrap();
    }

    #[test]
    fn visit_indices_and_entries_increase_per_cluster() {
        let mut s = field(&[[0, 0], [1, 0], [3, 0], [3, 1]]);
        let params = KernelParams::new(1.0, 2).unwrap();
        let traj = simulate_discrete(&mut s, &params, None, None, 20_000, 9, 0).unwrap();
        let recs = sojourn_statistics(&traj);
        let mut last: BTreeMap<u32, (u32, usize)> = BTreeMap::new();
        for r in &recs {
            assert!(r.steps >= 1);
            if let Some((v, e)) = last.get(&r.cluster_label) {
                assert_eq!(r.visit_index, v + 1);
                assert!(r.entry_step > *e);
            } else {
                assert_eq!(r.visit_index, 1);
            }
            last.insert(r.cluster_label, (r.visit_index, r.entry_step));
        }
        check_conservation(&traj, &recs).unwrap();
    }

    #[test]
    fn continuized_sojourns_use_clock_time() {
        let mut s = field(&[[0, 0], [1, 0]]);
        let params = KernelParams::new(1.0, 2).unwrap();
        let traj = simulate_discrete(&mut s, &params, None, None, 2000, 3, 0).unwrap();
        let cont = continuize(&traj, 3, 0);
        let d = sojourn_statistics(&traj);
        let c = sojourn_statistics(&cont);
        assert_eq!(d.len(), c.len());
        for (a, b) in d.iter().zip(&c) {
            assert_eq!(a.steps, b.steps);
            assert_eq!(
                b.entry_time,
                cont.jump_times.as_ref().unwrap()[b.entry_step]
            );
        }
        let total: f64 = c.iter().filter(|r| !r.censored).map(|r| r.sojourn).sum();
        let steps: usize = c.iter().filter(|r| !r.censored).map(|r| r.steps).sum();
        assert!((total / steps as f64 - 1.0).abs() < 0.1);
    }

    #[test]
    fn floor_values() {
        assert_eq!(geometric_floor(1, 2, 3.0), 1.0);
        assert!((geometric_floor(2, 2, 1.0) - (3.0 + 2f64.exp()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pooled_experiment_conserves() {
        let recs = sojourn_experiment(0.3, 2, 1.0, 2000, 8, 1).unwrap();
        let by = mean_sojourn_by_size(&recs, 2, 1.0);
        assert!(by.iter().all(|s| s.visits > 0 && s.mean_steps >= 1.0));
    }
}
