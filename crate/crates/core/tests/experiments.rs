use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use clusterwalk::experiments::{
    beta_sweep, displacement_tail, estimate_exponent, geometric_floor, sojourn_statistics,
};
use clusterwalk::stats::{mean, sample_sd};
use clusterwalk::{
    local_kernel, simulate_discrete, KernelParams, LatticePoint, LazyClusters, SiteField,
};

fn line_cluster(s: i32) -> Vec<LatticePoint> {
    (0..s).map(|k| LatticePoint::at(&[k, 0])).collect()
}

/// Expected number of trajectory points spent in `cluster` from each of its
/// sites: `h = (I - K_CC)^{-1} 1`.
fn absorbing_means(cluster: &[LatticePoint], params: &KernelParams) -> DVector<f64> {
    let mut sizes =
        LazyClusters::from_field(SiteField::explicit(2, cluster.iter().copied()).unwrap());
    let m = cluster.len();
    let mut a = DMatrix::identity(m, m);
    for (i, x) in cluster.iter().enumerate() {
        let k = local_kernel(&mut sizes, x, params).unwrap();
        for (j, y) in cluster.iter().enumerate() {
            a[(i, j)] -= k.probability_to(y);
        }
    }
    a.lu().solve(&DVector::from_element(m, 1.0)).unwrap()
}

#[test]
fn single_cluster_sojourn_matches_absorbing_time() {
    for s in [2, 3] {
        let beta = 2.0;
        let params = KernelParams::new(beta, 2).unwrap();
        let cluster = line_cluster(s);
        let h = absorbing_means(&cluster, &params);
        let floor = geometric_floor(s as u32, 2, beta);
        assert!(h.iter().all(|&v| v >= floor), "{h} vs floor {floor}");

        let first: Vec<f64> = (0..4000u64)
            .into_par_iter()
            .map(|r| {
                let mut sizes = LazyClusters::from_field(
                    SiteField::explicit(2, cluster.iter().copied()).unwrap(),
                );
                let traj =
                    simulate_discrete(&mut sizes, &params, Some(cluster[0]), None, 10_000, 17, r)
                        .unwrap();
                let rec = &sojourn_statistics(&traj)[0];
                assert_eq!(rec.entry_step, 0);
                assert!(!rec.censored);
                rec.steps as f64
            })
            .collect();
        let m = mean(&first);
        let se = sample_sd(&first) / (first.len() as f64).sqrt();
        assert!(
            (m - h[0]).abs() <= 4.0 * se,
            "s={s}: simulated {m} ± {se}, exact {}",
            h[0]
        );
        assert!(m >= floor - 4.0 * se);
    }
}

#[test]
fn mean_sojourn_grows_with_cluster_size() {
    let params = KernelParams::new(2.0, 2).unwrap();
    let h: Vec<f64> = (1..=4)
        .map(|s| absorbing_means(&line_cluster(s), &params)[0])
        .collect();
    assert_eq!(h[0], 1.0);
    assert!(h.windows(2).all(|w| w[0] < w[1]), "{h:?}");
}

#[test]
fn doubling_replicas_keeps_the_slope() {
    let mut stable = 0;
    for seed in 0..10 {
        let small = estimate_exponent(0.3, 2, 0.5, 4096, 30, 100 + seed).unwrap();
        let large = estimate_exponent(0.3, 2, 0.5, 4096, 60, 100 + seed).unwrap();
        if (large.slope - small.slope).abs() < 2.0 * small.stderr {
            stable += 1;
        }
    }
    assert!(stable >= 9, "{stable}/10 stable");
}

#[test]
fn sweep_is_reproducible() {
    let a = beta_sweep(0.3, 2, &[0.0, 1.0], 2048, 30, 4).unwrap();
    let b = beta_sweep(0.3, 2, &[0.0, 1.0], 2048, 30, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].beta, 0.0);
    assert_eq!(a[1].beta, 1.0);
}

#[test]
fn displacement_tail_decays_in_t() {
    let short = displacement_tail(0.3, 2, 0.1, 1000, 2000, 0.1, 8).unwrap();
    let long = displacement_tail(0.3, 2, 0.1, 10_000, 2000, 0.1, 8).unwrap();
    assert!(
        long.frequency <= short.frequency,
        "{} > {}",
        long.frequency,
        short.frequency
    );
}
