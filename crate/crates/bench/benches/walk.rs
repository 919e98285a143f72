use std::hint::black_box;

use clusterwalk::cluster::{sample_labeled, ClusterScope, LazyClusters};
use clusterwalk::env::{SampleOptions, SiteField};
use clusterwalk::{simulate_discrete, BoxSpec, KernelParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const STEPS: usize = 10_000;

fn walk_steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("walk_steps");
    g.throughput(Throughput::Elements(STEPS as u64));
    for &beta in &[0.0, 1.0, 5.0] {
        let params = KernelParams::new(beta, 2).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(beta), &params, |b, params| {
            let mut replica = 0;
            b.iter(|| {
                replica += 1;
                let field = SiteField::bernoulli(2, 0.3, 1, replica).unwrap();
                let mut sizes = LazyClusters::from_field(field);
                black_box(
                    simulate_discrete(&mut sizes, params, None, None, STEPS, 1, replica).unwrap(),
                )
            })
        });
    }
    g.finish();
}

fn labeling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_and_label");
    for &n in &[64usize, 256] {
        let box_spec = BoxSpec::new(n, 2).unwrap();
        g.throughput(Throughput::Elements((n * n) as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &box_spec, |b, box_spec| {
            b.iter(|| {
                sample_labeled(
                    0.4,
                    *box_spec,
                    3,
                    0,
                    ClusterScope::Margin,
                    &SampleOptions::default(),
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, walk_steps, labeling);
criterion_main!(benches);
