use clusterwalk::cluster::{sample_labeled, ClusterMap, ClusterScope};
use clusterwalk::env::SampleOptions;
use clusterwalk::spectral::{edge_load_estimate, edge_loads};
use clusterwalk::{build_chain, exact_gap, BoxSpec, KernelParams, Restriction};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn labeled(n: usize) -> (BoxSpec, ClusterMap) {
    let box_spec = BoxSpec::new(n, 2).unwrap();
    let (_, map) = sample_labeled(
        0.3,
        box_spec,
        2,
        0,
        ClusterScope::Margin,
        &SampleOptions::default(),
    )
    .unwrap();
    (box_spec, map)
}

fn spectral(c: &mut Criterion) {
    let params = KernelParams::new(0.5, 2).unwrap();
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    for &n in &[8usize, 16, 24] {
        let (box_spec, mut map) = labeled(n);
        let chain = build_chain(&mut map, &box_spec, &params, Restriction::SelfLoop).unwrap();
        g.bench_with_input(BenchmarkId::new("exact_gap", n), &chain, |b, chain| {
            b.iter(|| exact_gap(chain).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("edge_loads", n), &chain, |b, chain| {
            b.iter(|| edge_loads(&chain.chain))
        });
        g.bench_with_input(
            BenchmarkId::new("edge_load_estimate", n),
            &chain,
            |b, chain| b.iter(|| edge_load_estimate(&chain.chain, 10_000, 1).unwrap()),
        );
    }
    g.finish();
}

criterion_group!(benches, spectral);
criterion_main!(benches);
