use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use handcloud::NearestNeighborIndex;
use handcloud_bench::random_points;

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("kdtree_build");
    for n in [1_000, 10_000, 100_000] {
        let points = random_points(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| NearestNeighborIndex::build(&points).unwrap())
        });
    }
    group.finish();
}

fn query(c: &mut Criterion) {
    let points = random_points(100_000, 3);
    let queries = random_points(1_000, 4);
    let index = NearestNeighborIndex::build(&points).unwrap();
    c.bench_function("kdtree_nearest_1000_of_100000", |bench| {
        bench.iter(|| queries.iter().map(|q| index.nearest(q).distance).sum::<f64>())
    });
    c.bench_function("kdtree_knn8_1000_of_100000", |bench| {
        bench.iter(|| queries.iter().map(|q| index.k_nearest(q, 8).len()).sum::<usize>())
    });
}

criterion_group!(benches, build, query);
criterion_main!(benches);
