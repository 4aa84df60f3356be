//! One worker against all available workers for the data-parallel kernels.
//! Build with `--no-default-features` to time the purely sequential code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;

use ivord::ensemble::{forest_fit, ForestParams};
use ivord::experiment::{gen_synthetic, run_mc, DataSource, McConfig, SyntheticDesign};
use ivord::methods::Method;
use ivord::metrics::{pairwise, PairwiseKind};
use ivord::numeric::RngStream;
use ivord::par::with_threads;

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        // still exercises the pool machinery on a single core
        vec![1, 2]
    }
}

fn bench(c: &mut Criterion) {
    let data = gen_synthetic(&SyntheticDesign::three_class(), RngStream::new(1)).unwrap();
    let x = DMatrix::from_fn(data.len(), 4, |i, j| {
        let v = data.observations()[i].as_vector().unwrap();
        let iv = &v[j / 2];
        if j % 2 == 0 {
            iv.lower()
        } else {
            iv.upper()
        }
    });
    let y: Vec<f64> = data.labels().iter().map(|&l| l as f64).collect();
    let mc = McConfig {
        seed: 3,
        reps: 4,
        methods: vec![Method::DiWknn, Method::LdaId, Method::Of],
        ..McConfig::default()
    };
    let source = DataSource::Synthetic(SyntheticDesign::three_class());

    let mut group = c.benchmark_group("threads");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::new("kernel_matrix_300", threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || pairwise(data.observations(), PairwiseKind::Kernel { gamma: 1.0 }).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("forest_200_trees", threads), &threads, |b, &t| {
            let params = ForestParams {
                n_trees: 200,
                ..ForestParams::default()
            };
            b.iter(|| with_threads(t, || forest_fit(&x, &y, params, RngStream::new(5)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("monte_carlo_4_reps", threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || run_mc(&source, &mc).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
