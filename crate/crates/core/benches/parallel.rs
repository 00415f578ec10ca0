//! Rayon pools of one and of all threads against each other, or the sequential
//! build when compiled with `--no-default-features`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use homlab::corrector::CorrectorSet;
use homlab::elliptic::{DivFormOperator, SolveOptions};
use homlab::ensemble::FieldModel;
use homlab::lattice::Grid;
use homlab::randomfield::SeedSpec;

fn field(dim: usize, n: usize) -> homlab::lattice::CoefficientField {
    let model = FieldModel::Gaussian { gamma: 2.5, lambda: 0.25, skew: 0.0 };
    model.sample(Grid::new(dim, n).unwrap(), SeedSpec::new(11, 0)).unwrap()
}

fn modes() -> Vec<(String, Option<usize>)> {
    if cfg!(feature = "parallel") {
        let all = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let mut m = vec![("threads_1".to_string(), Some(1))];
        if all > 1 {
            m.push((format!("threads_{all}"), Some(all)));
        }
        m
    } else {
        vec![("sequential".into(), None)]
    }
}

fn run<R>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f),
        None => f(),
    }
}

fn bench_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("divform_apply");
    for (dim, n) in [(2, 256), (3, 48)] {
        let a = field(dim, n);
        let op = DivFormOperator::new(&a, 0.0);
        let u: Vec<f64> = (0..a.grid().len()).map(|i| (i as f64 * 0.37).sin()).collect();
        for (label, threads) in modes() {
            group.bench_with_input(BenchmarkId::new(&label, format!("d{dim}_n{n}")), &u, |b, u| {
                let mut out = vec![0.0; u.len()];
                let mut ws = op.workspace();
                run(threads, || b.iter(|| op.apply(black_box(u), &mut out, &mut ws)));
            });
        }
    }
    group.finish();
}

fn bench_corrector(c: &mut Criterion) {
    let mut group = c.benchmark_group("corrector");
    group.sample_size(10);
    let a = field(2, 128);
    let opts = SolveOptions::default();
    for (label, threads) in modes() {
        group.bench_function(BenchmarkId::new(&label, "d2_n128"), |b| {
            run(threads, || b.iter(|| CorrectorSet::compute(black_box(&a), &opts).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_apply, bench_corrector);
criterion_main!(benches);
