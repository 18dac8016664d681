//! Parallel vs sequential throughput on the data-parallel inner loops:
//! full-sum oracle evaluation over many components and the dense grid
//! scan behind the composite ground-truth oracle. The parallel paths use
//! fixed chunking, so both sides compute bitwise identical results; this
//! suite measures what that determinism costs or buys.
//!
//! Run with `cargo bench -p bregopt`. Building with
//! `--no-default-features` turns `eval_full` into the sequential path,
//! which is visible here as the two curves collapsing.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bregopt::blocked::BlockedVector;
use bregopt::problems;

fn bench_eval_full(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_sum_eval_full");
    for &m in &[1_000usize, 10_000, 100_000] {
        let (obj, _) = problems::make_l1_regression(m, 8, 42, false).unwrap();
        let x = BlockedVector::dense(vec![0.25; 8]);
        group.bench_with_input(BenchmarkId::new("dispatch", m), &m, |b, _| {
            b.iter(|| black_box(obj.eval_full(black_box(&x)).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &m, |b, _| {
            b.iter(|| black_box(obj.eval_full_seq(black_box(&x)).unwrap()))
        });
    }
    group.finish();
}

fn bench_grid_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("lasso_grid_oracle");
    group.sample_size(10);
    let (rows, b) = problems::regenerate_lasso_data(20, 2, 3);
    group.bench_function("two_stage_grid", |bch| {
        bch.iter(|| black_box(problems::lasso_grid_optimum(&rows, &b, 0.1).unwrap()))
    });
    group.finish();
}

fn bench_sbg_hot_loop(c: &mut Criterion) {
    use bregopt::kernel::BlockPolynomialKernel;
    use bregopt::optim::{sbg_step, OptimizerState};
    use bregopt::oracle::{Sampler, SamplerMode};

    let mut group = c.benchmark_group("sbg_step");
    let (obj, _) = problems::make_l1_regression(256, 8, 7, false).unwrap();
    let kernel = BlockPolynomialKernel::new(0.01, 4).unwrap();
    group.bench_function("block_poly_r4", |bch| {
        bch.iter(|| {
            let mut state =
                OptimizerState::new(&kernel, BlockedVector::dense(vec![0.5; 8]), 1.0, 1e-3)
                    .unwrap();
            let mut sampler = Sampler::new(SamplerMode::Reshuffle, 256, 11).unwrap();
            for _ in 0..256 {
                sbg_step(&mut state, &kernel, &obj, &mut sampler, 0.05, 1e-3).unwrap();
            }
            black_box(state.x)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_eval_full, bench_grid_oracle, bench_sbg_hot_loop);
criterion_main!(benches);
