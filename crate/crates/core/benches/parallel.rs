//! Parallel vs sequential throughput on the data-parallel hot paths:
//! Monte Carlo estimation and risk-table grid evaluation.
//!
//! `ccte_empirical` runs chunked on rayon (default `parallel` feature),
//! `ccte_empirical_seq` is the always-sequential reference; both produce
//! bit-identical estimates, so the comparison is pure scheduling overhead
//! versus speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ccte::copula::CopulaModel;
use ccte::margins::Margin;
use ccte::risk::{self, RiskQuery};
use ccte::{exec, montecarlo};

fn bench_monte_carlo(c: &mut Criterion) {
    let margin = Margin::pareto(1.5).unwrap();
    let q = RiskQuery::new(0.9, 0.9).unwrap();

    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);

    // closed-form conditional inverse: cheap per sample
    let clayton = CopulaModel::clayton(2.0).unwrap();
    let n = 1_000_000;
    group.bench_with_input(BenchmarkId::new("clayton_parallel", n), &n, |b, &n| {
        b.iter(|| montecarlo::ccte_empirical(&clayton, &margin, &q, n, 42).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("clayton_sequential", n), &n, |b, &n| {
        b.iter(|| montecarlo::ccte_empirical_seq(&clayton, &margin, &q, n, 42).unwrap())
    });

    // bisection-based conditional inverse: compute-bound per sample
    let gumbel = CopulaModel::gumbel(2.0).unwrap();
    let n = 100_000;
    group.bench_with_input(BenchmarkId::new("gumbel_parallel", n), &n, |b, &n| {
        b.iter(|| montecarlo::ccte_empirical(&gumbel, &margin, &q, n, 42).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("gumbel_sequential", n), &n, |b, &n| {
        b.iter(|| montecarlo::ccte_empirical_seq(&gumbel, &margin, &q, n, 42).unwrap())
    });

    group.finish();
}

fn bench_table_grid(c: &mut Criterion) {
    let margin = Margin::pareto(1.5).unwrap();
    let copula = CopulaModel::gumbel(2.0).unwrap();
    let grid = [0.9000, 0.9225, 0.9450, 0.9675, 0.9900];
    let cells: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&s| grid.iter().map(move |&t| (s, t)))
        .collect();
    let eval = |(s, t): (f64, f64)| {
        let q = RiskQuery::new(s, t).unwrap();
        risk::ccte(&copula, &margin, &q).unwrap().value
    };

    let mut group = c.benchmark_group("table_grid_5x5");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| exec::map_indexed(cells.len(), |i| eval(cells[i])))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::map_indexed_seq(cells.len(), |i| eval(cells[i])))
    });
    group.finish();
}

criterion_group!(benches, bench_monte_carlo, bench_table_grid);
criterion_main!(benches);
