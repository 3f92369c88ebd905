use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sbmrd::{
    blahut_arimoto, joint_graph_rdf_oracle, monte_carlo_distortion, rdf_curve, solve_sbm_waterfill,
    BaOptions, DiscreteRdProblem, Grid, Model, RngSpec, SbmParams,
};

fn reference() -> SbmParams {
    SbmParams::new(
        100,
        vec![0.4, 0.3, 0.3],
        vec![
            vec![0.5, 0.2, 0.1],
            vec![0.2, 0.5, 0.1],
            vec![0.1, 0.1, 0.4],
        ],
    )
    .unwrap()
}

/// `k` communities with a uniform prior and a graded connection matrix.
fn graded(k: usize) -> SbmParams {
    let w = (0..k)
        .map(|l| {
            (0..k)
                .map(|m| 0.05 + 0.9 * ((l * k + m).min(m * k + l) as f64) / (k * k) as f64)
                .collect()
        })
        .collect();
    SbmParams::new(1000, vec![1.0 / k as f64; k], w).unwrap()
}

fn waterfill(c: &mut Criterion) {
    let mut group = c.benchmark_group("waterfill");
    for k in [3, 16, 64] {
        let params = if k == 3 { reference() } else { graded(k) };
        let d = 0.4 * sbmrd::sbm_distortion_boundary(&params);
        group.bench_with_input(BenchmarkId::from_parameter(k), &params, |b, p| {
            b.iter(|| solve_sbm_waterfill(p, black_box(d)).unwrap())
        });
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let model = Model::Sbm(reference());
    c.bench_function("rdf_curve/200", |b| {
        b.iter(|| rdf_curve(&model, black_box(&Grid::Points(200))).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let binary = DiscreteRdProblem::bernoulli_product(&[0.3]).unwrap();
    c.bench_function("blahut_arimoto/binary", |b| {
        b.iter(|| blahut_arimoto(&binary, black_box(2.0), BaOptions::default()).unwrap())
    });
    c.bench_function("joint_oracle/3_edges", |b| {
        b.iter(|| joint_graph_rdf_oracle(&[0.1, 0.2, 0.3], black_box(0.2), 1e-10).unwrap())
    });
}

fn simulate(c: &mut Criterion) {
    let params = reference();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("100_trials", |b| {
        b.iter(|| monte_carlo_distortion(&params, black_box(495.0), 100, RngSpec::new(1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, waterfill, curve, oracle, simulate);
criterion_main!(benches);
