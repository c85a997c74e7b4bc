//! Throughput of the hot kernels: eigenstructure, shock polar, background
//! shooting, Riemann solves and one scheme step.

use std::hint::black_box;

use conical_glimm::gas::eigen;
use conical_glimm::riemann::{solve_strong_riemann, solve_weak_riemann};
use conical_glimm::scheme::{BoundarySpec, Scheme, SchemeConfig};
use conical_glimm::selfsim::shoot_background;
use conical_glimm::shock_polar::{solve_attached_shock, theta_of_s};
use conical_glimm::{FlowState, GasParams};
use criterion::{criterion_group, criterion_main, Criterion};

fn params() -> GasParams {
    GasParams::new(1.0, 10.0).unwrap()
}

fn gas(c: &mut Criterion) {
    let p = params();
    let s = FlowState::new(8.0, -4.0);
    c.bench_function("eigen", |b| b.iter(|| eigen(black_box(&p), black_box(s)).unwrap()));
}

fn polar(c: &mut Criterion) {
    let p = params();
    c.bench_function("theta_of_s", |b| b.iter(|| theta_of_s(black_box(-0.7), &p).unwrap()));
    c.bench_function("solve_attached_shock", |b| b.iter(|| solve_attached_shock(black_box(-0.5), &p).unwrap()));
}

fn background(c: &mut Criterion) {
    let p = params();
    c.bench_function("shoot_background", |b| b.iter(|| shoot_background(black_box(-0.5), &p).unwrap()));
}

fn riemann(c: &mut Criterion) {
    let p = params();
    let below = FlowState::new(8.0, -4.0);
    let above = FlowState::new(8.01, -3.99);
    c.bench_function("solve_weak_riemann", |b| {
        b.iter(|| solve_weak_riemann(black_box(below), black_box(above), &p).unwrap())
    });
    let post = theta_of_s(-0.52, &p).unwrap().state;
    c.bench_function("solve_strong_riemann", |b| {
        b.iter(|| solve_strong_riemann(black_box(post), black_box(-0.52), &p).unwrap())
    });
}

fn scheme_step(c: &mut Criterion) {
    let cfg = SchemeConfig { n_steps: 100, ..SchemeConfig::default() };
    let scheme = Scheme::new(params(), -0.5, &BoundarySpec::Straight, cfg).unwrap();
    let mut st = scheme.initial_state().unwrap();
    for _ in 0..50 {
        st = scheme.advance(&st).unwrap().0;
    }
    c.bench_function("scheme_advance", |b| b.iter(|| scheme.advance(black_box(&st)).unwrap()));
}

criterion_group!(benches, gas, polar, background, riemann, scheme_step);
criterion_main!(benches);
