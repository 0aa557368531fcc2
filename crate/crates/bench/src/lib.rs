//! Benchmarks of the numerical kernels; driven by `benches/kernels.rs`.

use std::f64::consts::FRAC_PI_2;
use std::hint::black_box;

use criterion::Criterion;
use dhym_core::lab::envelope_estimate;
use dhym_core::phase::{operator_gradient, sigma_product, window_membership};
use dhym_core::solver::{continuity_path, manufactured_density, newton_solve};
use dhym_core::suites::{run_suite, Suite};
use dhym_core::torus::{complex_hessian, relative_spectrum};
use dhym_core::{Backgrounds, PhaseWindow, PotentialField, SolveConfig, Spectrum, TorusGrid};

fn pointwise(c: &mut Criterion) {
    let l = Spectrum::new(vec![2.5, 1.25, 0.75, 0.4]).unwrap();
    let w = PhaseWindow::with_default_upper(FRAC_PI_2).unwrap();
    c.bench_function("sigma_product/n4", |b| b.iter(|| sigma_product(black_box(&l))));
    c.bench_function("operator_gradient/n4", |b| {
        b.iter(|| operator_gradient(black_box(&l), 0.5))
    });
    c.bench_function("window_membership/n4", |b| {
        b.iter(|| window_membership(black_box(&l), &w))
    });
}

fn fields(c: &mut Criterion) {
    let g = TorusGrid::reduced(3, &[0, 2], 32).unwrap();
    let b = Backgrounds::scaled_identities(&g, 1.0, 1.0);
    let phi = PotentialField::from_fn(&g, |x| 0.05 * x[0].cos() * x[2].sin()).unwrap();
    c.bench_function("complex_hessian/n3_32x32", |bch| {
        bch.iter(|| complex_hessian(black_box(&phi)))
    });
    let x = b.path_form(0.5).add(&complex_hessian(&phi)).unwrap();
    c.bench_function("relative_spectrum/n3_32x32", |bch| {
        bch.iter(|| relative_spectrum(black_box(&x), &b.omega).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let g = TorusGrid::reduced(3, &[0], 16).unwrap();
    let b = Backgrounds::scaled_identities(&g, 1.0, 1.0);
    let w = PhaseWindow::with_default_upper(FRAC_PI_2).unwrap();
    let cfg = SolveConfig::default();
    let star = PotentialField::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
    let (f, _) = manufactured_density(&b, 0.5, FRAC_PI_2, &star).unwrap();
    let zero = PotentialField::zeros(&g);
    c.bench_function("newton_solve/manufactured_n3_16", |bch| {
        bch.iter(|| newton_solve(&b, &zero, 0.5, black_box(&f), w, &cfg).unwrap())
    });
    c.bench_function("continuity_path/manufactured_5_steps", |bch| {
        bch.iter(|| continuity_path(&b, &[1.0, 0.5, 0.25, 0.1, 0.05], black_box(&f), w, &cfg).unwrap())
    });
    let chi_tilde = b.chi_tilde.add(&complex_hessian(&star)).unwrap();
    c.bench_function("envelope_estimate/4_betas", |bch| {
        bch.iter(|| envelope_estimate(black_box(&chi_tilde), &b.omega, 0.5, &[10.0, 20.0, 40.0, 80.0], &cfg).unwrap())
    });
}

fn suites(c: &mut Criterion) {
    let mut group = c.benchmark_group("suites");
    group.sample_size(10);
    for suite in [Suite::Algebra, Suite::Chen] {
        group.bench_function(suite.name(), |b| {
            b.iter(|| run_suite(suite, 1000, black_box(7)).unwrap())
        });
    }
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    pointwise(c);
    fields(c);
    solvers(c);
    suites(c);
}
