use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, Criterion};
use jointrom::components::{reduce_support, ReductionOptions};
use jointrom::condensation::{generate_load_cases, ScalingOptions};
use jointrom::solvers::{
    linearized_mode, newmark_transient, qsma_hysteresis, MechanicalSystem, NewmarkOptions, Pulse, QsmaOptions,
};
use jointrom_bench::{benchmark, contact_rom, thin_condensation};
use nalgebra::DVector;

fn fe(c: &mut Criterion) {
    let b = benchmark();
    let model = b.full_model(true).unwrap();
    let q = DVector::from_fn(model.n_dofs(), |i, _| 1e-3 * ((i * 7 % 13) as f64 - 6.0));
    c.bench_function("fom internal force and tangent", |bn| {
        bn.iter(|| model.internal_force_and_tangent(&q).unwrap())
    });
    c.bench_function("support reduction", |bn| {
        bn.iter(|| reduce_support(&b, &ReductionOptions::default()).unwrap())
    });
}

fn condensation(c: &mut Criterion) {
    let b = benchmark();
    let (_, cond) = thin_condensation(&b);
    let so = ScalingOptions::default();
    let scales = cond.scale_all(&so).unwrap();
    let cases = generate_load_cases(cond.n_coords(), &scales);
    let mut g = c.benchmark_group("condensation");
    g.sample_size(10);
    g.bench_function("single load case", |bn| bn.iter(|| cond.solve_case(&cases[0], &so).unwrap()));
    g.finish();
}

fn rom(c: &mut Criterion) {
    let b = benchmark();
    let sys = contact_rom(&b);
    let n = sys.dim();
    let q = DVector::from_fn(n, |i, _| 1e-6 * ((i * 5 % 11) as f64 - 5.0));
    let state = sys.fresh_state();
    c.bench_function("rom internal force and tangent", |bn| {
        bn.iter(|| sys.internal(&q, state.as_ref()).unwrap())
    });

    let mode = linearized_mode(&sys, 0, None).unwrap();
    let level = mode.omega.powi(2) * 0.05 * 1.5 / sys.probe().dot(&mode.shape);
    let opts = QsmaOptions { max_cycles: 3, ..QsmaOptions::default() };
    let mut g = c.benchmark_group("rom studies");
    g.sample_size(10);
    g.bench_function("qsma level, 3 cycles", |bn| {
        bn.iter(|| qsma_hysteresis(&sys, &mode, &[level], &opts).unwrap())
    });
    let period = 2.0 * PI / mode.omega;
    let pulse = Pulse { pattern: sys.mass().mul_vec(&mode.shape), amplitude: 1.0, duration: 0.1 * period };
    let no = NewmarkOptions { dt: period / 1000.0, t_end: period, newton: Default::default() };
    g.bench_function("newmark, one period", |bn| bn.iter(|| newmark_transient(&sys, &pulse, &no).unwrap()));
    g.finish();
}

criterion_group!(benches, fe, condensation, rom);
criterion_main!(benches);
