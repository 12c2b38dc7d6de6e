//! Fixtures shared by the benchmarks.

use jointrom::assembly::assemble_system;
use jointrom::components::{reduce_support, reduce_thin, support_contact, ReductionOptions, ThinComponent};
use jointrom::condensation::{generate_load_cases, regress_coefficients, run_campaign, ScalingOptions, ThinCondensation};
use jointrom::contact::ContactParams;
use jointrom::fe::{Benchmark, BenchmarkParams, Material};
use jointrom::solvers::RomSystem;

/// Default clamped-panel benchmark in steel.
pub fn benchmark() -> Benchmark {
    Benchmark::build(BenchmarkParams::default(), Material::steel()).expect("default benchmark")
}

/// Default thin-walled component and its condensation problem.
pub fn thin_condensation(b: &Benchmark) -> (ThinComponent, ThinCondensation) {
    let thin = reduce_thin(b, &ReductionOptions::default()).expect("thin reduction");
    let cond = ThinCondensation::new(&thin.model, b.thin_gauged_model().expect("gauge"), &thin.reduced)
        .expect("condensation");
    (thin, cond)
}

/// Frictional, geometrically nonlinear system ROM with default settings.
pub fn contact_rom(b: &Benchmark) -> RomSystem {
    let opts = ReductionOptions::default();
    let support = reduce_support(b, &opts).expect("support reduction");
    let (thin, cond) = thin_condensation(b);
    let so = ScalingOptions::default();
    let cases = generate_load_cases(cond.n_coords(), &cond.scale_all(&so).expect("scales"));
    let results = run_campaign(&cond, &cases, &so, 1, None).expect("campaign");
    let geom = regress_coefficients(&results, &cond.k_red, &cond.active).expect("regression");
    let patch = support_contact(b, &ContactParams::default()).expect("contact patch");
    let rom = assemble_system(&support.reduced, &thin.reduced, Some(geom), Some(patch)).expect("assembly");
    RomSystem::with_benchmark_probe(rom, b, &thin).expect("probe")
}
