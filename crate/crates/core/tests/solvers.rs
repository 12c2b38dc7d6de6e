use std::f64::consts::PI;

use jointrom::assembly::assemble_system;
use jointrom::components::{reduce_support, reduce_thin, ReductionOptions};
use jointrom::contact::{contact_nodal_forces, ContactParams, ContactPatch, ContactState};
use jointrom::fe::{Benchmark, BenchmarkParams, Material};
use jointrom::linalg::SysMatrix;
use jointrom::solvers::{
    fom_inertia_pattern, linearized_mode, newmark_transient, qsma_hysteresis, qsma_initial_loading,
    rom_inertia_pattern, FomSystem, GeometricScope, MechanicalSystem, NewmarkOptions, Pulse, QsmaOptions,
    RomSystem, SolverOptions,
};
use jointrom::Result;
use nalgebra::{DMatrix, DVector, Vector3};

/// Point mass on springs `[k_x, k_y, k_z]`; an optional one-node contact patch acts on `q`.
struct Oscillator {
    mass: SysMatrix,
    k: DMatrix<f64>,
    contact: Option<ContactPatch>,
    probe: DVector<f64>,
}

impl Oscillator {
    fn new(m: f64, k: [f64; 3], contact: Option<ContactParams>) -> Self {
        Self {
            mass: SysMatrix::Dense(DMatrix::identity(3, 3) * m),
            k: DMatrix::from_diagonal(&DVector::from_row_slice(&k)),
            contact: contact.map(|c| ContactPatch::new(&c, &[[0.0, 0.0]], &[1.0]).unwrap()),
            probe: DVector::from_row_slice(&[1.0, 0.0, 0.0]),
        }
    }
}

impl MechanicalSystem for Oscillator {
    fn dim(&self) -> usize {
        3
    }
    fn mass(&self) -> &SysMatrix {
        &self.mass
    }
    fn contact(&self) -> Option<&ContactPatch> {
        self.contact.as_ref()
    }
    fn gaps(&self, q: &DVector<f64>) -> DVector<f64> {
        q.clone()
    }
    fn internal(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<(DVector<f64>, SysMatrix)> {
        let mut f = &self.k * q;
        let mut kt = self.k.clone();
        if let (Some(p), Some(s)) = (&self.contact, state) {
            let c = contact_nodal_forces(p, s, q)?;
            f += c.force;
            kt += c.tangent[0];
        }
        Ok((f, SysMatrix::Dense(kt)))
    }
    fn elastic_energy(&self, q: &DVector<f64>) -> Result<f64> {
        Ok(0.5 * q.dot(&(&self.k * q)))
    }
    fn probe(&self) -> &DVector<f64> {
        &self.probe
    }
}

fn jenkins() -> Oscillator {
    Oscillator::new(1e-3, [1000.0, 1e6, 1e6], Some(ContactParams::default()))
}

#[test]
fn linear_oscillator_qsma_recovers_natural_frequency_without_damping() {
    let sys = Oscillator::new(1e-3, [1.0, 50.0, 80.0], None);
    let mode = linearized_mode(&sys, 0, None).unwrap();
    assert!((mode.omega - 1000f64.sqrt()).abs() < 1e-9 * mode.omega);
    let levels = qsma_hysteresis(&sys, &mode, &[1e-3, 1.0, 1e3], &QsmaOptions::default()).unwrap();
    for l in &levels {
        assert!((l.omega - mode.omega).abs() < 1e-8 * mode.omega, "{}", l.omega);
        assert!(l.damping.abs() < 1e-10, "{}", l.damping);
        assert!(l.converged);
        assert_eq!(l.cycles, 2);
    }
    // modal amplitude is linear in the force level
    assert!((levels[2].eta / levels[0].eta - 1e6).abs() < 1e-3);
}

#[test]
fn jenkins_loop_dissipation_matches_closed_form() {
    let sys = jenkins();
    let p = sys.contact.as_ref().unwrap();
    let f_slip = p.mu * p.p_n0[0] * p.weights[0];
    let x_stick = f_slip / (p.k_t[0] * p.weights[0]);
    let mode = linearized_mode(&sys, 0, None).unwrap();
    assert!(mode.shape[0].abs() > 0.99 * mode.shape.norm());
    // physical force amplitude α m φ_x
    let levels: Vec<f64> = [0.5, 2.0, 8.0, 40.0].iter().map(|s| s * f_slip / (1e-3 * mode.shape[0])).collect();
    let res = qsma_hysteresis(&sys, &mode, &levels, &QsmaOptions::default()).unwrap();
    let mut last_omega = f64::INFINITY;
    for l in &res {
        let x = l.probe_amplitude;
        let exact = 4.0 * f_slip * (x - x_stick).max(0.0);
        assert!(l.converged, "level {} did not settle", l.alpha);
        if exact == 0.0 {
            assert!(l.dissipation.abs() < 1e-12 * l.alpha * l.eta);
        } else {
            assert!((l.dissipation - exact).abs() < 0.01 * exact, "{} vs {}", l.dissipation, exact);
            assert!((l.friction_work - l.dissipation).abs() < 0.01 * exact);
        }
        // softening with amplitude
        assert!(l.omega <= last_omega * (1.0 + 1e-12));
        last_omega = l.omega;
    }
}

#[test]
fn masing_initial_loading_agrees_with_cycled_loops() {
    let sys = jenkins();
    let mode = linearized_mode(&sys, 0, None).unwrap();
    let f_slip = 0.3 * 1.2;
    let levels = [3.0 * f_slip / (1e-3 * mode.shape[0]), 20.0 * f_slip / (1e-3 * mode.shape[0])];
    let opts = QsmaOptions::default();
    let cyc = qsma_hysteresis(&sys, &mode, &levels, &opts).unwrap();
    let ini = qsma_initial_loading(&sys, &mode, &levels, &opts).unwrap();
    for (c, i) in cyc.iter().zip(&ini) {
        assert!((c.eta - i.eta).abs() < 1e-3 * c.eta);
        assert!((c.omega - i.omega).abs() < 1e-3 * c.omega);
        assert!((c.dissipation - i.dissipation).abs() < 0.02 * c.dissipation, "{} {}", c.dissipation, i.dissipation);
    }
}

#[test]
fn masing_dissipation_vanishes_for_elastic_systems() {
    let sys = Oscillator::new(1e-3, [1.0, 50.0, 80.0], None);
    let mode = linearized_mode(&sys, 0, None).unwrap();
    let res = qsma_initial_loading(&sys, &mode, &[1.0], &QsmaOptions::default()).unwrap();
    assert!(res[0].dissipation < 1e-12);
    assert!((res[0].omega - mode.omega).abs() < 1e-9 * mode.omega);
}

fn unit_pulse(sys: &impl MechanicalSystem, amplitude: f64, duration: f64) -> Pulse {
    let b = DVector::from_fn(sys.dim(), |i, _| if i == 0 { 1.0 } else { 0.0 });
    Pulse {
        pattern: sys.mass().mul_vec(&b),
        amplitude,
        duration,
    }
}

#[test]
fn newmark_conserves_energy_of_a_linear_oscillator() {
    let sys = Oscillator::new(1e-3, [1.0, 50.0, 80.0], None);
    let period = 2.0 * PI / 1000f64.sqrt();
    let pulse = unit_pulse(&sys, 100.0, 0.25 * period);
    let res = newmark_transient(
        &sys,
        &pulse,
        &NewmarkOptions {
            dt: period / 50.0,
            t_end: 100.0 * period,
            newton: SolverOptions::default(),
        },
    )
    .unwrap();
    assert_eq!(res.time.len(), 5001);
    assert!(res.energy_error() < 1e-6, "{}", res.energy_error());
    // free vibration after the pulse keeps its energy
    let after: Vec<f64> = res
        .energy
        .iter()
        .filter(|e| e.time > pulse.duration)
        .map(|e| e.kinetic + e.potential)
        .collect();
    let (lo, hi) = after.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
    assert!((hi - lo) < 1e-9 * hi);
    assert_eq!(res.extra_steps, 0);
}

#[test]
fn newmark_matches_the_exact_pulse_response() {
    // undamped SDOF under −A m sin(Ωt): closed form during the pulse
    let (m, k) = (1e-3, 1.0);
    let sys = Oscillator::new(m, [k, 50.0, 80.0], None);
    let w = (k / m).sqrt();
    let duration = 3.0 * 2.0 * PI / w;
    let big_w = 2.0 * PI / duration;
    let a = 10.0;
    let pulse = unit_pulse(&sys, a, duration);
    let dt = duration / 2000.0;
    let res = newmark_transient(
        &sys,
        &pulse,
        &NewmarkOptions {
            dt,
            t_end: duration,
            newton: SolverOptions::default(),
        },
    )
    .unwrap();
    let amp = -a * m / (k - m * big_w * big_w);
    let exact = |t: f64| amp * ((big_w * t).sin() - big_w / w * (w * t).sin());
    let peak = res.probe.iter().fold(0.0f64, |p, x| p.max(x.abs()));
    for (t, x) in res.time.iter().zip(&res.probe) {
        assert!((x - exact(*t)).abs() < 1e-3 * peak, "t = {t}: {x} vs {}", exact(*t));
    }
}

#[test]
fn zero_pulse_gives_zero_response() {
    let sys = jenkins();
    let pulse = unit_pulse(&sys, 0.0, 0.01);
    let res = newmark_transient(
        &sys,
        &pulse,
        &NewmarkOptions {
            dt: 1e-4,
            t_end: 0.02,
            newton: SolverOptions::default(),
        },
    )
    .unwrap();
    assert!(res.probe.iter().all(|&x| x == 0.0));
    assert!(res.energy.iter().all(|e| e.balance() == 0.0));
}

#[test]
fn frictional_transient_is_passive() {
    let sys = jenkins();
    let period = 2.0 * PI / linearized_mode(&sys, 0, None).unwrap().omega;
    let pulse = unit_pulse(&sys, 5e3, 0.5 * period);
    let res = newmark_transient(
        &sys,
        &pulse,
        &NewmarkOptions {
            dt: period / 1000.0,
            t_end: 20.0 * period,
            newton: SolverOptions::default(),
        },
    )
    .unwrap();
    let last = res.energy.last().unwrap();
    assert!(last.friction_work > 0.0);
    for w in res.energy.windows(2) {
        assert!(w[1].friction_work >= w[0].friction_work);
    }
    let mech: Vec<f64> = res
        .energy
        .iter()
        .filter(|e| e.time > pulse.duration)
        .map(|e| e.kinetic + e.potential)
        .collect();
    // no energy is created once the pulse is over
    for w in mech.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-12, "{} -> {}", w[0], w[1]);
    }
    // the mechanical energy lost equals the frictional work
    assert!(res.energy_error() < 1e-4, "{}", res.energy_error());
}

fn bench() -> Benchmark {
    Benchmark::build(BenchmarkParams::default(), Material::steel()).unwrap()
}

#[test]
fn fom_contact_tangent_matches_finite_differences() {
    let b = bench();
    let sys = FomSystem::new(&b, Some(&ContactParams::default()), GeometricScope::ThinOnly).unwrap();
    let n = sys.dim();
    let pattern = DVector::from_fn(n, |i, _| ((i * 37 % 11) as f64 - 5.0) / 5.0);
    let d = DVector::from_fn(n, |i, _| ((i * 13 % 7) as f64 - 3.0) / 3.0);
    // small increments stick everywhere; large ones slip on most of the patch
    for (size, committed) in [(1e-5, 0.5), (1e-3, 0.0)] {
        let q = &pattern * size;
        let mut state = sys.fresh_state().unwrap();
        state.commit(sys.contact().unwrap(), &sys.gaps(&(&q * committed)));
        let (_, k) = sys.internal(&q, Some(&state)).unwrap();
        let h = 1e-9 * size / 1e-5;
        let fp = sys.internal(&(&q + &d * h), Some(&state)).unwrap().0;
        let fm = sys.internal(&(&q - &d * h), Some(&state)).unwrap().0;
        let fd = (fp - fm) / (2.0 * h);
        let kd = k.mul_vec(&d);
        let err = (&fd - &kd).norm() / kd.norm();
        assert!(err < 1e-5, "size {size}: {err}");
    }
}

#[test]
fn sticking_contact_softens_the_tied_model() {
    let b = bench();
    let tied = FomSystem::new(&b, None, GeometricScope::Linear).unwrap();
    let stick = FomSystem::new(&b, Some(&ContactParams::default()), GeometricScope::Linear).unwrap();
    assert_eq!(stick.dim(), tied.dim() + 3 * b.contact.pairs.len());
    let wt = linearized_mode(&tied, 0, None).unwrap().omega;
    let ws = linearized_mode(&stick, 0, None).unwrap().omega;
    assert!(ws < wt && ws > 0.5 * wt, "{ws} vs {wt}");
}

#[test]
fn tied_rom_qsma_matches_the_full_model() {
    let b = bench();
    let opts = ReductionOptions {
        interface_modes: 5,
        support_modes: 5,
        thin_modes: 5,
        ..ReductionOptions::default()
    };
    let support = reduce_support(&b, &opts).unwrap();
    let thin = reduce_thin(&b, &opts).unwrap();
    let rom = assemble_system(&support.reduced, &thin.reduced, None, None).unwrap();
    let rom = RomSystem::with_benchmark_probe(rom, &b, &thin).unwrap();
    let fom = FomSystem::new(&b, None, GeometricScope::Linear).unwrap();

    let mirror = jointrom::cms::DofMirror::build(&fom.model).unwrap();
    let sym = |v: &DVector<f64>| mirror.is_symmetric(v);
    let mf = linearized_mode(&fom, 0, Some(&sym)).unwrap();
    let mr = linearized_mode(&rom, 0, None).unwrap();
    let qs = QsmaOptions {
        steps_per_cycle: 40,
        ..QsmaOptions::default()
    };
    let lf = &qsma_hysteresis(&fom, &mf, &[1.0], &qs).unwrap()[0];
    let lr = &qsma_hysteresis(&rom, &mr, &[1.0], &qs).unwrap()[0];
    assert!((lf.omega - lr.omega).abs() < 0.01 * lf.omega);
    assert!((lf.probe_amplitude - lr.probe_amplitude).abs() < 0.02 * lf.probe_amplitude);

    // the same base acceleration on both models gives the same quasi-static probe deflection
    let z = Vector3::new(0.0, 0.0, 1.0);
    let pf = fom_inertia_pattern(&fom.model, z);
    let pr = rom_inertia_pattern(&rom.rom, &support, &thin, z);
    let uf = fom.probe().dot(&fom.model.stiffness().lu().unwrap().solve(&pf));
    let ur = rom.probe().dot(&rom.rom.stiffness.clone().lu().solve(&pr).unwrap());
    assert!((uf - ur).abs() < 0.02 * uf.abs(), "{uf} vs {ur}");
}

