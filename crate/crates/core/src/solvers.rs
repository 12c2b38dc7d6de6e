//! Quasi-static modal analysis and implicit transient integration on any mechanical system.
//!
//! Both the full-order model and the assembled ROM implement [`MechanicalSystem`]; every solver
//! here is written once against that trait.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::SystemRom;
use crate::cms::DofMirror;
use crate::components::{SupportComponent, ThinComponent};
use crate::contact::{contact_energy, contact_nodal_forces, ContactParams, ContactPatch, ContactState};
use crate::error::{Error, Result};
use crate::fe::{Benchmark, FullOrderModel};
use crate::linalg::{solve_eigen, SysMatrix};

/// Second-order system `M q̈ + f_int(q, history) = f_ext`.
pub trait MechanicalSystem: Sync {
    fn dim(&self) -> usize;
    fn mass(&self) -> &SysMatrix;
    fn contact(&self) -> Option<&ContactPatch>;
    /// Contact gaps `[g_x, g_y, g_n]` per node for a state.
    fn gaps(&self, q: &DVector<f64>) -> DVector<f64>;
    /// Internal force and tangent; contact is evaluated against the committed `state`.
    fn internal(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<(DVector<f64>, SysMatrix)>;
    /// Stored elastic energy without the contact layer.
    fn elastic_energy(&self, q: &DVector<f64>) -> Result<f64>;
    /// Linear functional giving the probe displacement.
    fn probe(&self) -> &DVector<f64>;

    fn fresh_state(&self) -> Option<ContactState> {
        self.contact().map(ContactState::new)
    }

    /// Elastic plus contact energy; `state` must be committed at `q`.
    fn potential_energy(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<f64> {
        let c = match (self.contact(), state) {
            (Some(p), Some(s)) => contact_energy(p, s),
            _ => 0.0,
        };
        Ok(self.elastic_energy(q)? + c)
    }
}

/// Which elements of the full-order model use the nonlinear strain measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometricScope {
    Linear,
    ThinOnly,
    All,
}

/// Monolithic finite element model with optional frictional contact between panel and block.
#[derive(Debug, Clone)]
pub struct FomSystem {
    pub model: FullOrderModel,
    pub scope: GeometricScope,
    mass: SysMatrix,
    contact: Option<ContactPatch>,
    /// Equations of the (panel, block) node of each contact pair.
    pair_eqs: Vec<([usize; 3], [usize; 3])>,
    nonlinear: Vec<bool>,
    probe: DVector<f64>,
}

impl FomSystem {
    /// `contact = None` or a tied patch gives the tied model.
    pub fn new(bench: &Benchmark, contact: Option<&ContactParams>, scope: GeometricScope) -> Result<Self> {
        let contact = contact.filter(|c| !c.tied);
        let model = bench.full_model(contact.is_none())?;
        let patch = contact
            .map(|c| ContactPatch::new(c, &bench.contact.xy, &bench.contact.weights))
            .transpose()?;
        let eqs = |node: usize| -> Result<[usize; 3]> {
            let e = model.dofs().node_eqs(node);
            match e {
                [Some(a), Some(b), Some(c)] => Ok([a, b, c]),
                _ => Err(Error::UnpairedContactNode(node)),
            }
        };
        let pair_eqs = if patch.is_some() {
            bench
                .contact
                .pairs
                .iter()
                .map(|&(p, b)| Ok((eqs(p)?, eqs(b)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let n_el = model.mesh().n_elements();
        let nonlinear = match scope {
            GeometricScope::Linear => vec![false; n_el],
            GeometricScope::All => vec![true; n_el],
            GeometricScope::ThinOnly => {
                let mut flags = vec![false; n_el];
                let thin = model
                    .mesh()
                    .element_sets
                    .get("thin")
                    .ok_or_else(|| Error::Mesh("element set `thin` is missing".into()))?;
                for &e in thin {
                    flags[e] = true;
                }
                flags
            }
        };
        let mut probe = DVector::zeros(model.n_dofs());
        let eq = model
            .dofs()
            .eq(bench.probe, 2)
            .ok_or_else(|| Error::Parameter("probe node is constrained".into()))?;
        probe[eq] = 1.0;
        Ok(Self {
            mass: SysMatrix::Band(model.mass().clone()),
            model,
            scope,
            contact: patch,
            pair_eqs,
            nonlinear,
            probe,
        })
    }
}

impl MechanicalSystem for FomSystem {
    fn dim(&self) -> usize {
        self.model.n_dofs()
    }

    fn mass(&self) -> &SysMatrix {
        &self.mass
    }

    fn contact(&self) -> Option<&ContactPatch> {
        self.contact.as_ref()
    }

    fn gaps(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(3 * self.pair_eqs.len());
        for (i, (p, b)) in self.pair_eqs.iter().enumerate() {
            for d in 0..3 {
                g[3 * i + d] = q[b[d]] - q[p[d]];
            }
        }
        g
    }

    fn internal(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<(DVector<f64>, SysMatrix)> {
        let (mut f, mut k) = match self.scope {
            GeometricScope::Linear => (self.model.stiffness().mul_vec(q), self.model.stiffness().clone()),
            GeometricScope::All => self.model.internal_force_and_tangent(q)?,
            GeometricScope::ThinOnly => self.model.internal_force_and_tangent_mixed(q, &self.nonlinear)?,
        };
        if let Some(patch) = &self.contact {
            let fresh;
            let state = match state {
                Some(s) => s,
                None => {
                    fresh = ContactState::new(patch);
                    &fresh
                }
            };
            let c = contact_nodal_forces(patch, state, &self.gaps(q))?;
            // g = u_block − u_panel: the block sees +f, the panel −f
            for (i, (p, b)) in self.pair_eqs.iter().enumerate() {
                for r in 0..3 {
                    f[b[r]] += c.force[3 * i + r];
                    f[p[r]] -= c.force[3 * i + r];
                    for s in 0..3 {
                        let kt = c.tangent[i][(r, s)];
                        if kt != 0.0 {
                            k.add(b[r], b[s], kt);
                            k.add(b[r], p[s], -kt);
                            k.add(p[r], b[s], -kt);
                            k.add(p[r], p[s], kt);
                        }
                    }
                }
            }
        }
        Ok((f, SysMatrix::Band(k)))
    }

    fn elastic_energy(&self, q: &DVector<f64>) -> Result<f64> {
        match self.scope {
            GeometricScope::Linear => Ok(0.5 * q.dot(&self.model.stiffness().mul_vec(q))),
            GeometricScope::All => self.model.strain_energy(q),
            GeometricScope::ThinOnly => self.model.strain_energy_mixed(q, &self.nonlinear),
        }
    }

    fn probe(&self) -> &DVector<f64> {
        &self.probe
    }
}

/// Assembled reduced model as a mechanical system.
#[derive(Debug, Clone)]
pub struct RomSystem {
    pub rom: SystemRom,
    mass: SysMatrix,
    probe: DVector<f64>,
}

impl RomSystem {
    pub fn new(rom: SystemRom, probe: DVector<f64>) -> Result<Self> {
        if probe.len() != rom.dim() {
            return Err(Error::Dimension {
                what: "probe vector",
                expected: rom.dim(),
                got: probe.len(),
            });
        }
        Ok(Self {
            mass: SysMatrix::Dense(rom.mass.clone()),
            rom,
            probe,
        })
    }

    /// Probe row built from the thin-walled basis.
    pub fn with_benchmark_probe(rom: SystemRom, bench: &Benchmark, thin: &ThinComponent) -> Result<Self> {
        let probe = rom_probe(&rom, bench, thin)?;
        Self::new(rom, probe)
    }
}

impl MechanicalSystem for RomSystem {
    fn dim(&self) -> usize {
        self.rom.dim()
    }

    fn mass(&self) -> &SysMatrix {
        &self.mass
    }

    fn contact(&self) -> Option<&ContactPatch> {
        self.rom.contact.as_ref()
    }

    fn gaps(&self, q: &DVector<f64>) -> DVector<f64> {
        self.rom.gaps(q)
    }

    fn internal(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<(DVector<f64>, SysMatrix)> {
        let h = self.rom.nonlinear_force(q, state)?;
        Ok((&self.rom.stiffness * q + h.force, SysMatrix::Dense(&self.rom.stiffness + h.jacobian)))
    }

    fn elastic_energy(&self, q: &DVector<f64>) -> Result<f64> {
        let linear = 0.5 * q.dot(&(&self.rom.stiffness * q));
        let geom = match &self.rom.geometry {
            Some(g) => g.potential(&self.rom.coupling.thin_coords(q)),
            None => 0.0,
        };
        Ok(linear + geom)
    }

    fn probe(&self) -> &DVector<f64> {
        &self.probe
    }
}

/// Probe displacement (panel centre, z) as a row on system coordinates.
pub fn rom_probe(rom: &SystemRom, bench: &Benchmark, thin: &ThinComponent) -> Result<DVector<f64>> {
    let local = bench
        .thin
        .local(bench.probe)
        .ok_or_else(|| Error::Parameter("probe node is not in the thin-walled region".into()))?;
    let eq = thin
        .model
        .dofs()
        .eq(local, 2)
        .ok_or_else(|| Error::Parameter("probe node is constrained".into()))?;
    let row = thin.reduced.basis.t.row(eq).transpose();
    Ok(rom.coupling.gather_force(None, Some(&row)))
}

/// `M b` for a uniform acceleration field `b` on the full-order model.
pub fn fom_inertia_pattern(model: &FullOrderModel, direction: Vector3<f64>) -> DVector<f64> {
    let b = model.gather(&vec![direction; model.mesh().nodes.len()]);
    model.mass().mul_vec(&b)
}

/// Reduced `Lᵀ [Tᵀ Gᵀ M b; Tᵀ M b]` for a uniform acceleration field.
pub fn rom_inertia_pattern(
    rom: &SystemRom,
    support: &SupportComponent,
    thin: &ThinComponent,
    direction: Vector3<f64>,
) -> DVector<f64> {
    let fs = support.gap.transform_force(&fom_inertia_pattern(&support.model, direction));
    let mut fs = support.reduced.project_force(&fs);
    let drop = support.reduced.basis.n_boundary() - rom.coupling.nb;
    if drop > 0 {
        fs = fs.rows(drop, fs.len() - drop).into_owned();
    }
    let ft = thin.reduced.project_force(&fom_inertia_pattern(&thin.model, direction));
    rom.coupling.gather_force(Some(&fs), Some(&ft))
}

/// Newton settings shared by the quasi-static and transient solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance relative to the force level.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step bisections allowed before giving up.
    pub max_bisections: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
            max_bisections: 4,
        }
    }
}

/// Solves `f_int(q) + c M (q − q_pred) = rhs` by Newton from `q0`; returns `q` and `f_int(q)`.
///
/// The residual is measured against the current forces but never against less than `floor`,
/// the force level of the whole analysis, so that load reversals through zero converge.
fn equilibrium<S: MechanicalSystem + ?Sized>(
    sys: &S,
    state: Option<&ContactState>,
    q0: &DVector<f64>,
    rhs: &DVector<f64>,
    inertia: Option<(f64, &DVector<f64>)>,
    floor: f64,
    opts: &SolverOptions,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let mut q = q0.clone();
    for _ in 0..=opts.max_iterations {
        let (f, mut k) = sys.internal(&q, state).ok()?;
        let mut r = &f - rhs;
        let mut scale = rhs.norm().max(f.norm()).max(floor);
        if let Some((c, qp)) = inertia {
            let fi = sys.mass().mul_vec(&(&q - qp)) * c;
            scale = scale.max(fi.norm());
            r += fi;
            k.add_scaled(c, sys.mass());
        }
        let rn = r.norm();
        if !rn.is_finite() {
            return None;
        }
        if rn <= opts.tolerance * scale {
            return Some((q, f));
        }
        let dq = k.factor().ok()?.solve(&r);
        q -= dq;
    }
    None
}

/// Quasi-static path follower that keeps the contact history committed.
struct Tracker<'a, S: MechanicalSystem + ?Sized> {
    sys: &'a S,
    opts: SolverOptions,
    state: Option<ContactState>,
    q: DVector<f64>,
    f: DVector<f64>,
    floor: f64,
    /// `∫ f_intᵀ dq` along the path (trapezoid).
    work: f64,
    dissipated: f64,
}

impl<'a, S: MechanicalSystem + ?Sized> Tracker<'a, S> {
    fn new(sys: &'a S, opts: SolverOptions, floor: f64) -> Self {
        Self {
            sys,
            opts,
            state: sys.fresh_state(),
            q: DVector::zeros(sys.dim()),
            f: DVector::zeros(sys.dim()),
            floor,
            work: 0.0,
            dissipated: 0.0,
        }
    }

    fn point(&self, tau: f64, alpha: f64, pattern: &DVector<f64>, work0: f64, nodes: &[usize]) -> TracePoint {
        let nodes = match &self.state {
            Some(st) => nodes
                .iter()
                .filter_map(|&i| st.nodes.get(i).map(|n| (i, n)))
                .map(|(i, n)| NodeTrace {
                    node: i,
                    p_t: [n.p_t[0], n.p_t[1]],
                    g_t: [n.g[0], n.g[1]],
                })
                .collect(),
            None => Vec::new(),
        };
        TracePoint {
            tau,
            alpha,
            eta: pattern.dot(&self.q),
            probe: self.sys.probe().dot(&self.q),
            dissipation: self.work - work0,
            nodes,
        }
    }

    fn accept(&mut self, q: DVector<f64>, f: DVector<f64>) {
        self.work += 0.5 * (&self.f + &f).dot(&(&q - &self.q));
        if let (Some(p), Some(s)) = (self.sys.contact(), self.state.as_mut()) {
            self.dissipated += s.commit(p, &self.sys.gaps(&q));
        }
        self.q = q;
        self.f = f;
    }

    /// Moves the load factor on `pattern` from `a0` to `a1`.
    fn step(&mut self, pattern: &DVector<f64>, a0: f64, a1: f64, depth: usize) -> Result<()> {
        let rhs = pattern * a1;
        if let Some((q, f)) = equilibrium(self.sys, self.state.as_ref(), &self.q, &rhs, None, self.floor, &self.opts) {
            self.accept(q, f);
            return Ok(());
        }
        if depth >= self.opts.max_bisections {
            return Err(Error::NewtonDivergence { last_converged: a0 });
        }
        let mid = 0.5 * (a0 + a1);
        self.step(pattern, a0, mid, depth + 1)?;
        self.step(pattern, mid, a1, depth + 1)
    }
}

/// Mass-normalized mode of the tangent at `q = 0` with all contact nodes sticking.
#[derive(Debug, Clone)]
pub struct LinearMode {
    pub omega: f64,
    pub shape: DVector<f64>,
    /// `‖Kφ − ω²Mφ‖ / ‖Kφ‖`.
    pub residual: f64,
}

impl LinearMode {
    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }
}

/// Mode `index` of the linearized system among the modes accepted by `filter`.
pub fn linearized_mode<S: MechanicalSystem + ?Sized>(
    sys: &S,
    index: usize,
    filter: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<LinearMode> {
    let q0 = DVector::zeros(sys.dim());
    let state = sys.fresh_state();
    let (_, k) = sys.internal(&q0, state.as_ref())?;
    let extra = if filter.is_some() { 3 * index + 8 } else { 0 };
    let n = (index + 1 + extra).min(sys.dim());
    let mut modes = solve_eigen(&k, sys.mass(), n)?;
    if let Some(keep) = filter {
        modes.retain(|_, v| keep(v));
    }
    if index >= modes.len() {
        return Err(Error::EigenNonConvergence(format!("mode {index} not found among {n} computed")));
    }
    let lambda = modes.eigenvalues[index];
    if lambda <= 0.0 {
        return Err(Error::UnstableLinearization(lambda));
    }
    let mut shape = modes.shape(index);
    shape /= sys.mass().form(&shape, &shape).sqrt();
    if sys.probe().dot(&shape) < 0.0 {
        shape = -shape;
    }
    let kphi = k.mul_vec(&shape);
    let residual = (&kphi - sys.mass().mul_vec(&shape) * lambda).norm() / kphi.norm();
    Ok(LinearMode {
        omega: lambda.sqrt(),
        shape,
        residual,
    })
}

/// Mode `index` among the modes of the full-order model that are even in `y`.
pub fn fom_symmetric_mode(fom: &FomSystem, index: usize) -> Result<LinearMode> {
    let mirror = DofMirror::build(&fom.model)?;
    let keep = |v: &DVector<f64>| mirror.is_symmetric(v);
    linearized_mode(fom, index, Some(&keep))
}

/// Modal force levels `α̂ = ω² x / (p·φ)` whose linear response has probe amplitude `x`.
pub fn levels_for_probe_amplitudes(mode: &LinearMode, probe: &DVector<f64>, amplitudes: &[f64]) -> Vec<f64> {
    let gain = probe.dot(&mode.shape);
    amplitudes.iter().map(|x| mode.omega * mode.omega * x / gain).collect()
}

/// Settings of the quasi-static modal analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsmaOptions {
    pub steps_per_cycle: usize,
    pub max_cycles: usize,
    /// Relative loop-closure and dissipation change that ends the cycling.
    pub closure_tolerance: f64,
    pub newton: SolverOptions,
    /// Contact nodes whose tangential traction and gap are recorded in the trace.
    pub trace_nodes: Vec<usize>,
}

impl Default for QsmaOptions {
    fn default() -> Self {
        Self {
            steps_per_cycle: 200,
            max_cycles: 20,
            closure_tolerance: 1e-3,
            newton: SolverOptions::default(),
            trace_nodes: Vec::new(),
        }
    }
}

/// Tangential traction and gap of one contact node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub node: usize,
    pub p_t: [f64; 2],
    pub g_t: [f64; 2],
}

/// One point of a modal force–displacement trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Pseudo-time within the cycle (0..1), or the signed load fraction for initial loading.
    pub tau: f64,
    pub alpha: f64,
    pub eta: f64,
    pub probe: f64,
    /// `∫ f_intᵀ dq` since the start of the cycle or branch.
    pub dissipation: f64,
    pub nodes: Vec<NodeTrace>,
}

/// Amplitude-dependent modal properties at one load level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QsmaLevel {
    /// Modal force amplitude `α̂`.
    pub alpha: f64,
    /// Modal amplitude `η̂`.
    pub eta: f64,
    pub probe_amplitude: f64,
    pub omega: f64,
    pub damping: f64,
    /// Dissipated energy per cycle (N·mm).
    pub dissipation: f64,
    /// Frictional work over the same cycle, from the contact history.
    pub friction_work: f64,
    pub cycles: usize,
    /// Relative mismatch between the start and the end of the last cycle.
    pub closure: f64,
    pub converged: bool,
    /// Dissipation comes from Masing's construction rather than a closed loop.
    pub masing: bool,
    pub trace: Vec<TracePoint>,
}

impl QsmaLevel {
    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }
}

fn modal_quantities(alpha: f64, eta: f64, dissipation: f64) -> (f64, f64) {
    if eta <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let omega = (alpha / eta).sqrt();
    (omega, dissipation / (2.0 * PI * alpha * eta))
}

/// Cyclic modal-force loading `f = α̂ sin(2πτ) M φ` at each level.
pub fn qsma_hysteresis<S: MechanicalSystem + ?Sized>(
    sys: &S,
    mode: &LinearMode,
    levels: &[f64],
    opts: &QsmaOptions,
) -> Result<Vec<QsmaLevel>> {
    let pattern = sys.mass().mul_vec(&mode.shape);
    levels
        .par_iter()
        .map(|&alpha| hysteresis_level(sys, &pattern, alpha, opts))
        .collect()
}

fn hysteresis_level<S: MechanicalSystem + ?Sized>(
    sys: &S,
    pattern: &DVector<f64>,
    alpha: f64,
    opts: &QsmaOptions,
) -> Result<QsmaLevel> {
    let n = opts.steps_per_cycle.max(4);
    let mut tr = Tracker::new(sys, opts.newton, pattern.norm() * alpha.abs());
    let mut previous: Option<f64> = None;
    let mut a_prev = 0.0;
    for cycle in 1..=opts.max_cycles.max(1) {
        let q_start = tr.q.clone();
        let (w0, d0) = (tr.work, tr.dissipated);
        let mut trace = Vec::with_capacity(n + 1);
        trace.push(tr.point(0.0, a_prev, pattern, w0, &opts.trace_nodes));
        let mut q_max: f64 = tr.q.norm();
        for k in 1..=n {
            let tau = k as f64 / n as f64;
            let a = alpha * (2.0 * PI * tau).sin();
            tr.step(pattern, a_prev, a, 0)?;
            a_prev = a;
            q_max = q_max.max(tr.q.norm());
            trace.push(tr.point(tau, a, pattern, w0, &opts.trace_nodes));
        }
        let dissipation = tr.work - w0;
        let friction_work = tr.dissipated - d0;
        let closure = if q_max > 0.0 { (&tr.q - &q_start).norm() / q_max } else { 0.0 };
        let (lo, hi) = trace
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.eta), h.max(p.eta)));
        let eta = 0.5 * (hi - lo);
        let (plo, phi) = trace
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.probe), h.max(p.probe)));
        // dissipation below D ~ 1e-8 is round-off
        let floor = 1e-7 * alpha.abs() * eta;
        let settled = previous.is_some_and(|e: f64| {
            (dissipation - e).abs() <= opts.closure_tolerance * dissipation.abs().max(floor)
        });
        let converged = cycle >= 2 && closure <= opts.closure_tolerance && settled;
        if converged || cycle == opts.max_cycles.max(1) {
            let (omega, damping) = modal_quantities(alpha, eta, dissipation.max(0.0));
            return Ok(QsmaLevel {
                alpha,
                eta,
                probe_amplitude: 0.5 * (phi - plo),
                omega,
                damping,
                dissipation,
                friction_work,
                cycles: cycle,
                closure,
                converged,
                masing: false,
                trace,
            });
        }
        previous = Some(dissipation);
    }
    unreachable!("the last cycle always returns")
}

/// Monotonic loading from the virgin state to `±α̂` with dissipation from Masing's rule.
///
/// Each branch contributes the area between the curve and its secant through the origin;
/// the loop area is four times the sum of the two branch areas.
pub fn qsma_initial_loading<S: MechanicalSystem + ?Sized>(
    sys: &S,
    mode: &LinearMode,
    levels: &[f64],
    opts: &QsmaOptions,
) -> Result<Vec<QsmaLevel>> {
    let pattern = sys.mass().mul_vec(&mode.shape);
    levels
        .par_iter()
        .map(|&alpha| initial_loading_level(sys, &pattern, alpha, opts))
        .collect()
}

fn loading_branch<S: MechanicalSystem + ?Sized>(
    sys: &S,
    pattern: &DVector<f64>,
    alpha: f64,
    steps: usize,
    opts: &QsmaOptions,
) -> Result<(Vec<TracePoint>, f64)> {
    let mut tr = Tracker::new(sys, opts.newton, pattern.norm() * alpha.abs());
    let mut trace = vec![tr.point(0.0, 0.0, pattern, 0.0, &opts.trace_nodes)];
    let mut a_prev = 0.0;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let a = alpha * s;
        tr.step(pattern, a_prev, a, 0)?;
        a_prev = a;
        trace.push(tr.point(s * alpha.signum(), a, pattern, 0.0, &opts.trace_nodes));
    }
    // area between the curve α(η) and the chord from the origin to the end point
    let (end_alpha, end_eta) = (trace[trace.len() - 1].alpha, trace[trace.len() - 1].eta);
    let under: f64 = trace.windows(2).map(|w| 0.5 * (w[0].alpha + w[1].alpha) * (w[1].eta - w[0].eta)).sum();
    Ok((trace, under - 0.5 * end_alpha * end_eta))
}

fn initial_loading_level<S: MechanicalSystem + ?Sized>(
    sys: &S,
    pattern: &DVector<f64>,
    alpha: f64,
    opts: &QsmaOptions,
) -> Result<QsmaLevel> {
    let steps = (opts.steps_per_cycle / 4).max(1);
    let (pos, a_pos) = loading_branch(sys, pattern, alpha, steps, opts)?;
    let (neg, a_neg) = loading_branch(sys, pattern, -alpha, steps, opts)?;
    let (p_end, n_end) = (pos[pos.len() - 1].clone(), neg[neg.len() - 1].clone());
    let eta = 0.5 * (p_end.eta - n_end.eta);
    let dissipation = (4.0 * (a_pos + a_neg)).max(0.0);
    let (omega, damping) = modal_quantities(alpha, eta, dissipation);
    let mut trace: Vec<TracePoint> = neg.into_iter().rev().collect();
    trace.extend(pos.into_iter().skip(1));
    Ok(QsmaLevel {
        alpha,
        eta,
        probe_amplitude: 0.5 * (p_end.probe - n_end.probe),
        omega,
        damping,
        dissipation,
        friction_work: f64::NAN,
        cycles: 0,
        closure: 0.0,
        converged: true,
        masing: true,
        trace,
    })
}

/// Base-acceleration half-sine pulse `f(t) = −A sin(2πt/T) M b` for `t ≤ T`.
#[derive(Debug, Clone)]
pub struct Pulse {
    /// `M b` on system coordinates.
    pub pattern: DVector<f64>,
    pub amplitude: f64,
    pub duration: f64,
}

impl Pulse {
    pub fn force(&self, t: f64) -> DVector<f64> {
        if t <= self.duration {
            &self.pattern * (-self.amplitude * (2.0 * PI * t / self.duration).sin())
        } else {
            DVector::zeros(self.pattern.len())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewmarkOptions {
    pub dt: f64,
    pub t_end: f64,
    pub newton: SolverOptions,
}

/// Energy bookkeeping at one time level (N·mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub time: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub friction_work: f64,
    pub external_work: f64,
}

impl EnergyRecord {
    /// `T + V + W_fric − W_ext`; zero for an exact integrator.
    pub fn balance(&self) -> f64 {
        self.kinetic + self.potential + self.friction_work - self.external_work
    }
}

#[derive(Debug, Clone)]
pub struct TransientResult {
    pub time: Vec<f64>,
    pub probe: Vec<f64>,
    pub energy: Vec<EnergyRecord>,
    /// Number of accepted sub-steps beyond the nominal step count.
    pub extra_steps: usize,
    pub q_final: DVector<f64>,
}

impl TransientResult {
    /// Largest `|balance|` relative to the largest energy level reached.
    pub fn energy_error(&self) -> f64 {
        let scale = self
            .energy
            .iter()
            .map(|e| (e.kinetic + e.potential).abs().max(e.external_work.abs()))
            .fold(0.0, f64::max);
        let worst = self.energy.iter().map(|e| e.balance().abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

#[derive(Clone)]
struct Kinematics {
    q: DVector<f64>,
    v: DVector<f64>,
    a: DVector<f64>,
    f_ext: DVector<f64>,
    state: Option<ContactState>,
    friction: f64,
    external: f64,
    steps: usize,
}

fn newmark_step<S: MechanicalSystem + ?Sized>(
    sys: &S,
    pulse: &Pulse,
    s: &Kinematics,
    t0: f64,
    dt: f64,
    depth: usize,
    opts: &SolverOptions,
) -> Result<Kinematics> {
    let t1 = t0 + dt;
    let c = 4.0 / (dt * dt);
    let pred = &s.q + &s.v * dt + &s.a * (0.25 * dt * dt);
    let f1 = pulse.force(t1);
    // M a₁ = c M (q − pred), with M pred folded into the inertia term
    match equilibrium(sys, s.state.as_ref(), &s.q, &f1, Some((c, &pred)), pulse.pattern.norm() * pulse.amplitude.abs(), opts) {
        Some((q, _)) => {
            let a = (&q - &pred) * c;
            let v = &s.v + (&s.a + &a) * (0.5 * dt);
            let mut state = s.state.clone();
            let mut friction = s.friction;
            if let (Some(p), Some(st)) = (sys.contact(), state.as_mut()) {
                friction += st.commit(p, &sys.gaps(&q));
            }
            let external = s.external + 0.5 * (&s.f_ext + &f1).dot(&(&q - &s.q));
            Ok(Kinematics {
                q,
                v,
                a,
                f_ext: f1,
                state,
                friction,
                external,
                steps: s.steps + 1,
            })
        }
        None if depth < opts.max_bisections => {
            let half = newmark_step(sys, pulse, s, t0, 0.5 * dt, depth + 1, opts)?;
            newmark_step(sys, pulse, &half, t0 + 0.5 * dt, 0.5 * dt, depth + 1, opts)
        }
        None => Err(Error::TimeStepFailure {
            time: t0,
            bisections: depth,
        }),
    }
}

/// Constant-average-acceleration Newmark integration from rest.
pub fn newmark_transient<S: MechanicalSystem + ?Sized>(
    sys: &S,
    pulse: &Pulse,
    opts: &NewmarkOptions,
) -> Result<TransientResult> {
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(Error::Parameter("time step and end time must be positive".into()));
    }
    if pulse.pattern.len() != sys.dim() {
        return Err(Error::Dimension {
            what: "pulse pattern",
            expected: sys.dim(),
            got: pulse.pattern.len(),
        });
    }
    let n = sys.dim();
    let q0 = DVector::zeros(n);
    let state = sys.fresh_state();
    let f0 = pulse.force(0.0);
    let (fi, _) = sys.internal(&q0, state.as_ref())?;
    let a0 = sys.mass().factor()?.solve(&(&f0 - fi));
    let mut s = Kinematics {
        q: q0,
        v: DVector::zeros(n),
        a: a0,
        f_ext: f0,
        state,
        friction: 0.0,
        external: 0.0,
        steps: 0,
    };
    let n_steps = (opts.t_end / opts.dt).round() as usize;
    let mut out = TransientResult {
        time: Vec::with_capacity(n_steps + 1),
        probe: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        extra_steps: 0,
        q_final: DVector::zeros(n),
    };
    let record = |s: &Kinematics, t: f64, out: &mut TransientResult| -> Result<()> {
        out.time.push(t);
        out.probe.push(sys.probe().dot(&s.q));
        out.energy.push(EnergyRecord {
            time: t,
            kinetic: 0.5 * sys.mass().form(&s.v, &s.v),
            potential: sys.potential_energy(&s.q, s.state.as_ref())?,
            friction_work: s.friction,
            external_work: s.external,
        });
        Ok(())
    };
    record(&s, 0.0, &mut out)?;
    for k in 0..n_steps {
        let t0 = k as f64 * opts.dt;
        s = newmark_step(sys, pulse, &s, t0, opts.dt, 0, &opts.newton)?;
        record(&s, t0 + opts.dt, &mut out)?;
    }
    out.extra_steps = s.steps - n_steps;
    out.q_final = s.q;
    Ok(out)
}
