//! Stage graph: dependency order, freshness checks and the stage bodies.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use jointrom::assembly::assemble_system;
use jointrom::cms::{GapTransform, ReducedComponent};
use jointrom::components::{reduce_support, reduce_thin, support_contact, SupportComponent, ThinComponent};
use jointrom::condensation::{
    generate_load_cases, load_case_count, regress_coefficients, run_campaign, GeomForceCoefficients, LoadScale,
    ThinCondensation,
};
use jointrom::contact::ContactPatch;
use jointrom::fe::Benchmark;
use jointrom::io;
use jointrom::solvers::{
    fom_inertia_pattern, fom_symmetric_mode, levels_for_probe_amplitudes, linearized_mode, newmark_transient,
    qsma_hysteresis, qsma_initial_loading, rom_inertia_pattern, FomSystem, GeometricScope, LinearMode,
    MechanicalSystem, NewmarkOptions, Pulse, QsmaLevel, RomSystem,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::artifacts::{hash_outputs, InputHasher, StageRecord, Unit};
use crate::config::{PipelineConfig, PulseConfig, QsmaVariant};
use crate::output;
use crate::CliError;

/// User-facing pipeline stage (subcommand).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Stage {
    Mesh,
    Cms,
    Scale,
    Campaign,
    Regress,
    Assemble,
    Qsma,
    Transient,
    FomReference,
    Report,
}

impl Stage {
    /// Stages run when none are selected.
    pub const DEFAULT: [Stage; 9] = [
        Stage::Mesh,
        Stage::Cms,
        Stage::Scale,
        Stage::Campaign,
        Stage::Regress,
        Stage::Assemble,
        Stage::Qsma,
        Stage::Transient,
        Stage::Report,
    ];

    pub fn units(self) -> &'static [Unit] {
        match self {
            Stage::Mesh => &[Unit::Mesh],
            Stage::Cms => &[Unit::Thin, Unit::Support],
            Stage::Scale => &[Unit::Scale],
            Stage::Campaign => &[Unit::Campaign],
            Stage::Regress => &[Unit::Regress],
            Stage::Assemble => &[Unit::Assemble],
            Stage::Qsma => &[Unit::Qsma],
            Stage::Transient => &[Unit::Transient],
            Stage::FomReference => &[Unit::FomReference],
            Stage::Report => &[Unit::Report],
        }
    }
}

/// What happened to a unit in one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Built,
    UpToDate,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub units: Vec<(Unit, Outcome)>,
}

impl RunSummary {
    pub fn outcome(&self, unit: Unit) -> Option<Outcome> {
        self.units.iter().find(|(u, _)| *u == unit).map(|(_, o)| *o)
    }
}

fn deps(cfg: &PipelineConfig, unit: Unit) -> Vec<Unit> {
    let system = || {
        let mut d = vec![Unit::Thin, Unit::Support];
        if cfg.model.geometric {
            d.push(Unit::Regress);
        }
        d
    };
    match unit {
        Unit::Mesh => vec![],
        Unit::Thin | Unit::Support | Unit::FomReference => vec![Unit::Mesh],
        Unit::Scale => vec![Unit::Thin],
        Unit::Campaign => vec![Unit::Thin, Unit::Scale],
        Unit::Regress => vec![Unit::Thin, Unit::Campaign],
        Unit::Assemble => system(),
        Unit::Qsma | Unit::Transient => {
            let mut d = system();
            d.push(Unit::Assemble);
            d
        }
        Unit::Report => vec![],
    }
}

#[derive(Serialize)]
struct ThinInputs {
    degree: usize,
    interface_modes: usize,
    thin_modes: usize,
    symmetric: bool,
}

#[derive(Serialize)]
struct SupportInputs {
    degree: usize,
    interface_modes: usize,
    support_modes: usize,
    symmetric: bool,
}

/// Hash of the configuration that a unit reads, without upstream artifacts.
fn config_hash(cfg: &PipelineConfig, unit: Unit, h: &mut InputHasher) -> Result<(), CliError> {
    let r = &cfg.reduction;
    match unit {
        Unit::Mesh => {
            h.section("geometry", &cfg.geometry).section("mesh", &cfg.mesh).section("material", &cfg.material);
        }
        Unit::Thin => {
            h.section(
                "reduction",
                &ThinInputs {
                    degree: r.degree,
                    interface_modes: r.interface_modes,
                    thin_modes: r.thin_modes,
                    symmetric: r.symmetric,
                },
            );
        }
        Unit::Support => {
            h.section(
                "reduction",
                &SupportInputs {
                    degree: r.degree,
                    interface_modes: r.interface_modes,
                    support_modes: r.support_modes,
                    symmetric: r.symmetric,
                },
            )
            .section("contact", &cfg.contact);
            if let Some(f) = &cfg.contact.profile_file {
                let text = fs::read_to_string(f).map_err(|e| CliError::Config(vec![format!("{}: {e}", f.display())]))?;
                h.field("profile_file", &text);
            }
        }
        Unit::Scale | Unit::Campaign => {
            h.section("scaling", &cfg.scaling);
        }
        Unit::Regress => {}
        Unit::Assemble => {
            h.section("model", &cfg.model);
        }
        Unit::Qsma => {
            h.section("model", &cfg.model).section("qsma", &cfg.qsma).section("solver", &cfg.solver);
        }
        Unit::Transient => {
            h.section("model", &cfg.model).section("pulse", &cfg.pulse).section("solver", &cfg.solver);
        }
        Unit::FomReference => {
            h.section("contact", &cfg.contact)
                .section("model", &cfg.model)
                .section("qsma", &cfg.qsma)
                .section("pulse", &cfg.pulse)
                .section("solver", &cfg.solver)
                .section("fom_reference", &cfg.fom_reference);
            if let Some(f) = &cfg.contact.profile_file {
                let text = fs::read_to_string(f).map_err(|e| CliError::Config(vec![format!("{}: {e}", f.display())]))?;
                h.field("profile_file", &text);
            }
        }
        Unit::Report => {}
    }
    Ok(())
}

/// Stage runner bound to one configuration and output directory.
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub workers: usize,
    /// Progress lines go here.
    pub log: Box<dyn FnMut(&str)>,
}

/// Current freshness of a unit.
enum Status {
    /// Complete, intact and built from the current inputs.
    Fresh(StageRecord),
    Stale(String),
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, out: PathBuf, workers: usize) -> Self {
        Self {
            cfg,
            out,
            workers,
            log: Box::new(|_| {}),
        }
    }

    fn input_hash(&self, unit: Unit, upstream: &BTreeMap<Unit, StageRecord>) -> Result<String, CliError> {
        let mut h = InputHasher::default();
        h.field("unit", unit.name()).field("version", env!("CARGO_PKG_VERSION"));
        config_hash(&self.cfg, unit, &mut h)?;
        for d in deps(&self.cfg, unit) {
            let rec = upstream
                .get(&d)
                .ok_or_else(|| CliError::Stale(format!("{} requires {}", unit.name(), d.name())))?;
            h.field(d.name(), &rec.output_hash());
        }
        Ok(h.finish())
    }

    fn status(&self, unit: Unit, fresh: &BTreeMap<Unit, StageRecord>) -> Result<Status, CliError> {
        for d in deps(&self.cfg, unit) {
            if !fresh.contains_key(&d) {
                return Ok(Status::Stale(format!("dependency {} is missing or stale", d.name())));
            }
        }
        let dir = unit.dir(&self.out);
        let Some(rec) = StageRecord::load(&dir) else {
            return Ok(Status::Stale("no artifacts".into()));
        };
        if !rec.complete {
            return Ok(Status::Stale("incomplete".into()));
        }
        if rec.input_hash != self.input_hash(unit, fresh)? {
            return Ok(Status::Stale("inputs changed".into()));
        }
        if !rec.outputs_intact(&dir) {
            return Ok(Status::Stale("artifact hash mismatch".into()));
        }
        Ok(Status::Fresh(rec))
    }

    /// Runs the selected stages in dependency order. A stale dependency outside the
    /// selection is an error; selected units that are already fresh are skipped.
    pub fn run(&mut self, stages: &[Stage]) -> Result<RunSummary, CliError> {
        let selected: Vec<Unit> = stages.iter().flat_map(|s| s.units().iter().copied()).collect();
        let mut fresh: BTreeMap<Unit, StageRecord> = BTreeMap::new();
        let mut summary = RunSummary::default();
        let inspect = selected.contains(&Unit::Report);
        fs::create_dir_all(&self.out)?;
        for unit in Unit::ALL {
            let chosen = selected.contains(&unit);
            if unit == Unit::Report {
                if chosen {
                    self.report(&fresh)?;
                    summary.units.push((unit, Outcome::Built));
                }
                continue;
            }
            let needed = selected.iter().any(|&s| self.depends_on(s, unit));
            if !chosen && !needed && !inspect {
                continue;
            }
            match self.status(unit, &fresh)? {
                Status::Fresh(rec) => {
                    if chosen {
                        (self.log)(&format!("{:<14} up to date", unit.name()));
                        summary.units.push((unit, Outcome::UpToDate));
                    }
                    fresh.insert(unit, rec);
                }
                Status::Stale(why) if chosen => {
                    (self.log)(&format!("{:<14} building ({why})", unit.name()));
                    let rec = self.build(unit, &fresh)?;
                    fresh.insert(unit, rec);
                    summary.units.push((unit, Outcome::Built));
                }
                Status::Stale(why) if needed => {
                    return Err(CliError::Stale(format!(
                        "{} is stale ({why}); select its stage to rebuild it",
                        unit.name()
                    )));
                }
                // only inspected for the report
                Status::Stale(_) => {}
            }
        }
        Ok(summary)
    }

    fn depends_on(&self, unit: Unit, target: Unit) -> bool {
        deps(&self.cfg, unit)
            .into_iter()
            .any(|d| d == target || self.depends_on(d, target))
    }

    fn build(&mut self, unit: Unit, fresh: &BTreeMap<Unit, StageRecord>) -> Result<StageRecord, CliError> {
        let dir = unit.dir(&self.out);
        let input_hash = self.input_hash(unit, fresh)?;
        // an interrupted campaign with identical inputs is resumed, anything else starts clean
        let resume = unit == Unit::Campaign
            && StageRecord::load(&dir).is_some_and(|r| !r.complete && r.input_hash == input_hash);
        if !resume && dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        let mut rec = StageRecord {
            unit: unit.name().into(),
            input_hash,
            complete: false,
            summary: BTreeMap::new(),
            outputs: BTreeMap::new(),
        };
        rec.save(&dir)?;
        rec.summary = match unit {
            Unit::Mesh => self.mesh(&dir)?,
            Unit::Thin => self.thin(&dir)?,
            Unit::Support => self.support(&dir)?,
            Unit::Scale => self.scale(&dir)?,
            Unit::Campaign => self.campaign(&dir)?,
            Unit::Regress => self.regress(&dir)?,
            Unit::Assemble => self.assemble(&dir)?,
            Unit::Qsma => self.qsma(&dir)?,
            Unit::Transient => self.transient(&dir)?,
            Unit::FomReference => self.fom_reference(&dir)?,
            Unit::Report => BTreeMap::new(),
        };
        rec.outputs = hash_outputs(&dir)?;
        rec.complete = true;
        rec.save(&dir)?;
        Ok(rec)
    }

    fn bench(&self) -> Result<Benchmark, CliError> {
        Ok(Benchmark::build(self.cfg.benchmark_params(), self.cfg.material()?)?)
    }

    fn thin_component(&self, bench: &Benchmark) -> Result<ThinComponent, CliError> {
        Ok(ThinComponent {
            model: bench.thin_model()?,
            reduced: ReducedComponent::load(&Unit::Thin.dir(&self.out))?,
        })
    }

    fn support_component(&self, bench: &Benchmark) -> Result<SupportComponent, CliError> {
        let model = bench.support_model(false)?;
        let gap = GapTransform::build(&model, &bench.support_pairs())?;
        Ok(SupportComponent {
            model,
            gap,
            reduced: ReducedComponent::load(&Unit::Support.dir(&self.out))?,
        })
    }

    fn condensation(&self, bench: &Benchmark, thin: &ThinComponent) -> Result<ThinCondensation, CliError> {
        Ok(ThinCondensation::new(&thin.model, bench.thin_gauged_model()?, &thin.reduced)?)
    }

    fn coefficients(&self) -> Result<GeomForceCoefficients, CliError> {
        let dir = Unit::Regress.dir(&self.out);
        let meta: RegressMeta = read_toml(&dir.join("coefficients.toml"))?;
        let path = dir.join("coefficients.txt");
        let text = fs::read_to_string(&path)?;
        Ok(GeomForceCoefficients::from_table(meta.n, meta.active, &text, path)?)
    }

    /// Assembled ROM from the stored containers.
    fn rom(&self, bench: &Benchmark, thin: &ThinComponent, support: &SupportComponent) -> Result<RomSystem, CliError> {
        let patch = ContactPatch::load(&Unit::Support.dir(&self.out).join("contact.toml"))?;
        let geometry = if self.cfg.model.geometric {
            Some(self.coefficients()?)
        } else {
            None
        };
        let rom = assemble_system(&support.reduced, &thin.reduced, geometry, Some(patch))?;
        Ok(RomSystem::with_benchmark_probe(rom, bench, thin)?)
    }

    fn mesh(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        io::write_text(&dir.join("nodes.txt"), &io::node_table(&b.mesh))?;
        io::write_text(&dir.join("elements.txt"), &io::element_table(&b.mesh))?;
        let mut pairs = String::from("# panel_node block_node x_mm y_mm weight_mm2\n");
        for ((p, q), (xy, w)) in b.contact.pairs.iter().zip(b.contact.xy.iter().zip(&b.contact.weights)) {
            pairs.push_str(&format!("{p} {q} {:.17e} {:.17e} {:.17e}\n", xy[0], xy[1], w));
        }
        io::write_text(&dir.join("contact_pairs.txt"), &pairs)?;
        Ok(summary([
            ("nodes", b.mesh.n_nodes().to_string()),
            ("elements", b.mesh.n_elements().to_string()),
            ("thin_elements", b.thin.mesh.n_elements().to_string()),
            ("contact_pairs", b.contact.pairs.len().to_string()),
            ("probe_node", b.probe.to_string()),
        ]))
    }

    fn thin(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = reduce_thin(&b, &self.cfg.reduction())?;
        thin.reduced.save(dir)?;
        Ok(component_summary(&thin.reduced))
    }

    fn support(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let support = reduce_support(&b, &self.cfg.reduction())?;
        support.reduced.save(dir)?;
        let patch = support_contact(&b, &self.cfg.contact()?)?;
        patch.save(&dir.join("contact.toml"))?;
        let mut s = component_summary(&support.reduced);
        s.insert("contact_nodes".into(), patch.len().to_string());
        s.insert("tied".into(), patch.tied.to_string());
        Ok(s)
    }

    fn scale(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let cond = self.condensation(&b, &thin)?;
        let scales = cond.scale_all(&self.cfg.scaling())?;
        write_toml(
            &dir.join("scales.toml"),
            "# load scales per active coordinate; w_hat, w dimensionless modal amplitudes",
            &Scales { scale: scales.clone() },
        )?;
        let capped = scales.iter().filter(|s| s.gamma_hat < 1.0).count();
        Ok(summary([
            ("active_coordinates", scales.len().to_string()),
            ("buckling_capped", capped.to_string()),
        ]))
    }

    fn campaign(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let cond = self.condensation(&b, &thin)?;
        let scales: Scales = read_toml(&Unit::Scale.dir(&self.out).join("scales.toml"))?;
        let cases = generate_load_cases(cond.n_coords(), &scales.scale);
        (self.log)(&format!("{:<14} {} load cases on {} workers", "", cases.len(), self.workers));
        let results = run_campaign(&cond, &cases, &self.cfg.scaling(), self.workers, Some(dir))?;
        let shrunk = results.iter().filter(|r| r.shrink < 1.0).count();
        Ok(summary([
            ("load_cases", cases.len().to_string()),
            ("expected_load_cases", load_case_count(scales.scale.len()).to_string()),
            ("shrunk_cases", shrunk.to_string()),
        ]))
    }

    fn regress(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let cond = self.condensation(&b, &thin)?;
        let scales: Scales = read_toml(&Unit::Scale.dir(&self.out).join("scales.toml"))?;
        let cases = generate_load_cases(cond.n_coords(), &scales.scale);
        let results = run_campaign(&cond, &cases, &self.cfg.scaling(), self.workers, Some(&Unit::Campaign.dir(&self.out)))?;
        let geom = regress_coefficients(&results, &cond.k_red, &cond.active)?;
        io::write_text(&dir.join("coefficients.txt"), &geom.to_table())?;
        let worst = geom.residuals.iter().copied().fold(0.0, f64::max);
        write_toml(
            &dir.join("coefficients.toml"),
            "# layout of coefficients.txt; residuals are relative least-squares residuals per row",
            &RegressMeta {
                n: geom.n,
                active: geom.active.clone(),
                residuals: geom.residuals.clone(),
            },
        )?;
        let count = geom.active.len() * (geom.quadratic.len() + geom.cubic.len());
        Ok(summary([
            ("coefficients", count.to_string()),
            ("unknowns_per_row", (geom.quadratic.len() + geom.cubic.len()).to_string()),
            ("max_relative_residual", format!("{worst:.3e}")),
        ]))
    }

    fn assemble(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let support = self.support_component(&b)?;
        let rom = self.rom(&b, &thin, &support)?;
        rom.rom.save(dir)?;
        let desc = SystemDescription {
            support: "../support".into(),
            thin: "../thin".into(),
            contact: "../support/contact.toml".into(),
            coefficients: self.cfg.model.geometric.then(|| "../regress/coefficients.txt".into()),
        };
        write_toml(&dir.join("system.toml"), "# reduced system: component containers and contact patch", &desc)?;
        let modes = (0..3.min(rom.dim()))
            .map(|k| linearized_mode(&rom, k, None))
            .collect::<jointrom::Result<Vec<_>>>()?;
        output::write_modes(&dir.join("modes.csv"), &modes)?;
        let mut s = summary([
            ("dimension", rom.dim().to_string()),
            ("contact_coordinates", rom.rom.n_gaps().to_string()),
            ("asymmetry", format!("{:.3e}", rom.rom.asymmetry())),
        ]);
        for (k, m) in modes.iter().enumerate() {
            s.insert(format!("frequency_{}_hz", k + 1), format!("{:.4}", m.frequency_hz()));
        }
        Ok(s)
    }

    fn amplitudes(&self) -> Vec<f64> {
        self.cfg.qsma.amplitudes.iter().map(|r| r * self.cfg.geometry.thickness).collect()
    }

    fn run_qsma<S: MechanicalSystem>(&self, sys: &S, mode: &LinearMode) -> Result<Vec<QsmaLevel>, CliError> {
        let levels = levels_for_probe_amplitudes(mode, sys.probe(), &self.amplitudes());
        let opts = self.cfg.qsma();
        Ok(match self.cfg.qsma.variant {
            QsmaVariant::Hysteresis => qsma_hysteresis(sys, mode, &levels, &opts)?,
            QsmaVariant::InitialLoading => qsma_initial_loading(sys, mode, &levels, &opts)?,
        })
    }

    fn write_qsma(&self, dir: &Path, mode: &LinearMode, levels: &[QsmaLevel], traces: bool) -> Result<Summary, CliError> {
        output::write_backbone(&dir.join("backbone.csv"), mode, &self.cfg.qsma.amplitudes, levels)?;
        if traces {
            for (k, l) in levels.iter().enumerate() {
                output::write_trace(&dir.join(format!("trace-{:02}.csv", k + 1)), &l.trace)?;
            }
        }
        let mut s = summary([
            ("linear_frequency_hz", format!("{:.4}", mode.frequency_hz())),
            ("levels", levels.len().to_string()),
            ("unsettled_levels", levels.iter().filter(|l| !l.converged).count().to_string()),
        ]);
        for (k, l) in levels.iter().enumerate() {
            s.insert(
                format!("level_{:02}", k + 1),
                format!(
                    "omega_ratio={:.6} D={:.4e} cycles={} closure={:.2e} converged={}",
                    l.omega / mode.omega,
                    l.damping,
                    l.cycles,
                    l.closure,
                    l.converged
                ),
            );
        }
        Ok(s)
    }

    fn qsma(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let support = self.support_component(&b)?;
        let rom = self.rom(&b, &thin, &support)?;
        let mode = linearized_mode(&rom, self.cfg.qsma.mode - 1, None)?;
        let levels = self.run_qsma(&rom, &mode)?;
        self.write_qsma(dir, &mode, &levels, true)
    }

    fn pulse_run<S: MechanicalSystem>(
        &self,
        sys: &S,
        modes: (&LinearMode, &LinearMode),
        pattern: nalgebra::DVector<f64>,
        p: &PulseConfig,
        dir: &Path,
    ) -> Result<(String, String), CliError> {
        let duration = p.duration_factor * 2.0 * PI / modes.1.omega;
        let dt = duration / p.steps_per_duration as f64;
        let t_end = p.fundamental_periods * 2.0 * PI / modes.0.omega;
        let pulse = Pulse {
            pattern,
            amplitude: p.amplitude,
            duration,
        };
        let opts = NewmarkOptions {
            dt,
            t_end,
            newton: self.cfg.solver(),
        };
        let res = newmark_transient(sys, &pulse, &opts)?;
        let stride = (p.steps_per_duration / 100).max(1);
        output::write_history(&dir.join(format!("{}.csv", p.name)), &res, stride)?;
        let max = res.probe.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((
            format!("pulse_{}", p.name),
            format!(
                "T={duration:.6e}s dt={dt:.6e}s steps={} extra_steps={} max_probe={max:.6e}mm energy_error={:.3e}",
                res.time.len() - 1,
                res.extra_steps,
                res.energy_error()
            ),
        ))
    }

    fn transient(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let thin = self.thin_component(&b)?;
        let support = self.support_component(&b)?;
        let rom = self.rom(&b, &thin, &support)?;
        let m1 = linearized_mode(&rom, 0, None)?;
        let m2 = linearized_mode(&rom, 1, None)?;
        let mut s = summary([("pulses", self.cfg.pulse.len().to_string())]);
        for p in &self.cfg.pulse {
            let pattern = rom_inertia_pattern(&rom.rom, &support, &thin, direction(p));
            let (k, v) = self.pulse_run(&rom, (&m1, &m2), pattern, p, dir)?;
            s.insert(k, v);
        }
        Ok(s)
    }

    fn fom_reference(&mut self, dir: &Path) -> Result<Summary, CliError> {
        let b = self.bench()?;
        let scope = if self.cfg.model.geometric {
            self.cfg.fom_reference.geometric_scope
        } else {
            GeometricScope::Linear
        };
        let fom = FomSystem::new(&b, Some(&self.cfg.contact()?), scope)?;
        let m1 = fom_symmetric_mode(&fom, 0)?;
        let m2 = fom_symmetric_mode(&fom, 1)?;
        output::write_modes(&dir.join("modes.csv"), &[m1.clone(), m2.clone()])?;
        let mut s = summary([
            ("dofs", fom.dim().to_string()),
            ("frequency_1_hz", format!("{:.4}", m1.frequency_hz())),
            ("frequency_2_hz", format!("{:.4}", m2.frequency_hz())),
        ]);
        if self.cfg.fom_reference.qsma {
            let mode = fom_symmetric_mode(&fom, self.cfg.qsma.mode - 1)?;
            let levels = self.run_qsma(&fom, &mode)?;
            for (k, v) in self.write_qsma(dir, &mode, &levels, false)? {
                s.insert(format!("qsma_{k}"), v);
            }
        }
        if self.cfg.fom_reference.transient {
            for p in &self.cfg.pulse {
                let pattern = fom_inertia_pattern(&fom.model, direction(p));
                let (k, v) = self.pulse_run(&fom, (&m1, &m2), pattern, p, dir)?;
                s.insert(k, v);
            }
        }
        Ok(s)
    }

    /// Writes `report/summary.txt` from the records of all fresh units.
    fn report(&mut self, fresh: &BTreeMap<Unit, StageRecord>) -> Result<(), CliError> {
        let dir = Unit::Report.dir(&self.out);
        fs::create_dir_all(&dir)?;
        let mut text = String::from("# pipeline summary\n");
        for unit in Unit::ALL.iter().filter(|u| **u != Unit::Report) {
            let state = match self.status(*unit, fresh)? {
                Status::Fresh(_) => "fresh".to_string(),
                Status::Stale(why) => format!("stale ({why})"),
            };
            text.push_str(&format!("\n[{}] {state}\n", unit.name()));
            if let Some(rec) = fresh.get(unit) {
                for (k, v) in &rec.summary {
                    text.push_str(&format!("  {k} = {v}\n"));
                }
            }
        }
        let rom = Unit::Qsma.dir(&self.out).join("backbone.csv");
        let fom = Unit::FomReference.dir(&self.out).join("backbone.csv");
        if fresh.contains_key(&Unit::Qsma) && fresh.contains_key(&Unit::FomReference) && fom.exists() {
            let (r, f) = (output::read_backbone(&rom)?, output::read_backbone(&fom)?);
            text.push_str("\n[rom-vs-fom backbone]\n  level  omega_ratio_rom  omega_ratio_fom  rel_diff  D_rom  D_fom\n");
            for (k, (a, c)) in r.iter().zip(&f).enumerate() {
                text.push_str(&format!(
                    "  {:>5}  {:.6}  {:.6}  {:+.3e}  {:.4e}  {:.4e}\n",
                    k + 1,
                    a.0,
                    c.0,
                    a.0 / c.0 - 1.0,
                    a.1,
                    c.1
                ));
            }
        }
        io::write_text(&dir.join("summary.txt"), &text)?;
        (self.log)(&format!("{:<14} written to {}", "report", dir.join("summary.txt").display()));
        Ok(())
    }
}

type Summary = BTreeMap<String, String>;

fn summary<const N: usize>(items: [(&str, String); N]) -> Summary {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn component_summary(c: &ReducedComponent) -> Summary {
    let b = &c.basis;
    summary([
        ("dofs", b.partition.n.to_string()),
        ("boundary_coordinates", b.n_boundary().to_string()),
        ("interface_modes", b.n_interface().to_string()),
        ("normal_modes", b.n_modes().to_string()),
        ("dimension", c.dim().to_string()),
    ])
}

fn direction(p: &PulseConfig) -> Vector3<f64> {
    Vector3::from(p.direction).normalize()
}

#[derive(Serialize, Deserialize)]
struct Scales {
    scale: Vec<LoadScale>,
}

#[derive(Serialize, Deserialize)]
struct RegressMeta {
    n: usize,
    active: Vec<usize>,
    residuals: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SystemDescription {
    support: String,
    thin: String,
    contact: String,
    coefficients: Option<String>,
}

fn write_toml<T: Serialize>(path: &Path, comment: &str, value: &T) -> Result<(), CliError> {
    let text = toml::to_string(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    io::write_text(path, &format!("{comment}\n{text}"))?;
    Ok(())
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        CliError::Solver(jointrom::Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    })
}
