//! Pipeline configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use jointrom::components::ReductionOptions;
use jointrom::condensation::ScalingOptions;
use jointrom::contact::{ContactParams, PressureProfile};
use jointrom::fe::{BenchmarkParams, Material, NewtonOptions};
use jointrom::solvers::{GeometricScope, QsmaOptions, SolverOptions};
use serde::{Deserialize, Serialize};

/// Panel and support block dimensions (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub thickness: f64,
    pub width: f64,
    pub free_length: f64,
    pub clamp_length: f64,
    pub block_height: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let p = BenchmarkParams::default();
        Self {
            thickness: p.thickness,
            width: p.width,
            free_length: p.free_length,
            clamp_length: p.clamp_length,
            block_height: p.block_height,
        }
    }
}

/// Element counts and grading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub nx_free: usize,
    pub nx_clamp: usize,
    pub ny: usize,
    pub nz: usize,
    pub nz_block: usize,
    pub interface_rows: usize,
    pub grading_ratio: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let p = BenchmarkParams::default();
        Self {
            nx_free: p.nx_free,
            nx_clamp: p.nx_clamp,
            ny: p.ny,
            nz: p.nz,
            nz_block: p.nz_block,
            interface_rows: p.interface_rows,
            grading_ratio: p.grading_ratio,
        }
    }
}

/// Linear elastic material: E in MPa, density in kg/mm³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let m = Material::steel();
        Self {
            youngs_modulus: m.youngs_modulus,
            poisson_ratio: m.poisson_ratio,
            density: m.density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Polynomial degree P of the interface functions.
    pub degree: usize,
    /// Interface columns M_Γ.
    pub interface_modes: usize,
    /// Support normal modes M⁽¹⁾.
    pub support_modes: usize,
    /// Thin-walled normal modes M.
    pub thin_modes: usize,
    pub symmetric: bool,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        let r = ReductionOptions::default();
        Self {
            degree: r.degree,
            interface_modes: r.interface_modes,
            support_modes: r.support_modes,
            thin_modes: r.thin_modes,
            symmetric: r.symmetric,
        }
    }
}

/// Load scaling of the condensation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    /// Target displacement q_ref (mm).
    pub q_ref: f64,
    /// Stress limit σ_lim (MPa).
    pub sigma_lim: f64,
    pub increments: usize,
    pub buckling_cap: bool,
    pub retries: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        let s = ScalingOptions::default();
        Self {
            q_ref: s.q_ref,
            sigma_lim: s.sigma_lim,
            increments: s.increments,
            buckling_cap: s.buckling_cap,
            retries: s.retries,
        }
    }
}

/// Shape of the initial pressure distribution χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    #[default]
    Uniform,
    Smooth,
    /// One value per contact node, read from `profile_file`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// Mean initial pressure p̄_n0 (MPa).
    pub mean_pressure: f64,
    /// Normal penalty k_n (N/mm³).
    pub normal_stiffness: f64,
    /// Friction coefficient μ.
    pub friction: f64,
    /// Limit stick distance g_sl (mm).
    pub stick_distance: f64,
    pub tied: bool,
    pub profile: ProfileKind,
    /// Gaussian widths for `profile = "smooth"` (fractions of the patch half-extent).
    pub profile_sx: f64,
    pub profile_sy: f64,
    /// Whitespace-separated nodal values for `profile = "file"`.
    pub profile_file: Option<PathBuf>,
}

impl Default for ContactConfig {
    fn default() -> Self {
        let c = ContactParams::default();
        Self {
            mean_pressure: c.mean_pressure,
            normal_stiffness: c.normal_stiffness,
            friction: c.friction,
            stick_distance: c.stick_distance,
            tied: c.tied,
            profile: ProfileKind::Uniform,
            profile_sx: 1.0,
            profile_sy: 1.0,
            profile_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Include the reduced geometric force (bending–stretching coupling).
    pub geometric: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { geometric: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QsmaVariant {
    #[default]
    Hysteresis,
    InitialLoading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsmaConfig {
    /// Mode number k (1 = fundamental symmetric mode).
    pub mode: usize,
    /// Linear panel-centre amplitudes per level, as fractions of the thickness.
    pub amplitudes: Vec<f64>,
    pub variant: QsmaVariant,
    pub steps_per_cycle: usize,
    pub max_cycles: usize,
    pub closure_tolerance: f64,
    /// Contact node indices recorded in the hysteresis traces.
    pub trace_nodes: Vec<usize>,
}

impl Default for QsmaConfig {
    fn default() -> Self {
        let q = QsmaOptions::default();
        Self {
            mode: 1,
            amplitudes: vec![0.05, 0.2, 0.4, 0.6, 0.8, 1.0],
            variant: QsmaVariant::Hysteresis,
            steps_per_cycle: q.steps_per_cycle,
            max_cycles: q.max_cycles,
            closure_tolerance: q.closure_tolerance,
            trace_nodes: Vec::new(),
        }
    }
}

/// Single-period sine pulse of base acceleration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub name: String,
    /// Acceleration amplitude A (mm/s²).
    pub amplitude: f64,
    /// Pulse duration as a fraction of the second symmetric linear period.
    pub duration_factor: f64,
    /// Steps per pulse duration (Δt = T / steps).
    pub steps_per_duration: usize,
    /// Simulated time in fundamental linear periods.
    pub fundamental_periods: f64,
    /// Direction of the base acceleration.
    pub direction: [f64; 3],
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            name: "pulse".into(),
            amplitude: 1e5,
            duration_factor: 0.6,
            steps_per_duration: 1000,
            fundamental_periods: 10.0,
            direction: [0.0, 0.0, 1.0],
        }
    }
}

/// Full-order reference runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FomConfig {
    pub qsma: bool,
    pub transient: bool,
    /// Elements with the nonlinear strain measure when `model.geometric` is set.
    pub geometric_scope: GeometricScope,
}

impl Default for FomConfig {
    fn default() -> Self {
        Self {
            qsma: true,
            transient: false,
            geometric_scope: GeometricScope::ThinOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative Newton residual tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_bisections: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            max_bisections: s.max_bisections,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Campaign threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub geometry: GeometryConfig,
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub reduction: ReductionConfig,
    pub scaling: ScalingConfig,
    pub contact: ContactConfig,
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub qsma: QsmaConfig,
    pub pulse: Vec<PulseConfig>,
    pub fom_reference: FomConfig,
    pub output: OutputConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            mesh: MeshConfig::default(),
            material: MaterialConfig::default(),
            reduction: ReductionConfig::default(),
            scaling: ScalingConfig::default(),
            contact: ContactConfig::default(),
            model: ModelConfig::default(),
            solver: SolverConfig::default(),
            qsma: QsmaConfig::default(),
            pulse: vec![
                PulseConfig {
                    name: "low".into(),
                    amplitude: 1e6,
                    ..PulseConfig::default()
                },
                PulseConfig {
                    name: "high".into(),
                    amplitude: 1e8,
                    ..PulseConfig::default()
                },
            ],
            fom_reference: FomConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses and validates; relative paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(f) = &cfg.contact.profile_file {
            if f.is_relative() {
                cfg.contact.profile_file = Some(base.join(f));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// All violations at once.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive, got {v}"));
            }
        };
        let g = &self.geometry;
        positive("geometry.thickness", g.thickness);
        positive("geometry.width", g.width);
        positive("geometry.free_length", g.free_length);
        positive("geometry.clamp_length", g.clamp_length);
        positive("geometry.block_height", g.block_height);
        positive("mesh.grading_ratio", self.mesh.grading_ratio);
        positive("material.youngs_modulus", self.material.youngs_modulus);
        positive("material.density", self.material.density);
        positive("scaling.q_ref", self.scaling.q_ref);
        positive("scaling.sigma_lim", self.scaling.sigma_lim);
        positive("contact.normal_stiffness", self.contact.normal_stiffness);
        positive("contact.stick_distance", self.contact.stick_distance);
        positive("solver.tolerance", self.solver.tolerance);
        positive("qsma.closure_tolerance", self.qsma.closure_tolerance);
        for (k, a) in self.qsma.amplitudes.iter().enumerate() {
            positive(&format!("qsma.amplitudes[{k}]"), *a);
        }
        for (k, p) in self.pulse.iter().enumerate() {
            positive(&format!("pulse[{k}].duration_factor"), p.duration_factor);
            positive(&format!("pulse[{k}].fundamental_periods"), p.fundamental_periods);
        }
        if self.contact.profile == ProfileKind::Smooth {
            positive("contact.profile_sx", self.contact.profile_sx);
            positive("contact.profile_sy", self.contact.profile_sy);
        }
        let nu = self.material.poisson_ratio;
        if !(nu > -1.0 && nu < 0.5) {
            errs.push(format!("material.poisson_ratio must lie in (-1, 0.5), got {nu}"));
        }
        if !(self.contact.mean_pressure >= 0.0 && self.contact.mean_pressure.is_finite()) {
            errs.push(format!("contact.mean_pressure must be ≥ 0, got {}", self.contact.mean_pressure));
        }
        if !(self.contact.friction >= 0.0 && self.contact.friction.is_finite()) {
            errs.push(format!("contact.friction must be ≥ 0, got {}", self.contact.friction));
        }
        for (name, v) in [
            ("mesh.nx_free", self.mesh.nx_free),
            ("mesh.nx_clamp", self.mesh.nx_clamp),
            ("mesh.ny", self.mesh.ny),
            ("mesh.nz", self.mesh.nz),
            ("mesh.nz_block", self.mesh.nz_block),
            ("mesh.interface_rows", self.mesh.interface_rows),
            ("reduction.interface_modes", self.reduction.interface_modes),
            ("scaling.increments", self.scaling.increments),
            ("solver.max_iterations", self.solver.max_iterations),
            ("qsma.mode", self.qsma.mode),
            ("qsma.steps_per_cycle", self.qsma.steps_per_cycle),
            ("qsma.max_cycles", self.qsma.max_cycles),
        ] {
            if v < 1 {
                errs.push(format!("{name} must be at least 1"));
            }
        }
        if !self.mesh.ny.is_multiple_of(2) {
            errs.push(format!("mesh.ny must be even, got {}", self.mesh.ny));
        }
        if self.mesh.interface_rows + 2 > self.mesh.nx_free {
            errs.push("mesh.interface_rows must leave at least two thin-walled element rows".into());
        }
        if self.qsma.amplitudes.is_empty() {
            errs.push("qsma.amplitudes must not be empty".into());
        }
        let mut names: Vec<&str> = self.pulse.iter().map(|p| p.name.as_str()).collect();
        if names.iter().any(|n| n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')) {
            errs.push("pulse names must be non-empty and use only [A-Za-z0-9_-]".into());
        }
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            errs.push("pulse names must be unique".into());
        }
        for (k, p) in self.pulse.iter().enumerate() {
            if !p.amplitude.is_finite() {
                errs.push(format!("pulse[{k}].amplitude must be finite"));
            }
            if p.steps_per_duration < 1 {
                errs.push(format!("pulse[{k}].steps_per_duration must be at least 1"));
            }
            if p.direction.iter().all(|d| *d == 0.0) || p.direction.iter().any(|d| !d.is_finite()) {
                errs.push(format!("pulse[{k}].direction must be a finite non-zero vector"));
            }
        }
        if self.contact.profile == ProfileKind::File {
            match &self.contact.profile_file {
                None => errs.push("contact.profile = \"file\" requires contact.profile_file".into()),
                Some(f) if !f.is_file() => errs.push(format!("contact.profile_file {} does not exist", f.display())),
                Some(_) => {}
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn benchmark_params(&self) -> BenchmarkParams {
        let (g, m) = (&self.geometry, &self.mesh);
        BenchmarkParams {
            thickness: g.thickness,
            width: g.width,
            free_length: g.free_length,
            clamp_length: g.clamp_length,
            block_height: g.block_height,
            nx_free: m.nx_free,
            nx_clamp: m.nx_clamp,
            ny: m.ny,
            nz: m.nz,
            nz_block: m.nz_block,
            interface_rows: m.interface_rows,
            grading_ratio: m.grading_ratio,
        }
    }

    pub fn material(&self) -> jointrom::Result<Material> {
        let m = &self.material;
        Material::new(m.youngs_modulus, m.poisson_ratio, m.density)
    }

    pub fn reduction(&self) -> ReductionOptions {
        let r = &self.reduction;
        ReductionOptions {
            degree: r.degree,
            interface_modes: r.interface_modes,
            support_modes: r.support_modes,
            thin_modes: r.thin_modes,
            symmetric: r.symmetric,
            support_band_hz: None,
        }
    }

    pub fn scaling(&self) -> ScalingOptions {
        let s = &self.scaling;
        ScalingOptions {
            q_ref: s.q_ref,
            sigma_lim: s.sigma_lim,
            increments: s.increments,
            buckling_cap: s.buckling_cap,
            retries: s.retries,
            newton: NewtonOptions::default(),
        }
    }

    pub fn contact(&self) -> jointrom::Result<ContactParams> {
        let c = &self.contact;
        let profile = match c.profile {
            ProfileKind::Uniform => PressureProfile::Uniform,
            ProfileKind::Smooth => PressureProfile::Smooth {
                sx: c.profile_sx,
                sy: c.profile_sy,
            },
            ProfileKind::File => {
                let path = c
                    .profile_file
                    .as_ref()
                    .ok_or_else(|| jointrom::Error::Parameter("profile file missing".into()))?;
                let text = fs::read_to_string(path)?;
                let values = text
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>().map_err(|e| jointrom::Error::Parse {
                            path: path.clone(),
                            message: e.to_string(),
                        })
                    })
                    .collect::<jointrom::Result<Vec<f64>>>()?;
                PressureProfile::Nodal(values)
            }
        };
        Ok(ContactParams {
            mean_pressure: c.mean_pressure,
            normal_stiffness: c.normal_stiffness,
            friction: c.friction,
            stick_distance: c.stick_distance,
            profile,
            tied: c.tied,
        })
    }

    pub fn solver(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            max_bisections: s.max_bisections,
        }
    }

    pub fn qsma(&self) -> QsmaOptions {
        let q = &self.qsma;
        QsmaOptions {
            steps_per_cycle: q.steps_per_cycle,
            max_cycles: q.max_cycles,
            closure_tolerance: q.closure_tolerance,
            newton: self.solver(),
            trace_nodes: q.trace_nodes.clone(),
        }
    }

    pub fn workers(&self) -> usize {
        match self.output.workers {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            n => n,
        }
    }
}
