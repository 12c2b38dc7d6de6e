//! Implicit condensation of the thin-walled region: a cubic polynomial reduced
//! geometric force identified from nonlinear static load cases.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cms::ReducedComponent;
use crate::error::{Error, Result};
use crate::fe::{buckling_analysis, solve_nonlinear_static, solve_static_path, FullOrderModel, NewtonOptions};
use crate::io;
use crate::linalg::pseudo_inverse;

/// Relative threshold below which `‖K T_j‖` marks a rigid-body component mode.
pub const RIGID_MODE_TOL: f64 = 1e-10;
/// Relative singular-value cut-off of the Moore–Penrose inverse of `T`.
pub const PINV_TOL: f64 = 1e-12;

/// Number of signed single-, two- and three-mode load cases for `r` modes.
pub fn load_case_count(r: usize) -> usize {
    (4 * r * r * r + 8 * r - 6 * r * r) / 3
}

/// Quadratic plus cubic coefficients per row for `r` modes.
pub fn unknowns_per_row(r: usize) -> usize {
    (r * r * r + 6 * r * r + 5 * r) / 6
}

/// Load scaling options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions {
    /// Target displacement `q_ref` (mm).
    pub q_ref: f64,
    /// Stress limit `σ_lim` (MPa).
    pub sigma_lim: f64,
    /// Increments of the stress-limited ramp.
    pub increments: usize,
    /// Apply the buckling cap `γ̂ = min(1, γ_crit/2)`.
    pub buckling_cap: bool,
    /// Halvings of the target after a failed nonlinear ramp.
    pub retries: usize,
    pub newton: NewtonOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            q_ref: 3.0,
            sigma_lim: 500.0,
            increments: 10,
            buckling_cap: true,
            retries: 4,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadScale {
    /// Component coordinate index.
    pub mode: usize,
    pub w_hat: f64,
    /// Smallest positive buckling factor over both load signs, if below the cutoff.
    pub gamma_crit: Option<f64>,
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    /// `ŵ γ̂ σ̂`.
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub id: usize,
    /// Component coordinate indices.
    pub modes: Vec<usize>,
    pub signs: Vec<i8>,
    /// Scale vector over all component coordinates.
    pub w: Vec<f64>,
}

/// Enumerates single-, two- and three-mode cases with all sign patterns.
///
/// Cases are grouped by size; within a group mode tuples are lexicographic and
/// sign patterns run `+` before `−`, first mode slowest.
pub fn generate_load_cases(n_coords: usize, scales: &[LoadScale]) -> Vec<LoadCase> {
    let r = scales.len();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    for size in 1..=3.min(r) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            tuples.push(idx.clone());
            // next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == r - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for k in i..size {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
    let mut cases = Vec::with_capacity(load_case_count(r));
    for t in tuples {
        for pattern in 0..(1usize << t.len()) {
            let signs: Vec<i8> = (0..t.len())
                .map(|b| if pattern >> (t.len() - 1 - b) & 1 == 1 { -1 } else { 1 })
                .collect();
            let mut w = vec![0.0; n_coords];
            for (&k, &s) in t.iter().zip(&signs) {
                w[scales[k].mode] = f64::from(s) * scales[k].w;
            }
            cases.push(LoadCase {
                id: cases.len(),
                modes: t.iter().map(|&k| scales[k].mode).collect(),
                signs,
                w,
            });
        }
    }
    cases
}

/// Solved load case: final (possibly shrunk) scales and the projected response `q̃ = T⁺q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub id: usize,
    pub w: DVector<f64>,
    pub q_tilde: DVector<f64>,
    /// Full response on the ungauged thin-region equations.
    pub q: DVector<f64>,
    /// Common shrink factor applied by the multi-mode re-check.
    pub shrink: f64,
}

/// Thin-walled region prepared for static load cases.
///
/// `model` carries the static gauge; loads `K T_j` are formed on the ungauged
/// component equations and restricted to the gauged ones, where the gauge
/// carries no load because `K T_j` is self-equilibrated.
#[derive(Debug, Clone)]
pub struct ThinCondensation {
    pub model: FullOrderModel,
    /// Gauged equation → component equation.
    pub embed: Vec<usize>,
    pub n_component_dofs: usize,
    pub t: DMatrix<f64>,
    pub t_pinv: DMatrix<f64>,
    pub k_red: DMatrix<f64>,
    /// `K T` restricted to the gauged equations, one column per coordinate.
    pub loads: DMatrix<f64>,
    /// Coordinates with `‖K T_j‖ > 0` (not rigid-body).
    pub active: Vec<usize>,
}

impl ThinCondensation {
    /// `component` is the ungauged model the basis was built on; `gauged` differs only in constraints.
    pub fn new(component: &FullOrderModel, gauged: FullOrderModel, reduced: &ReducedComponent) -> Result<Self> {
        let t = reduced.basis.t.clone();
        if t.nrows() != component.n_dofs() {
            return Err(Error::Dimension {
                what: "thin-walled basis rows",
                expected: component.n_dofs(),
                got: t.nrows(),
            });
        }
        let mut embed = vec![usize::MAX; gauged.n_dofs()];
        for n in 0..gauged.mesh().n_nodes() {
            for d in 0..3 {
                if let Some(e) = gauged.dofs().eq(n, d) {
                    embed[e] = component.dofs().eq(n, d).ok_or_else(|| {
                        Error::Parameter(format!("gauged model frees DOF {d} of node {n} that the component fixes"))
                    })?;
                }
            }
        }
        let kt = component.stiffness().mul_dense(&t);
        let norms: Vec<f64> = kt.column_iter().map(|c| c.norm()).collect();
        let top = norms.iter().cloned().fold(0.0, f64::max);
        let active = (0..t.ncols()).filter(|&j| norms[j] > RIGID_MODE_TOL * top).collect();
        let loads = DMatrix::from_fn(embed.len(), t.ncols(), |r, c| kt[(embed[r], c)]);
        Ok(Self {
            t_pinv: pseudo_inverse(&t, PINV_TOL),
            n_component_dofs: component.n_dofs(),
            model: gauged,
            embed,
            k_red: reduced.stiffness.clone(),
            loads,
            active,
            t,
        })
    }

    pub fn n_coords(&self) -> usize {
        self.t.ncols()
    }

    fn load(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.loads * w
    }

    /// Gauged response → component equations.
    pub fn embed_response(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_component_dofs);
        for (g, &e) in self.embed.iter().enumerate() {
            out[e] = q[g];
        }
        out
    }

    /// Load fraction at which the ramp to `f` first reaches `σ_lim` (1 if never),
    /// with the response at the end of the ramp when it completed.
    fn stress_limited_ramp(&self, f: &DVector<f64>, opts: &ScalingOptions) -> Result<(f64, Option<DVector<f64>>)> {
        let mut scale = 1.0;
        for attempt in 0..=opts.retries {
            let mut prev = (0.0, 0.0);
            let mut hit = None;
            let res = solve_static_path(&self.model, &(f * scale), opts.increments, &opts.newton, |s, q| {
                let (sigma, _) = self.model.max_von_mises(q)?;
                if sigma >= opts.sigma_lim {
                    let (s0, g0) = prev;
                    hit = Some(s0 + (opts.sigma_lim - g0) / (sigma - g0) * (s - s0));
                    return Ok(false);
                }
                prev = (s, sigma);
                Ok(true)
            });
            match res {
                Ok(sol) => {
                    return Ok(match hit {
                        Some(s) => (scale * s, None),
                        None => (scale, (scale == 1.0).then_some(sol.q)),
                    })
                }
                Err(Error::NewtonDivergence { .. }) if attempt < opts.retries => scale *= 0.5,
                Err(e) => return Err(e),
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    /// `ŵ_j`, `γ̂_j`, `σ̂_j` for coordinate `j`.
    pub fn scale_single_mode(&self, j: usize, opts: &ScalingOptions) -> Result<LoadScale> {
        let tj = self.t.column(j);
        let w_hat = displacement_scale(opts.q_ref, &tj.into_owned());
        let f = self.loads.column(j) * w_hat;
        let gamma_crit = buckling_analysis(&self.model, &f)?.critical();
        let gamma_hat = if opts.buckling_cap { buckling_scale(gamma_crit) } else { 1.0 };
        let f = f * gamma_hat;
        let (sp, _) = self.stress_limited_ramp(&f, opts)?;
        let (sm, _) = self.stress_limited_ramp(&(-&f), opts)?;
        let sigma_hat = sp.min(sm);
        Ok(LoadScale {
            mode: j,
            w_hat,
            gamma_crit,
            gamma_hat,
            sigma_hat,
            w: w_hat * gamma_hat * sigma_hat,
        })
    }

    /// Scales of all active coordinates, computed in parallel.
    pub fn scale_all(&self, opts: &ScalingOptions) -> Result<Vec<LoadScale>> {
        self.active.par_iter().map(|&j| self.scale_single_mode(j, opts)).collect()
    }

    /// Solves one case; multi-mode cases shrink all scales by a common factor
    /// when the combined load buckles or reaches the stress limit.
    pub fn solve_case(&self, case: &LoadCase, opts: &ScalingOptions) -> Result<CaseResult> {
        let mut w = DVector::from_vec(case.w.clone());
        let mut shrink = 1.0;
        if case.modes.len() > 1 && opts.buckling_cap {
            if let Some(g) = buckling_analysis(&self.model, &self.load(&w))?.positive_factor() {
                if 0.5 * g < 1.0 {
                    shrink *= 0.5 * g;
                    w *= 0.5 * g;
                }
            }
        }
        let f = self.load(&w);
        let (s, q) = self.stress_limited_ramp(&f, opts)?;
        let q = match q {
            Some(q) if s == 1.0 => q,
            _ => {
                shrink *= s;
                w *= s;
                solve_nonlinear_static(&self.model, &self.load(&w), opts.increments, &opts.newton)?.q
            }
        };
        let q = self.embed_response(&q);
        Ok(CaseResult {
            id: case.id,
            q_tilde: &self.t_pinv * &q,
            q,
            w,
            shrink,
        })
    }

    /// Restores a stored response.
    pub fn result_from_response(&self, case: &LoadCase, w: DVector<f64>, q: DVector<f64>) -> Result<CaseResult> {
        if q.len() != self.n_component_dofs || w.len() != self.n_coords() {
            return Err(Error::Dimension {
                what: "stored load-case response",
                expected: self.n_component_dofs,
                got: q.len(),
            });
        }
        let base = DVector::from_vec(case.w.clone());
        let shrink = if base.amax() > 0.0 { w.amax() / base.amax() } else { 1.0 };
        Ok(CaseResult {
            id: case.id,
            q_tilde: &self.t_pinv * &q,
            q,
            w,
            shrink,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub case: LoadCase,
    pub status: CaseStatus,
    /// Final scales after any shrink.
    pub w_final: Option<Vec<f64>>,
    pub file: Option<String>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CampaignManifest {
    pub case: Vec<ManifestEntry>,
}

impl CampaignManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Parameter(e.to_string()))?;
        io::write_text(path, &format!("# load-case campaign; scales are dimensionless modal amplitudes\n{text}"))
    }
}

/// Runs all cases on `workers` threads. With `store`, responses and a manifest are
/// written there and cases already marked done are read back instead of solved.
pub fn run_campaign(
    problem: &ThinCondensation,
    cases: &[LoadCase],
    opts: &ScalingOptions,
    workers: usize,
    store: Option<&Path>,
) -> Result<Vec<CaseResult>> {
    let manifest_path = store.map(|d| d.join("manifest.toml"));
    let mut manifest = match &manifest_path {
        Some(p) if p.exists() => {
            let m = CampaignManifest::load(p)?;
            let same = m.case.len() == cases.len() && m.case.iter().zip(cases).all(|(e, c)| &e.case == c);
            if same {
                m
            } else {
                fresh_manifest(cases)
            }
        }
        _ => fresh_manifest(cases),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let outcomes: Vec<Result<CaseResult>> = pool.install(|| {
        cases
            .par_iter()
            .zip(manifest.case.par_iter())
            .map(|(case, entry)| {
                if let (Some(dir), CaseStatus::Done, Some(file), Some(w)) =
                    (store, entry.status, entry.file.as_ref(), entry.w_final.as_ref())
                {
                    let path = dir.join(file);
                    if path.exists() {
                        let q = io::read_mtx(&path)?.column(0).into_owned();
                        return problem.result_from_response(case, DVector::from_vec(w.clone()), q);
                    }
                }
                let res = problem.solve_case(case, opts)?;
                if let Some(dir) = store {
                    io::write_text(&dir.join(case_file(case.id)), &io::dense_to_mtx(&DMatrix::from_column_slice(res.q.len(), 1, res.q.as_slice())))?;
                }
                Ok(res)
            })
            .collect()
    });
    let mut results = Vec::with_capacity(cases.len());
    let mut first_err = None;
    for (entry, out) in manifest.case.iter_mut().zip(outcomes) {
        match out {
            Ok(r) => {
                entry.status = CaseStatus::Done;
                entry.w_final = Some(r.w.as_slice().to_vec());
                entry.file = Some(case_file(r.id));
                entry.message = None;
                results.push(r);
            }
            Err(e) => {
                entry.status = CaseStatus::Failed;
                entry.message = Some(e.to_string());
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(p) = &manifest_path {
        manifest.save(p)?;
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(results),
    }
}

fn case_file(id: usize) -> String {
    format!("case-{id:05}.mtx")
}

fn fresh_manifest(cases: &[LoadCase]) -> CampaignManifest {
    CampaignManifest {
        case: cases
            .iter()
            .map(|c| ManifestEntry {
                case: c.clone(),
                status: CaseStatus::Pending,
                w_final: None,
                file: None,
                message: None,
            })
            .collect(),
    }
}

/// `f̃_geom,i = Σ β₂ᵢʲᵏ q̃_j q̃_k + Σ β₃ᵢʲᵏˡ q̃_j q̃_k q̃_l` over the active coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomForceCoefficients {
    pub n: usize,
    pub active: Vec<usize>,
    /// `(j, k)` with `j ≤ k`, component coordinate indices.
    pub quadratic: Vec<(usize, usize)>,
    /// `(j, k, l)` with `j ≤ k ≤ l`.
    pub cubic: Vec<(usize, usize, usize)>,
    /// `n × quadratic.len()`; rows of inactive coordinates are zero.
    pub beta2: DMatrix<f64>,
    /// `n × cubic.len()`.
    pub beta3: DMatrix<f64>,
    /// Relative least-squares residual per row (zero for inactive rows).
    pub residuals: Vec<f64>,
}

/// Monomial index sets over `active`.
pub fn monomials(active: &[usize]) -> (Vec<(usize, usize)>, Vec<(usize, usize, usize)>) {
    let r = active.len();
    let mut q = Vec::new();
    let mut c = Vec::new();
    for a in 0..r {
        for b in a..r {
            q.push((active[a], active[b]));
            for d in b..r {
                c.push((active[a], active[b], active[d]));
            }
        }
    }
    c.sort_unstable();
    (q, c)
}

impl GeomForceCoefficients {
    pub fn zeros(n: usize, active: Vec<usize>) -> Self {
        let (quadratic, cubic) = monomials(&active);
        Self {
            n,
            beta2: DMatrix::zeros(n, quadratic.len()),
            beta3: DMatrix::zeros(n, cubic.len()),
            residuals: vec![0.0; n],
            active,
            quadratic,
            cubic,
        }
    }

    fn regressors(&self, q: &DVector<f64>) -> DVector<f64> {
        let nq = self.quadratic.len();
        DVector::from_fn(nq + self.cubic.len(), |t, _| {
            if t < nq {
                let (j, k) = self.quadratic[t];
                q[j] * q[k]
            } else {
                let (j, k, l) = self.cubic[t - nq];
                q[j] * q[k] * q[l]
            }
        })
    }

    pub fn eval(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut f = DVector::zeros(self.n);
        for (t, &(j, k)) in self.quadratic.iter().enumerate() {
            let m = q[j] * q[k];
            if m != 0.0 {
                f.axpy(m, &self.beta2.column(t), 1.0);
            }
        }
        for (t, &(j, k, l)) in self.cubic.iter().enumerate() {
            let m = q[j] * q[k] * q[l];
            if m != 0.0 {
                f.axpy(m, &self.beta3.column(t), 1.0);
            }
        }
        f
    }

    /// Line integral `∫₀¹ f̃_geom(s q̃)·q̃ ds`; the potential of the force when it is conservative.
    pub fn potential(&self, q: &DVector<f64>) -> f64 {
        let mut u = 0.0;
        for (t, &(j, k)) in self.quadratic.iter().enumerate() {
            let m = q[j] * q[k];
            if m != 0.0 {
                u += m * self.beta2.column(t).dot(q) / 3.0;
            }
        }
        for (t, &(j, k, l)) in self.cubic.iter().enumerate() {
            let m = q[j] * q[k] * q[l];
            if m != 0.0 {
                u += m * self.beta3.column(t).dot(q) / 4.0;
            }
        }
        u
    }

    /// Exact `∂f̃_geom/∂q̃`.
    pub fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n, self.n);
        for (t, &(j, k)) in self.quadratic.iter().enumerate() {
            let col = self.beta2.column(t);
            for (var, d) in [(j, q[k]), (k, q[j])] {
                if d != 0.0 {
                    jac.column_mut(var).axpy(d, &col, 1.0);
                }
            }
        }
        for (t, &(j, k, l)) in self.cubic.iter().enumerate() {
            let col = self.beta3.column(t);
            for (var, d) in [(j, q[k] * q[l]), (k, q[j] * q[l]), (l, q[j] * q[k])] {
                if d != 0.0 {
                    jac.column_mut(var).axpy(d, &col, 1.0);
                }
            }
        }
        jac
    }

    /// Flat table `i j k [l] value` (component coordinate indices).
    pub fn to_table(&self) -> String {
        let mut s = String::from("# geometric force coefficients: i j k value (quadratic), i j k l value (cubic)\n");
        for i in 0..self.n {
            for (t, &(j, k)) in self.quadratic.iter().enumerate() {
                let _ = writeln!(s, "{i} {j} {k} {:.17e}", self.beta2[(i, t)]);
            }
            for (t, &(j, k, l)) in self.cubic.iter().enumerate() {
                let _ = writeln!(s, "{i} {j} {k} {l} {:.17e}", self.beta3[(i, t)]);
            }
        }
        s
    }

    pub fn from_table(n: usize, active: Vec<usize>, text: &str, path: PathBuf) -> Result<Self> {
        let mut c = Self::zeros(n, active);
        let err = |m: String| Error::Parse {
            path: path.clone(),
            message: m,
        };
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let tok: Vec<&str> = line.split_whitespace().collect();
            let idx: Vec<usize> = tok[..tok.len() - 1]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|e| err(e.to_string())))
                .collect::<Result<_>>()?;
            let v: f64 = tok[tok.len() - 1].parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
            match idx[..] {
                [i, j, k] if i < n => {
                    let t = c.quadratic.iter().position(|&p| p == (j, k)).ok_or_else(|| err(format!("unknown term {j} {k}")))?;
                    c.beta2[(i, t)] = v;
                }
                [i, j, k, l] if i < n => {
                    let t = c.cubic.iter().position(|&p| p == (j, k, l)).ok_or_else(|| err(format!("unknown term {j} {k} {l}")))?;
                    c.beta3[(i, t)] = v;
                }
                _ => return Err(err(format!("malformed line `{line}`"))),
            }
        }
        Ok(c)
    }
}

/// Least-squares fit of `f̃(q̃) = y` per active row from `(q̃, y)` samples.
pub fn regress_from_samples(n: usize, active: &[usize], samples: &[(DVector<f64>, DVector<f64>)]) -> Result<GeomForceCoefficients> {
    let mut c = GeomForceCoefficients::zeros(n, active.to_vec());
    let nu = c.quadratic.len() + c.cubic.len();
    if samples.len() < nu {
        return Err(Error::RegressorRankDeficient {
            row: active.first().copied().unwrap_or(0),
        });
    }
    let mut phi = DMatrix::zeros(samples.len(), nu);
    for (s, (q, _)) in samples.iter().enumerate() {
        phi.set_row(s, &c.regressors(q).transpose());
    }
    let scale: Vec<f64> = phi.column_iter().map(|col| col.amax().max(f64::MIN_POSITIVE)).collect();
    for (j, &s) in scale.iter().enumerate() {
        phi.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = phi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::RegressorRankDeficient {
            row: active.first().copied().unwrap_or(0),
        });
    }
    let y = DMatrix::from_fn(samples.len(), active.len(), |s, r| samples[s].1[active[r]]);
    let beta = svd.solve(&y, 0.0).map_err(|e| Error::Parameter(e.to_string()))?;
    let fit = &phi * &beta;
    let nq = c.quadratic.len();
    for (r, &i) in active.iter().enumerate() {
        for t in 0..nu {
            let v = beta[(t, r)] / scale[t];
            if t < nq {
                c.beta2[(i, t)] = v;
            } else {
                c.beta3[(i, t - nq)] = v;
            }
        }
        let yn = y.column(r).norm();
        c.residuals[i] = if yn > 0.0 { (fit.column(r) - y.column(r)).norm() / yn } else { 0.0 };
    }
    Ok(c)
}

/// Fits `f̃_geom(T⁺q) = K̃ (w − T⁺q)` over the solved cases.
pub fn regress_coefficients(results: &[CaseResult], k_red: &DMatrix<f64>, active: &[usize]) -> Result<GeomForceCoefficients> {
    let samples: Vec<(DVector<f64>, DVector<f64>)> = results
        .iter()
        .map(|r| (r.q_tilde.clone(), k_red * (&r.w - &r.q_tilde)))
        .collect();
    regress_from_samples(k_red.nrows(), active, &samples)
}

/// `ŵ = q_ref / ‖T_j‖∞` over all free DOFs.
pub fn displacement_scale(q_ref: f64, t_j: &DVector<f64>) -> f64 {
    q_ref / t_j.amax()
}

/// `γ̂ = 0.5 γ_crit` when buckling occurs, 1 otherwise (capped at 1).
pub fn buckling_scale(gamma_crit: Option<f64>) -> f64 {
    gamma_crit.map_or(1.0, |g| (0.5 * g).min(1.0))
}

impl ThinCondensation {
    /// Nonlinear static reference of the single-mode curve `(q̃_j, [K̃(w − q̃)]_j)` at the given scales.
    pub fn single_mode_reference(&self, j: usize, scales: &[f64], opts: &ScalingOptions) -> Result<Vec<(f64, f64)>> {
        scales
            .iter()
            .map(|&s| {
                let mut w = DVector::zeros(self.n_coords());
                w[j] = s;
                let q = solve_nonlinear_static(&self.model, &self.load(&w), opts.increments, &opts.newton)?.q;
                let qt = &self.t_pinv * self.embed_response(&q);
                Ok((qt[j], (&self.k_red * (w - &qt))[j]))
            })
            .collect()
    }

    /// Lowest linear buckling mode under `K T_j` on component equations, scaled to unit max.
    pub fn buckling_mode(&self, j: usize) -> Result<Option<DVector<f64>>> {
        let b = buckling_analysis(&self.model, &self.loads.column(j).into_owned())?;
        let pick = match (&b.positive, &b.negative) {
            (Some(p), Some(n)) => Some(if p.0 <= n.0 { &p.1 } else { &n.1 }),
            (p, n) => p.as_ref().or(n.as_ref()).map(|x| &x.1),
        };
        Ok(pick.map(|phi| {
            let v = self.embed_response(phi);
            let m = v.amax();
            v / m
        }))
    }
}

/// Single-mode force-curve comparison of capped and uncapped load scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct CapStudy {
    pub mode: usize,
    pub capped: LoadScale,
    pub uncapped: LoadScale,
    /// Nonlinear static reference points `(q̃_j, f_j)` in the pre-buckling range.
    pub reference: Vec<(f64, f64)>,
    /// Max deviation relative to the largest reference force.
    pub capped_error: f64,
    pub uncapped_error: f64,
}

/// Regresses coordinate `j` alone with and without the buckling cap and measures both
/// fits against the nonlinear static curve for `|w| ≤ range · γ_crit ŵ` (the capped
/// range when no buckling occurs).
pub fn buckling_cap_study(
    problem: &ThinCondensation,
    j: usize,
    opts: &ScalingOptions,
    range: f64,
    samples: usize,
) -> Result<CapStudy> {
    let fit = |buckling_cap: bool| -> Result<(LoadScale, GeomForceCoefficients)> {
        let o = ScalingOptions { buckling_cap, ..*opts };
        let scale = problem.scale_single_mode(j, &o)?;
        let cases = generate_load_cases(problem.n_coords(), std::slice::from_ref(&scale));
        let results = cases.iter().map(|c| problem.solve_case(c, &o)).collect::<Result<Vec<_>>>()?;
        Ok((scale, regress_coefficients(&results, &problem.k_red, &[j])?))
    };
    let (capped, c_fit) = fit(true)?;
    let (uncapped, u_fit) = fit(false)?;
    let n = samples.max(2);
    let w_max = capped.gamma_crit.map_or(capped.w, |g| range * g * capped.w_hat);
    let ws: Vec<f64> = (0..n).map(|k| w_max * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect();
    let reference = problem.single_mode_reference(j, &ws, opts)?;
    let top = reference.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let err = |c: &GeomForceCoefficients| {
        reference
            .iter()
            .map(|&(q, f)| {
                let mut qt = DVector::zeros(problem.n_coords());
                qt[j] = q;
                (c.eval(&qt)[j] - f).abs()
            })
            .fold(0.0, f64::max)
            / top
    };
    Ok(CapStudy {
        mode: j,
        capped_error: err(&c_fit),
        uncapped_error: err(&u_fit),
        capped,
        uncapped,
        reference,
    })
}
