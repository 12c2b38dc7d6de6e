//! Node-based unilateral contact with elastic dry friction.
//!
//! Gaps are ordered pair-major as `(g_x, g_y, g_z)` with `g = u_block − u_panel`;
//! `z` is the contact normal and positive `g_z` means approach. The force on the
//! gap coordinates is `A·(p_t, p_n − p_n0)`, so the preloaded reference state is
//! in equilibrium at zero gap.

use std::fs;
use std::path::Path;

use nalgebra::{DVector, Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Relative tolerance of the Coulomb cone check.
pub const CONE_TOL: f64 = 1e-9;

/// Shape `χ` of the initial pressure distribution, normalized to unit weighted mean.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PressureProfile {
    #[default]
    Uniform,
    /// `exp(−(ξ²/sx² + η²/sy²)/2)` with `ξ, η ∈ [−1, 1]` spanning the patch.
    Smooth { sx: f64, sy: f64 },
    /// Per-node values in pair order.
    Nodal(Vec<f64>),
}

impl PressureProfile {
    /// Values at the nodes, scaled so that `Σ wχ = Σ w`.
    pub fn evaluate(&self, xy: &[[f64; 2]], weights: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            PressureProfile::Uniform => vec![1.0; xy.len()],
            PressureProfile::Smooth { sx, sy } => {
                if !(*sx > 0.0 && *sy > 0.0) {
                    return Err(Error::Parameter("pressure profile widths must be positive".into()));
                }
                let lo = |d: usize| xy.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = |d: usize| xy.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                let norm = |v: f64, d: usize| {
                    let (a, b) = (lo(d), hi(d));
                    if b > a {
                        2.0 * (v - a) / (b - a) - 1.0
                    } else {
                        0.0
                    }
                };
                xy.iter()
                    .map(|p| {
                        let (u, v) = (norm(p[0], 0), norm(p[1], 1));
                        (-0.5 * (u * u / (sx * sx) + v * v / (sy * sy))).exp()
                    })
                    .collect()
            }
            PressureProfile::Nodal(v) => {
                if v.len() != xy.len() {
                    return Err(Error::Dimension {
                        what: "nodal pressure profile",
                        expected: xy.len(),
                        got: v.len(),
                    });
                }
                if v.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                    return Err(Error::Parameter("pressure profile values must be finite and ≥ 0".into()));
                }
                v.clone()
            }
        };
        let area: f64 = weights.iter().sum();
        let mean: f64 = raw.iter().zip(weights).map(|(c, w)| c * w).sum::<f64>() / area;
        if !(mean > 0.0) {
            return Err(Error::Parameter("pressure profile has zero mean".into()));
        }
        Ok(raw.iter().map(|c| c / mean).collect())
    }
}

/// Contact law parameters (MPa, N/mm³, mm).
#[derive(Debug, Clone, PartialEq)]
pub struct ContactParams {
    /// Mean initial pressure `p̄_n0`.
    pub mean_pressure: f64,
    pub normal_stiffness: f64,
    pub friction: f64,
    /// Limit stick distance `g_sl`.
    pub stick_distance: f64,
    pub profile: PressureProfile,
    /// Gaps held at zero, laws bypassed.
    pub tied: bool,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            mean_pressure: 1.2,
            normal_stiffness: 1e4,
            friction: 0.3,
            stick_distance: 1e-4,
            profile: PressureProfile::Uniform,
            tied: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPatch {
    /// `p_n0 = p̄_n0·χ` per node.
    pub p_n0: Vec<f64>,
    pub k_n: f64,
    pub mu: f64,
    pub g_sl: f64,
    /// `k_t = μ p_n0 / g_sl` per node.
    pub k_t: Vec<f64>,
    /// Tributary areas (mm²).
    pub weights: Vec<f64>,
    pub tied: bool,
}

impl ContactPatch {
    pub fn new(params: &ContactParams, xy: &[[f64; 2]], weights: &[f64]) -> Result<Self> {
        if xy.len() != weights.len() {
            return Err(Error::Dimension {
                what: "contact weights",
                expected: xy.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Parameter("contact weights must be positive".into()));
        }
        let p = params;
        if !(p.normal_stiffness > 0.0) || !(p.friction >= 0.0) || !(p.stick_distance > 0.0) || !(p.mean_pressure >= 0.0) {
            return Err(Error::Parameter(
                "contact requires k_n > 0, μ ≥ 0, g_sl > 0 and p̄_n0 ≥ 0".into(),
            ));
        }
        let chi = p.profile.evaluate(xy, weights)?;
        let p_n0: Vec<f64> = chi.iter().map(|c| p.mean_pressure * c).collect();
        let k_t = p_n0.iter().map(|pn| p.friction * pn / p.stick_distance).collect();
        Ok(Self {
            p_n0,
            k_n: p.normal_stiffness,
            mu: p.friction,
            g_sl: p.stick_distance,
            k_t,
            weights: weights.to_vec(),
            tied: p.tied,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dimension of the gap vector.
    pub fn n_gaps(&self) -> usize {
        3 * self.len()
    }

    /// Writes the patch as TOML (pair order of the support's gap coordinates).
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Parameter(e.to_string()))?;
        io::write_text(
            path,
            &format!("# contact patch; p_n0 MPa, k_n N/mm^3, g_sl mm, k_t N/mm^3, weights mm^2\n{text}"),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let patch: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let n = patch.weights.len();
        if patch.p_n0.len() != n || patch.k_t.len() != n {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: "per-node arrays differ in length".into(),
            });
        }
        Ok(patch)
    }
}

/// Relative slack of the stick test on the friction cone.
const STICK_TOL: f64 = 1e-10;

/// `p_n = max(p_n0 + k_n g_n, 0)` per node.
pub fn normal_pressure(patch: &ContactPatch, g_n: &[f64]) -> Vec<f64> {
    patch
        .p_n0
        .iter()
        .zip(g_n)
        .map(|(p0, g)| (p0 + patch.k_n * g).max(0.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stick,
    Slip,
    Separated,
}

/// Result of one tangential update from the committed traction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentialUpdate {
    pub p_t: Vector2<f64>,
    pub regime: Regime,
    /// `∂p_t/∂Δg_t`.
    pub d_dg: Matrix2<f64>,
    /// Unit slip direction (of the elastic trial).
    pub direction: Vector2<f64>,
}

/// Elastic predictor / slip-circle return from `p_t` under increment `Δg_t`.
pub fn tangential_increment(
    p_t: Vector2<f64>,
    dg: Vector2<f64>,
    p_n: f64,
    k_t: f64,
    mu: f64,
    last_direction: Vector2<f64>,
) -> TangentialUpdate {
    if p_n <= 0.0 {
        return TangentialUpdate {
            p_t: Vector2::zeros(),
            regime: Regime::Separated,
            d_dg: Matrix2::zeros(),
            direction: last_direction,
        };
    }
    let trial = p_t + dg * k_t;
    let limit = mu * p_n;
    // a node resting on the cone with no increment sticks; round-off must not flip it to slip
    if trial.norm() <= limit * (1.0 + STICK_TOL) {
        let n = trial.norm();
        return TangentialUpdate {
            p_t: if n > limit { trial * (limit / n) } else { trial },
            regime: Regime::Stick,
            d_dg: Matrix2::identity() * k_t,
            direction: last_direction,
        };
    }
    // radial return: the slip traction points along the elastic trial
    let n = trial.norm();
    let dir = trial / n;
    let d_dg = (Matrix2::identity() - dir * dir.transpose()) * (limit * k_t / n);
    TangentialUpdate {
        p_t: dir * limit,
        regime: Regime::Slip,
        d_dg,
        direction: dir,
    }
}

/// Committed history of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub p_t: Vector2<f64>,
    pub g: [f64; 3],
    pub direction: Vector2<f64>,
    /// Frictional work (N·mm).
    pub work: f64,
    pub regime: Regime,
}

impl Default for NodeState {
    fn default() -> Self {
        Self {
            p_t: Vector2::zeros(),
            g: [0.0; 3],
            direction: Vector2::zeros(),
            work: 0.0,
            regime: Regime::Stick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactState {
    pub nodes: Vec<NodeState>,
}

impl ContactState {
    pub fn new(patch: &ContactPatch) -> Self {
        Self {
            nodes: vec![NodeState::default(); patch.len()],
        }
    }

    /// Total frictional work (N·mm).
    pub fn work(&self) -> f64 {
        self.nodes.iter().map(|n| n.work).sum()
    }

    /// Accepts `g` as the new time level; returns the dissipation increment.
    pub fn commit(&mut self, patch: &ContactPatch, g: &DVector<f64>) -> f64 {
        let eval = evaluate_nodes(patch, self, g);
        let mut total = 0.0;
        for (i, (node, u)) in self.nodes.iter_mut().zip(eval).enumerate() {
            let gi = [g[3 * i], g[3 * i + 1], g[3 * i + 2]];
            let dg = Vector2::new(gi[0] - node.g[0], gi[1] - node.g[1]);
            let mut dw = 0.0;
            if u.regime != Regime::Stick && patch.k_t[i] > 0.0 {
                let slip = dg - (u.p_t - node.p_t) / patch.k_t[i];
                // mean traction over the step, consistent with the trapezoidal work of the
                // integrators; also releases the stored spring energy on lift-off
                dw = (0.5 * (u.p_t + node.p_t).dot(&slip) * patch.weights[i]).max(0.0);
            }
            node.work += dw;
            total += dw;
            node.p_t = u.p_t;
            node.g = gi;
            node.direction = u.direction;
            node.regime = u.regime;
        }
        total
    }

    /// Largest `‖p_t‖ − μ p_n` over nodes for the committed gaps (≤ tolerance when admissible).
    pub fn cone_violation(&self, patch: &ContactPatch) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let pn = (patch.p_n0[i] + patch.k_n * n.g[2]).max(0.0);
                n.p_t.norm() - patch.mu * pn - CONE_TOL * patch.mu * pn.max(1.0)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn evaluate_nodes(patch: &ContactPatch, state: &ContactState, g: &DVector<f64>) -> Vec<TangentialUpdate> {
    let g_n: Vec<f64> = (0..patch.len()).map(|i| g[3 * i + 2]).collect();
    let p_n = normal_pressure(patch, &g_n);
    state
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dg = Vector2::new(g[3 * i] - s.g[0], g[3 * i + 1] - s.g[1]);
            tangential_increment(s.p_t, dg, p_n[i], patch.k_t[i], patch.mu, s.direction)
        })
        .collect()
}

/// Nodal forces on the gap coordinates and their per-node 3×3 tangent blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactForces {
    pub force: DVector<f64>,
    pub tangent: Vec<Matrix3<f64>>,
    pub regimes: Vec<Regime>,
}

/// `f_con,b` for trial gaps `g` relative to the committed `state`.
pub fn contact_nodal_forces(patch: &ContactPatch, state: &ContactState, g: &DVector<f64>) -> Result<ContactForces> {
    let n = patch.len();
    if g.len() != 3 * n || state.nodes.len() != n {
        return Err(Error::Dimension {
            what: "contact gap vector",
            expected: 3 * n,
            got: g.len(),
        });
    }
    if patch.tied {
        return Ok(ContactForces {
            force: DVector::zeros(3 * n),
            tangent: vec![Matrix3::zeros(); n],
            regimes: vec![Regime::Stick; n],
        });
    }
    let updates = evaluate_nodes(patch, state, g);
    let mut force = DVector::zeros(3 * n);
    let mut tangent = Vec::with_capacity(n);
    let mut regimes = Vec::with_capacity(n);
    for (i, u) in updates.iter().enumerate() {
        let w = patch.weights[i];
        let pn_trial = patch.p_n0[i] + patch.k_n * g[3 * i + 2];
        let pn = pn_trial.max(0.0);
        force[3 * i] = w * u.p_t[0];
        force[3 * i + 1] = w * u.p_t[1];
        force[3 * i + 2] = w * (pn - patch.p_n0[i]);
        let mut kt = Matrix3::zeros();
        if pn_trial > 0.0 {
            kt[(2, 2)] = w * patch.k_n;
            for a in 0..2 {
                for b in 0..2 {
                    kt[(a, b)] = w * u.d_dg[(a, b)];
                }
            }
            if u.regime == Regime::Slip {
                // p_t = μ p_n d depends on g_n through p_n
                kt[(0, 2)] = w * patch.mu * patch.k_n * u.direction[0];
                kt[(1, 2)] = w * patch.mu * patch.k_n * u.direction[1];
            }
        }
        tangent.push(kt);
        regimes.push(u.regime);
    }
    Ok(ContactForces { force, tangent, regimes })
}

/// Stored elastic energy of the contact layer at the committed state (N·mm).
pub fn contact_energy(patch: &ContactPatch, state: &ContactState) -> f64 {
    state
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let w = patch.weights[i];
            let gn = s.g[2];
            let pn_trial = patch.p_n0[i] + patch.k_n * gn;
            // ∫ (p_n − p_n0) dg_n
            let normal = if pn_trial > 0.0 {
                0.5 * patch.k_n * gn * gn
            } else {
                let g0 = -patch.p_n0[i] / patch.k_n;
                0.5 * patch.k_n * g0 * g0 - patch.p_n0[i] * (gn - g0)
            };
            let tangential = if patch.k_t[i] > 0.0 {
                0.5 * s.p_t.norm_squared() / patch.k_t[i]
            } else {
                0.0
            };
            w * (normal + tangential)
        })
        .sum()
}
