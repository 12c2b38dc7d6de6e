use nalgebra::DVector;

use super::model::FullOrderModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Relative residual tolerance against `max(‖f_ext‖, 1 N)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Maximum number of consecutive load-step halvings after a failed step.
    pub max_halvings: usize,
    /// Reject converged states whose tangent has negative pivots, so load
    /// stepping follows the stable branch instead of jumping past a bifurcation.
    pub require_stable: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 50,
            max_halvings: 8,
            require_stable: true,
        }
    }
}

/// Convergence record of one accepted load step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub load_fraction: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct StaticSolution {
    pub q: DVector<f64>,
    /// Load fraction actually reached (1 unless the observer stopped the path).
    pub load_fraction: f64,
    pub trace: Vec<StepRecord>,
}

/// Solves `f_int(q) = f_ext` by Newton's method with `steps` equal load increments.
pub fn solve_nonlinear_static(
    model: &FullOrderModel,
    f_ext: &DVector<f64>,
    steps: usize,
    opts: &NewtonOptions,
) -> Result<StaticSolution> {
    solve_static_path(model, f_ext, steps, opts, |_, _| Ok(true))
}

/// Load-stepped Newton solve calling `observer(fraction, q)` after every scheduled
/// increment; returning `false` stops the path at that increment.
pub fn solve_static_path(
    model: &FullOrderModel,
    f_ext: &DVector<f64>,
    steps: usize,
    opts: &NewtonOptions,
    mut observer: impl FnMut(f64, &DVector<f64>) -> Result<bool>,
) -> Result<StaticSolution> {
    let n = model.n_dofs();
    if f_ext.len() != n {
        return Err(Error::Dimension {
            what: "external load",
            expected: n,
            got: f_ext.len(),
        });
    }
    let steps = steps.max(1);
    let f_scale = f_ext.norm().max(1.0);
    let mut q = DVector::zeros(n);
    let mut lambda = 0.0;
    let mut trace = Vec::new();
    for s in 1..=steps {
        let target = s as f64 / steps as f64;
        let mut halvings = 0;
        while lambda < target {
            let dl = (target - lambda) / f64::powi(2.0, halvings as i32);
            let trial = if halvings == 0 { target } else { lambda + dl };
            match newton(model, f_ext, trial, &q, f_scale, opts) {
                Ok((q_new, iterations, residual)) => {
                    q = q_new;
                    lambda = trial;
                    trace.push(StepRecord {
                        load_fraction: trial,
                        iterations,
                        residual,
                    });
                    halvings = 0;
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        return Err(match e {
                            Error::Singular { .. } | Error::NewtonDivergence { .. } | Error::ElementInversion { .. } => {
                                Error::NewtonDivergence {
                                    last_converged: lambda,
                                }
                            }
                            other => other,
                        });
                    }
                }
            }
        }
        if !observer(target, &q)? {
            return Ok(StaticSolution {
                q,
                load_fraction: target,
                trace,
            });
        }
    }
    Ok(StaticSolution {
        q,
        load_fraction: 1.0,
        trace,
    })
}

fn newton(
    model: &FullOrderModel,
    f_ext: &DVector<f64>,
    lambda: f64,
    q0: &DVector<f64>,
    f_scale: f64,
    opts: &NewtonOptions,
) -> Result<(DVector<f64>, usize, f64)> {
    let mut q = q0.clone();
    let tol = opts.tol * f_scale;
    let mut last = f64::INFINITY;
    for it in 0..=opts.max_iterations {
        let (f, kt) = model.internal_force_and_tangent(&q)?;
        let r = f - f_ext * lambda;
        let rn = r.norm();
        if !rn.is_finite() {
            break;
        }
        let lu = kt.lu()?;
        if rn <= tol {
            if opts.require_stable && lu.negative_pivots() > 0 {
                break;
            }
            return Ok((q, it, rn));
        }
        if it == opts.max_iterations || (it > 3 && rn > 1e3 * last) {
            break;
        }
        last = rn;
        q -= lu.solve(&r);
    }
    Err(Error::NewtonDivergence {
        last_converged: lambda,
    })
}
