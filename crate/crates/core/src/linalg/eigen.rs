//! Generalized symmetric eigenproblems `K φ = ω² M φ`.
//!
//! Small or dense problems go through a Cholesky reduction of `M` and a dense
//! symmetric eigen-decomposition. Banded problems use shift-invert Lanczos with
//! full M-reorthogonalization, growing the Krylov space until every requested
//! pair meets the residual tolerance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::band::{BandLu, BandMatrix};
use super::matrix::SysMatrix;
use crate::error::{Error, Result};

/// Residual tolerance `‖(K − λM)φ‖ ≤ tol · ‖Kφ‖` accepted for converged pairs.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Backward-error acceptance relative to `(‖K‖ + |λ|‖M‖)‖φ‖`.
const BACKWARD_TOL: f64 = 1e-12;

/// Dense fallback threshold for banded input.
const DENSE_LIMIT: usize = 120;

/// Mass-normalized eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct Modes {
    /// `λ_j = ω_j²`.
    pub eigenvalues: Vec<f64>,
    /// Mass-normalized shapes, one per column.
    pub shapes: DMatrix<f64>,
}

impl Modes {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Angular frequencies in rad/s; round-off negatives clamp to zero.
    pub fn omegas(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect()
    }

    pub fn shape(&self, j: usize) -> DVector<f64> {
        self.shapes.column(j).into_owned()
    }

    /// Keeps only the pairs whose index passes `keep`, preserving order.
    pub fn retain(&mut self, mut keep: impl FnMut(usize, &DVector<f64>) -> bool) {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&j| keep(j, &self.shapes.column(j).into_owned()))
            .collect();
        self.eigenvalues = idx.iter().map(|&j| self.eigenvalues[j]).collect();
        self.shapes = self.shapes.select_columns(&idx);
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.eigenvalues.truncate(n);
            self.shapes = self.shapes.columns(0, n).into_owned();
        }
    }
}

/// Lowest `n_modes` eigenpairs of `(K, M)`.
pub fn solve_eigen(k: &SysMatrix, m: &SysMatrix, n_modes: usize) -> Result<Modes> {
    let n = k.n();
    if m.n() != n {
        return Err(Error::Dimension {
            what: "mass matrix",
            expected: n,
            got: m.n(),
        });
    }
    if n_modes > n {
        return Err(Error::Parameter(format!(
            "requested {n_modes} modes from a problem of dimension {n}"
        )));
    }
    if n_modes == 0 {
        return Ok(Modes {
            eigenvalues: vec![],
            shapes: DMatrix::zeros(n, 0),
        });
    }
    match (k, m) {
        (SysMatrix::Band(kb), SysMatrix::Band(mb)) if n > DENSE_LIMIT => {
            lanczos_shift_invert(kb, mb, n_modes)
        }
        _ => {
            let mut modes = dense_generalized(&k.to_dense(), &m.to_dense())?;
            modes.truncate(n_modes);
            Ok(modes)
        }
    }
}

/// All eigenpairs of a dense symmetric pencil with `M` positive definite.
pub fn dense_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Modes> {
    let n = k.nrows();
    let chol = nalgebra::Cholesky::new(symmetrized(m)).ok_or_else(|| {
        Error::NotPositiveDefinite("mass matrix in generalized eigenproblem".into())
    })?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let linv_k = l
        .solve_lower_triangular(&symmetrized(k))
        .expect("Cholesky factor is nonsingular");
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .expect("Cholesky factor is nonsingular");
    let eig = SymmetricEigen::new(symmetrized(&c));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = l.transpose();
    let mut shapes = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (c_out, &j) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(j).into_owned();
        let phi = lt
            .solve_upper_triangular(&y)
            .expect("Cholesky factor is nonsingular");
        shapes.set_column(c_out, &phi);
        eigenvalues.push(eig.eigenvalues[j]);
    }
    let mut modes = Modes {
        eigenvalues,
        shapes,
    };
    fix_signs(&mut modes);
    Ok(modes)
}

fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Makes the largest-magnitude entry of each shape positive so results are deterministic.
fn fix_signs(modes: &mut Modes) {
    for j in 0..modes.len() {
        let col = modes.shapes.column(j);
        let imax = col.iamax();
        if col[imax] < 0.0 {
            modes.shapes.column_mut(j).neg_mut();
        }
    }
}

fn start_vector(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        let x = i as f64;
        1.0 + 0.5 * (1.7 * x).sin() + 0.25 * (0.37 * x * x).cos()
    })
}

/// Shift-invert Lanczos for banded symmetric `K ≥ 0`, `M > 0`.
pub fn lanczos_shift_invert(k: &BandMatrix, m: &BandMatrix, n_modes: usize) -> Result<Modes> {
    let n = k.n();
    let (lu, shift) = match k.lu() {
        Ok(lu) => (lu, 0.0),
        Err(Error::Singular { .. }) => {
            let kd = k.diagonal();
            let md = m.diagonal();
            let ratio = kd
                .iter()
                .zip(md.iter())
                .filter(|(_, &mm)| mm > 0.0)
                .map(|(&kk, &mm)| kk / mm)
                .sum::<f64>()
                / n as f64;
            let shift = -1e-6 * ratio.max(1.0);
            let mut a = k.clone();
            a.add_scaled(-shift, m);
            (a.lu()?, shift)
        }
        Err(e) => return Err(e),
    };

    let mut steps = (2 * n_modes + 30).min(n);
    loop {
        let modes = lanczos_run(k, m, &lu, shift, n_modes, steps)?;
        if let Some(modes) = modes {
            return Ok(modes);
        }
        if steps == n {
            return Err(Error::EigenNonConvergence(format!(
                "{n_modes} pairs not converged with a full Krylov space of {n}"
            )));
        }
        steps = (steps * 2).min(n);
    }
}

fn lanczos_run(
    k: &BandMatrix,
    m: &BandMatrix,
    lu: &BandLu,
    shift: f64,
    n_modes: usize,
    steps: usize,
) -> Result<Option<Modes>> {
    let n = k.n();
    let mut q = DMatrix::<f64>::zeros(n, steps);
    let mut mq = DMatrix::<f64>::zeros(n, steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);

    let mut v = start_vector(n);
    let mut mv = m.mul_vec(&v);
    let norm = v.dot(&mv).sqrt();
    v /= norm;
    mv /= norm;
    let mut used = 0;
    for j in 0..steps {
        q.set_column(j, &v);
        mq.set_column(j, &mv);
        used = j + 1;
        let mut w = lu.solve(&mv);
        let a = mv.dot(&w);
        alpha.push(a);
        // two passes of full reorthogonalization in the M inner product
        for _ in 0..2 {
            let coeffs = mq.columns(0, used).transpose() * &w;
            w -= q.columns(0, used) * coeffs;
        }
        let mw = m.mul_vec(&w);
        let b = w.dot(&mw).max(0.0).sqrt();
        if j + 1 == steps {
            break;
        }
        if b <= 1e-12 * a.abs().max(f64::MIN_POSITIVE) {
            // invariant subspace: continue with a fresh direction
            let mut r = DVector::from_fn(n, |i, _| ((i * 7919 + j * 104729) % 1009) as f64 - 504.0);
            for _ in 0..2 {
                let coeffs = mq.columns(0, used).transpose() * &r;
                r -= q.columns(0, used) * coeffs;
            }
            let mr = m.mul_vec(&r);
            let nr = r.dot(&mr).sqrt();
            if nr <= f64::EPSILON {
                break;
            }
            beta.push(0.0);
            v = r / nr;
            mv = mr / nr;
        } else {
            beta.push(b);
            v = w / b;
            mv = mw / b;
        }
    }

    let t = DMatrix::from_fn(used, used, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..used).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if order.len() < n_modes {
        return Ok(None);
    }
    let qs = q.columns(0, used);
    let mut shapes = DMatrix::zeros(n, n_modes);
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let k_norm = k.max_abs() * (k.lower() + k.upper() + 1) as f64;
    let m_norm = m.max_abs() * (m.lower() + m.upper() + 1) as f64;
    for (c, &i) in order.iter().take(n_modes).enumerate() {
        let lambda = shift + 1.0 / eig.eigenvalues[i];
        let mut phi = qs * eig.eigenvectors.column(i);
        let mphi = m.mul_vec(&phi);
        phi /= phi.dot(&mphi).sqrt();
        let kphi = k.mul_vec(&phi);
        let mphi = m.mul_vec(&phi);
        let res = (&kphi - &mphi * lambda).norm();
        // Relative residual, or backward error for modes far below the stiffest ones
        // where round-off in `Kφ` alone exceeds the relative criterion.
        let scale = kphi
            .norm()
            .max(lambda.abs() * mphi.norm())
            .max(shift.abs() * mphi.norm());
        let backward = (k_norm + lambda.abs() * m_norm) * phi.norm();
        if res > EIGEN_RESIDUAL_TOL * scale && res > BACKWARD_TOL * backward {
            return Ok(None);
        }
        shapes.set_column(c, &phi);
        eigenvalues.push(lambda);
    }
    let mut modes = Modes {
        eigenvalues,
        shapes,
    };
    sort_modes(&mut modes);
    fix_signs(&mut modes);
    Ok(Some(modes))
}

/// Extreme eigenpairs of `A φ = μ B φ` with `B` symmetric positive definite.
///
/// Returns `(μ_min, φ_min)` and `(μ_max, φ_max)` with `φᵀBφ = 1`. The operator
/// `B⁻¹A` is applied through `b_lu`; the Krylov space grows until both extremes
/// meet the residual tolerance.
pub fn lanczos_pencil_extremes(
    a: &BandMatrix,
    b: &BandMatrix,
    b_lu: &BandLu,
) -> Result<((f64, DVector<f64>), (f64, DVector<f64>))> {
    let n = a.n();
    let a_norm = a.max_abs() * (a.lower() + a.upper() + 1) as f64;
    let b_norm = b.max_abs() * (b.lower() + b.upper() + 1) as f64;
    let mut steps = 60.min(n);
    loop {
        let mut q = DMatrix::<f64>::zeros(n, steps);
        let mut bq = DMatrix::<f64>::zeros(n, steps);
        let mut alpha = Vec::with_capacity(steps);
        let mut beta = Vec::with_capacity(steps);
        let mut v = start_vector(n);
        let mut bv = b.mul_vec(&v);
        let nv = v.dot(&bv).sqrt();
        v /= nv;
        bv /= nv;
        let mut used = 0;
        for j in 0..steps {
            q.set_column(j, &v);
            bq.set_column(j, &bv);
            used = j + 1;
            let mut w = b_lu.solve(&a.mul_vec(&v));
            alpha.push(bv.dot(&w));
            for _ in 0..2 {
                let c = bq.columns(0, used).transpose() * &w;
                w -= q.columns(0, used) * c;
            }
            let bw = b.mul_vec(&w);
            let nb = w.dot(&bw).max(0.0).sqrt();
            if j + 1 == steps || nb <= 1e-14 * alpha[j].abs().max(f64::MIN_POSITIVE) {
                break;
            }
            beta.push(nb);
            v = w / nb;
            bv = bw / nb;
        }
        let t = DMatrix::from_fn(used, used, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let qs = q.columns(0, used);
        let pair = |i: usize| -> (f64, DVector<f64>, bool) {
            let mu = eig.eigenvalues[i];
            let mut phi = qs * eig.eigenvectors.column(i);
            let bphi = b.mul_vec(&phi);
            phi /= phi.dot(&bphi).sqrt();
            let bphi = b.mul_vec(&phi);
            let aphi = a.mul_vec(&phi);
            let res = (&aphi - &bphi * mu).norm();
            let ok = res <= EIGEN_RESIDUAL_TOL * aphi.norm().max(mu.abs() * bphi.norm())
                || res <= BACKWARD_TOL * (a_norm + mu.abs() * b_norm) * phi.norm();
            (mu, phi, ok)
        };
        let imin = eig.eigenvalues.argmin().0;
        let imax = eig.eigenvalues.argmax().0;
        let (lo, hi) = (pair(imin), pair(imax));
        if lo.2 && hi.2 {
            return Ok(((lo.0, lo.1), (hi.0, hi.1)));
        }
        if used < steps || steps == n {
            return Err(Error::EigenNonConvergence(format!(
                "extreme pencil eigenpairs not converged with a Krylov space of {used}"
            )));
        }
        steps = (steps * 2).min(n);
    }
}

fn sort_modes(modes: &mut Modes) {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes.eigenvalues[a].total_cmp(&modes.eigenvalues[b]));
    modes.eigenvalues = order.iter().map(|&j| modes.eigenvalues[j]).collect();
    modes.shapes = modes.shapes.select_columns(&order);
}
