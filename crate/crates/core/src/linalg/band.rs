//! Banded storage and an LU factorization without pivoting.
//!
//! Finite-element operators numbered lexicographically by grid index have a
//! narrow band, so a band LU is far cheaper than dense elimination. Pivoting is
//! skipped: stiffness-like matrices are diagonally dominant enough in practice,
//! and a vanishing pivot is reported as [`Error::Singular`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square matrix stored row-wise within `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn symmetric_zeros(n: usize, half_bandwidth: usize) -> Self {
        Self::zeros(n, half_bandwidth, half_bandwidth)
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let (mut lower, mut upper) = (0, 0);
        for j in 0..n {
            for i in 0..n {
                if a[(i, j)] != 0.0 {
                    if i > j {
                        lower = lower.max(i - j);
                    } else {
                        upper = upper.max(j - i);
                    }
                }
            }
        }
        let mut b = Self::zeros(n, lower, upper);
        for i in 0..n {
            for j in b.row_range(i) {
                b.set(i, j, a[(i, j)]);
            }
        }
        b
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn lower(&self) -> usize {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> usize {
        self.upper
    }

    #[inline]
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    /// Column range stored for row `i`.
    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.in_band(i, j), "({i},{j}) outside band");
        i * self.width() + (j + self.lower - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] += v;
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Returns a copy widened to at least the given bandwidths.
    pub fn widened(&self, lower: usize, upper: usize) -> Self {
        if lower <= self.lower && upper <= self.upper {
            return self.clone();
        }
        let mut b = Self::zeros(self.n, lower.max(self.lower), upper.max(self.upper));
        for i in 0..self.n {
            for j in self.row_range(i) {
                b.set(i, j, self.get(i, j));
            }
        }
        b
    }

    /// `self += alpha * other`, widening as needed.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandMatrix) {
        assert_eq!(self.n, other.n);
        if other.lower > self.lower || other.upper > self.upper {
            *self = self.widened(other.lower, other.upper);
        }
        for i in 0..self.n {
            for j in other.row_range(i) {
                self.add(i, j, alpha * other.get(i, j));
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let base = i * self.width() + self.lower - i;
            let mut s = 0.0;
            for j in self.row_range(i) {
                s += self.data[base + j] * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in self.row_range(i) {
                y[j] += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n);
        let mut y = DMatrix::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            let col = self.mul_vec(&x.column(c).into_owned());
            y.set_column(c, &col);
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.row_range(i) {
                a[(i, j)] = self.get(i, j);
            }
        }
        a
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.get(i, i)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in self.row_range(i) {
                if j > i {
                    worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }

    /// Principal submatrix on an increasing index set.
    pub fn submatrix(&self, idx: &[usize]) -> BandMatrix {
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let m = idx.len();
        let (mut lower, mut upper) = (0usize, 0usize);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                if self.in_band(i, j) && self.get(i, j) != 0.0 {
                    if r > c {
                        lower = lower.max(r - c);
                    } else {
                        upper = upper.max(c - r);
                    }
                }
            }
        }
        let mut b = BandMatrix::zeros(m, lower, upper);
        for (r, &i) in idx.iter().enumerate() {
            for c in b.row_range(r) {
                b.set(r, c, self.get(i, idx[c]));
            }
        }
        b
    }

    /// Rectangular block `self[rows, cols]` as a dense matrix.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.get(rows[r], cols[c]))
    }

    pub fn lu(&self) -> Result<BandLu> {
        BandLu::factor(self.clone())
    }
}

/// In-place band LU factors `A = L U` with unit lower `L`.
#[derive(Debug, Clone)]
pub struct BandLu {
    f: BandMatrix,
}

impl BandLu {
    pub fn factor(mut a: BandMatrix) -> Result<Self> {
        let n = a.n;
        let scale = (0..n).fold(0.0_f64, |m, i| m.max(a.get(i, i).abs()));
        let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let w = a.width();
        let (kl, ku) = (a.lower, a.upper);
        for k in 0..n {
            let pivot = a.data[k * w + kl];
            if !(pivot.abs() > tiny) {
                return Err(Error::Singular { row: k });
            }
            let i_end = (k + kl + 1).min(n);
            let j_end = (k + ku + 1).min(n);
            for i in (k + 1)..i_end {
                let ik = i * w + (k + kl - i);
                let l = a.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                a.data[ik] = l;
                let row_i = i * w + kl - i;
                let row_k = k * w + kl - k;
                for j in (k + 1)..j_end {
                    a.data[row_i + j] -= l * a.data[row_k + j];
                }
            }
        }
        Ok(Self { f: a })
    }

    pub fn n(&self) -> usize {
        self.f.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let f = &self.f;
        let n = f.n;
        let w = f.width();
        for i in 0..n {
            let base = i * w + f.lower - i;
            let mut s = x[i];
            for j in i.saturating_sub(f.lower)..i {
                s -= f.data[base + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let base = i * w + f.lower - i;
            let mut s = x[i];
            for j in (i + 1)..(i + f.upper + 1).min(n) {
                s -= f.data[base + j] * x[j];
            }
            x[i] = s / f.data[base + i];
        }
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for c in 0..x.ncols() {
            let mut col: Vec<f64> = x.column(c).iter().copied().collect();
            self.solve_in_place(&mut col);
            x.set_column(c, &DVector::from_vec(col));
        }
        x
    }

    /// Product of pivots signs: number of negative pivots (inertia count for symmetric input).
    pub fn negative_pivots(&self) -> usize {
        (0..self.f.n).filter(|&i| self.f.get(i, i) < 0.0).count()
    }
}
