//! Tridiagonal operators and banded LU factorization.
//!
//! Every discrete operator in this crate is either tridiagonal (scalar
//! problems on interior nodes) or banded with three sub- and super-diagonals
//! (the coupled system with unknowns interleaved as `u_1, v_1, u_2, v_2, ...`).

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular to working precision (pivot {pivot} at row {row})")]
    Singular { row: usize, pivot: f64 },
}

/// Square tridiagonal matrix.
///
/// `lower[i]` is entry `(i + 1, i)` and `upper[i]` is entry `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    symmetric: bool,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self, LinalgError> {
        let n = diag.len();
        let off = n.saturating_sub(1);
        if lower.len() != off {
            return Err(LinalgError::DimensionMismatch { expected: off, got: lower.len() });
        }
        if upper.len() != off {
            return Err(LinalgError::DimensionMismatch { expected: off, got: upper.len() });
        }
        let symmetric = lower == upper;
        Ok(Self { lower, diag, upper, symmetric })
    }

    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self { lower: vec![0.0; off], diag: vec![0.0; n], upper: vec![0.0; off], symmetric: true }
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        let off = diag.len().saturating_sub(1);
        Self { lower: vec![0.0; off], diag, upper: vec![0.0; off], symmetric: true }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Exact structural symmetry (`lower == upper`).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_diagonal(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|&x| x == 0.0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[j]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        if x.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| alpha * x).collect::<Vec<_>>();
        Self { lower: s(&self.lower), diag: s(&self.diag), upper: s(&self.upper), symmetric: self.symmetric }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if other.dim() != self.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        let lower = zip(&self.lower, &other.lower);
        let upper = zip(&self.upper, &other.upper);
        let symmetric = lower == upper;
        Ok(Self { lower, diag: zip(&self.diag, &other.diag), upper, symmetric })
    }

    /// Returns `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Result<Self, LinalgError> {
        if d.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), got: d.len() });
        }
        let mut out = self.clone();
        out.diag.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    /// Right-multiplication by a diagonal matrix, `self * diag(d)`.
    pub fn mul_diagonal_right(&self, d: &[f64]) -> Result<Self, LinalgError> {
        let n = self.dim();
        if d.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: d.len() });
        }
        let lower: Vec<f64> = (0..n.saturating_sub(1)).map(|i| self.lower[i] * d[i]).collect();
        let upper: Vec<f64> = (0..n.saturating_sub(1)).map(|i| self.upper[i] * d[i + 1]).collect();
        let diag = self.diag.iter().zip(d).map(|(a, b)| a * b).collect();
        let symmetric = lower == upper;
        Ok(Self { lower, diag, upper, symmetric })
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i - 1].abs();
                }
                if i + 1 < self.dim() {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Thomas algorithm without pivoting. Intended for diagonally dominant
    /// systems such as shifted M-matrices; fails on a vanishing pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.abs() <= f64::EPSILON * scale {
            return Err(LinalgError::Singular { row: 0, pivot });
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot.abs() <= f64::EPSILON * scale {
                return Err(LinalgError::Singular { row: i, pivot });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    pub fn to_banded(&self) -> BandedMatrix {
        let n = self.dim();
        let mut b = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            b.set(i, i, self.diag[i]);
            if i + 1 < n {
                b.set(i + 1, i, self.lower[i]);
                b.set(i, i + 1, self.upper[i]);
            }
        }
        b
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

/// Banded matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for fill-in produced by
/// partial pivoting, so a matrix can be factored in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        // column offset relative to i - kl
        let off = (j + self.kl).checked_sub(i)?;
        (off < self.width).then(|| i * self.width + off)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.slot(i, j) {
            Some(k) if i < self.n && j < self.n => self.data[k],
            _ => 0.0,
        }
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.slot(i, j).expect("inside band");
        self.data[k] = value;
    }

    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + value);
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        Ok(y)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorization with partial pivoting (the LAPACK `gbtrf` scheme).
    pub fn lu(&self) -> Result<BandedLu, LinalgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut a = self.clone();
        let mut piv = vec![0usize; n];
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = a.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[k] = p;
            if best <= f64::EPSILON * scale * 1e-3 {
                return Err(LinalgError::Singular { row: k, pivot: best });
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(ik, ip);
                }
            }
            let pivot = a.get(k, k);
            for r in k + 1..=last_row {
                let m = a.get(r, k) / pivot;
                let ir = a.slot(r, k).unwrap();
                a.data[ir] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let akj = a.get(k, j);
                        if akj != 0.0 {
                            let irj = a.slot(r, j).unwrap();
                            a.data[irj] -= m * akj;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { factors: a, piv })
    }
}

/// Factors produced by [`BandedMatrix::lu`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    factors: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let a = &self.factors;
        let n = a.n;
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last_row = (k + a.kl).min(n - 1);
            for r in k + 1..=last_row {
                x[r] -= a.get(r, k) * x[k];
            }
        }
        let reach = a.kl + a.ku;
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=last_col {
                acc -= a.get(k, j) * x[j];
            }
            x[k] = acc / a.get(k, k);
        }
        Ok(x)
    }
}

/// Sturm-sequence count of eigenvalues strictly below `x` for a symmetric
/// tridiagonal matrix.
pub fn sturm_count(op: &Tridiagonal, x: f64) -> usize {
    let n = op.dim();
    let mut count = 0;
    let mut q = op.diag()[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let b2 = op.lower()[i - 1] * op.upper()[i - 1];
        let prev = if q == 0.0 { f64::EPSILON * (op.norm_inf() + 1.0) } else { q };
        q = op.diag()[i] - x - b2 / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix
/// by bisection on the Sturm count.
pub fn symmetric_tridiagonal_eigenvalue(op: &Tridiagonal, k: usize, tol: f64) -> f64 {
    let r = op.norm_inf();
    let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if sturm_count(op, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> Tridiagonal {
        Tridiagonal::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let t = Tridiagonal::new(vec![-1.0, 0.5, -2.0], vec![4.0, 5.0, 6.0, 7.0], vec![1.0, -1.0, 0.3]).unwrap();
        let b = [1.0, 2.0, 3.0, 4.0];
        let x = t.solve(&b).unwrap();
        let dense = t.to_dense().lu().solve(&nalgebra::DVector::from_row_slice(&b)).unwrap();
        for i in 0..4 {
            assert!((x[i] - dense[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_lu_pivots_through_zero_diagonal() {
        // zero leading diagonal forces a row swap
        let mut m = BandedMatrix::zeros(5, 2, 1);
        let dense = [
            [0.0, 2.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 3.0, 0.0, 0.0],
            [4.0, -1.0, 0.5, 2.0, 0.0],
            [0.0, 2.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 1.0, 2.0],
        ];
        for i in 0..5 {
            for j in 0..5 {
                if dense[i][j] != 0.0 {
                    m.set(i, j, dense[i][j]);
                }
            }
        }
        let b = [1.0, -2.0, 0.5, 3.0, 1.0];
        let x = m.lu().unwrap().solve(&b).unwrap();
        let back = m.apply(&x).unwrap();
        for i in 0..5 {
            assert!((back[i] - b[i]).abs() < 1e-12, "row {i}: {} vs {}", back[i], b[i]);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let t = Tridiagonal::new(vec![1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 1.0]).unwrap();
        // rows 0 and 1 of [[1,1,0],[1,1,1],[0,1,1]] give det = -1, so perturb to singular
        let s = Tridiagonal::new(vec![1.0, 0.0], vec![1.0, 1.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(t.to_banded().lu().is_ok());
        assert!(matches!(s.to_banded().lu(), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn sturm_bisection_recovers_laplacian_spectrum() {
        let n = 20;
        let t = laplacian(n);
        for k in [0, 5, 19] {
            let exact = 4.0 * ((k as f64 + 1.0) * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
            let got = symmetric_tridiagonal_eigenvalue(&t, k, 1e-14);
            assert!((got - exact).abs() < 1e-10, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(Tridiagonal::new(vec![1.0], vec![1.0; 3], vec![1.0; 2]).is_err());
        assert!(laplacian(4).apply(&[1.0; 3]).is_err());
    }
}
