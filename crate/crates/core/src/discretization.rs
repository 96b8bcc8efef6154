//! Uniform grids on an interval and finite-difference assembly of
//! divergence-form operators with homogeneous Dirichlet conditions.
//!
//! Unknowns live on the interior nodes `x_i = i·h`, `i = 1..=n`. Boundary
//! values are eliminated. Coefficients are given either at all `n + 2` nodes
//! (boundary included) or directly at the `n + 1` faces `x_{i+1/2}`.

use crate::linalg::Tridiagonal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("grid needs at least 3 interior nodes, got {0}")]
    TooFewNodes(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("diffusion coefficient must be positive, found {value} at index {index}")]
    NonPositiveCoefficient { index: usize, value: f64 },
}

/// Uniform mesh of `(0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_interior: usize,
    length: f64,
    spacing: f64,
}

impl Grid {
    pub fn new(n_interior: usize, length: f64) -> Result<Self, DiscretizationError> {
        if n_interior < 3 {
            return Err(DiscretizationError::TooFewNodes(n_interior));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(DiscretizationError::BadLength(length));
        }
        Ok(Self { n_interior, length, spacing: length / (n_interior as f64 + 1.0) })
    }

    /// Unit interval with `n_interior` unknowns.
    pub fn unit(n_interior: usize) -> Result<Self, DiscretizationError> {
        Self::new(n_interior, 1.0)
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// Interior node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n_interior).map(|i| self.node(i)).collect()
    }

    /// All node coordinates including both boundary points.
    pub fn nodes_with_boundary(&self) -> Vec<f64> {
        (0..=self.n_interior + 1).map(|i| self.node(i)).collect()
    }

    /// Face (half-node) coordinates `x_{i+1/2}`, `i = 0..=n`.
    pub fn faces(&self) -> Vec<f64> {
        (0..=self.n_interior).map(|i| (i as f64 + 0.5) * self.spacing).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction { grid: *self, values: self.nodes().into_iter().map(f).collect() }
    }

    pub fn sample_with_boundary<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes_with_boundary().into_iter().map(f).collect()
    }
}

/// Nodal values of a scalar field on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, DiscretizationError> {
        if values.len() != grid.n_interior() {
            return Err(DiscretizationError::DimensionMismatch { expected: grid.n_interior(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_interior()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n_interior()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L²(0, length)` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All entries strictly positive.
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Values padded with the Dirichlet zeros at both ends (length `n + 2`).
    pub fn with_boundary(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 2);
        out.push(0.0);
        out.extend_from_slice(&self.values);
        out.push(0.0);
        out
    }

    /// Arithmetic means at the `n + 1` faces, boundary zeros included.
    pub fn face_averages(&self) -> Vec<f64> {
        nodal_to_faces(&self.with_boundary())
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }
}

/// Arithmetic means of adjacent entries.
pub fn nodal_to_faces(nodal: &[f64]) -> Vec<f64> {
    nodal.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn check_len(values: &[f64], expected: usize) -> Result<(), DiscretizationError> {
    if values.len() != expected {
        return Err(DiscretizationError::DimensionMismatch { expected, got: values.len() });
    }
    Ok(())
}

/// Discretization of `w ↦ −(A w′)′` from nodal coefficients (boundary
/// included). Face coefficients are arithmetic means of adjacent nodes.
pub fn assemble_diffusion(grid: &Grid, coeff: &[f64]) -> Result<Tridiagonal, DiscretizationError> {
    check_len(coeff, grid.n_interior() + 2)?;
    if let Some((index, &value)) = coeff.iter().enumerate().find(|(_, &a)| !(a > 0.0)) {
        return Err(DiscretizationError::NonPositiveCoefficient { index, value });
    }
    diffusion_from_faces(grid, &nodal_to_faces(coeff))
}

/// Discretization of `w ↦ −(A w′)′` from the `n + 1` face values of `A`.
pub fn diffusion_from_faces(grid: &Grid, faces: &[f64]) -> Result<Tridiagonal, DiscretizationError> {
    let n = grid.n_interior();
    check_len(faces, n + 1)?;
    if let Some((index, &value)) = faces.iter().enumerate().find(|(_, &a)| !(a > 0.0)) {
        return Err(DiscretizationError::NonPositiveCoefficient { index, value });
    }
    let h2 = grid.spacing() * grid.spacing();
    let off: Vec<f64> = faces[1..n].iter().map(|a| -a / h2).collect();
    let diag = (0..n).map(|i| (faces[i] + faces[i + 1]) / h2).collect();
    Ok(Tridiagonal::new(off.clone(), diag, off).expect("consistent dimensions"))
}

/// Centered discretization of `w ↦ −(B w)′` from nodal flux coefficients
/// (boundary included).
pub fn assemble_drift(grid: &Grid, flux_coeff: &[f64]) -> Result<Tridiagonal, DiscretizationError> {
    check_len(flux_coeff, grid.n_interior() + 2)?;
    drift_from_faces(grid, &nodal_to_faces(flux_coeff))
}

/// Centered discretization of `w ↦ −(B w)′` from face values of `B`; the
/// face value of `w` is the mean of its two neighbours.
pub fn drift_from_faces(grid: &Grid, faces: &[f64]) -> Result<Tridiagonal, DiscretizationError> {
    let n = grid.n_interior();
    check_len(faces, n + 1)?;
    let two_h = 2.0 * grid.spacing();
    let lower = (1..n).map(|i| faces[i] / two_h).collect();
    let diag = (0..n).map(|i| (faces[i] - faces[i + 1]) / two_h).collect();
    let upper = (0..n - 1).map(|i| -faces[i + 1] / two_h).collect();
    Ok(Tridiagonal::new(lower, diag, upper).expect("consistent dimensions"))
}

/// Diagonal operator `w ↦ weight · w`.
pub fn assemble_weight(grid: &Grid, weight: &[f64]) -> Result<Tridiagonal, DiscretizationError> {
    check_len(weight, grid.n_interior())?;
    Ok(Tridiagonal::from_diagonal(weight.to_vec()))
}

/// Constant-coefficient `−w″`.
pub fn laplacian(grid: &Grid) -> Tridiagonal {
    let ones = vec![1.0; grid.n_interior() + 1];
    diffusion_from_faces(grid, &ones).expect("unit coefficient")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_construction() {
        let g = Grid::new(3, 1.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.nodes(), vec![0.25, 0.5, 0.75]);
        assert!((Grid::new(99, 1.0).unwrap().spacing() - 0.01).abs() < 1e-15);
        assert!(Grid::new(3, 0.0).is_err());
        assert!(Grid::new(2, 1.0).is_err());
        assert!(Grid::new(5, -1.0).is_err());
    }

    #[test]
    fn constant_coefficient_stencil() {
        let g = Grid::new(5, 1.0).unwrap();
        let h2 = g.spacing().powi(2);
        let op = assemble_diffusion(&g, &[1.0; 7]).unwrap();
        assert!(op.is_symmetric());
        for i in 0..5 {
            assert!((op.get(i, i) - 2.0 / h2).abs() < 1e-9);
            if i > 0 {
                assert!((op.get(i, i - 1) + 1.0 / h2).abs() < 1e-9);
            }
        }
        let op3 = assemble_diffusion(&g, &[3.0; 7]).unwrap();
        assert_eq!(op3, op.scaled(3.0));
    }

    #[test]
    fn variable_coefficient_quadratic_is_reproduced() {
        // flux of a quadratic through a linear coefficient is exact at faces
        let g = Grid::new(99, 1.0).unwrap();
        let op = assemble_diffusion(&g, &g.sample_with_boundary(|x| 1.0 + x)).unwrap();
        let u = g.sample(|x| x * (1.0 - x));
        let lu = op.apply(u.values()).unwrap();
        let exact: Vec<f64> = g.nodes().iter().map(|x| 2.0 * (1.0 + x) + (2.0 * x - 1.0)).collect();
        assert!(max_err(&lu, &exact) < 1e-8);
    }

    #[test]
    fn diffusion_is_second_order() {
        let err = |n: usize| {
            let g = Grid::new(n, 1.0).unwrap();
            let op = assemble_diffusion(&g, &g.sample_with_boundary(f64::exp)).unwrap();
            let lu = op.apply(g.sample(|x| (PI * x).sin()).values()).unwrap();
            let exact: Vec<f64> = g
                .nodes()
                .iter()
                .map(|&x| -x.exp() * (PI * (PI * x).cos() - PI * PI * (PI * x).sin()))
                .collect();
            max_err(&lu, &exact)
        };
        let rate = (err(99) / err(199)).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn drift_cases() {
        let g = Grid::new(49, 1.0).unwrap();
        let zero = assemble_drift(&g, &[0.0; 51]).unwrap();
        assert!(zero.norm_inf() == 0.0);
        let unit = assemble_drift(&g, &[1.0; 51]).unwrap();
        let out = unit.apply(g.sample(|x| x).values()).unwrap();
        for v in &out[..48] {
            assert!((v + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn drift_is_second_order() {
        let err = |n: usize| {
            let g = Grid::new(n, 1.0).unwrap();
            let op = assemble_drift(&g, &g.sample_with_boundary(|x| x)).unwrap();
            let lu = op.apply(g.sample(|x| (PI * x).sin()).values()).unwrap();
            let exact: Vec<f64> =
                g.nodes().iter().map(|&x| -((PI * x).sin() + x * PI * (PI * x).cos())).collect();
            max_err(&lu, &exact)
        };
        let rate = (err(99) / err(199)).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn weight_is_diagonal() {
        let g = Grid::new(4, 1.0).unwrap();
        let w = g.sample(|x| (-x).exp());
        let op = assemble_weight(&g, w.values()).unwrap();
        assert!(op.is_diagonal());
        assert_eq!(op.diag(), w.values());
        assert_eq!(assemble_weight(&g, &[2.0; 4]).unwrap().diag(), &[2.0; 4]);
    }

    #[test]
    fn rejects_nonpositive_coefficient() {
        let g = Grid::new(4, 1.0).unwrap();
        let mut c = vec![1.0; 6];
        c[3] = 0.0;
        assert!(matches!(
            assemble_diffusion(&g, &c),
            Err(DiscretizationError::NonPositiveCoefficient { index: 3, .. })
        ));
        assert!(assemble_diffusion(&g, &[1.0; 5]).is_err());
    }
}
