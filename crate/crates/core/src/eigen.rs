//! Principal eigenpairs of weighted tridiagonal elliptic operators.
//!
//! The generalized problem `L φ = σ C φ` with diagonal `C > 0` is solved by
//! shift–invert power iteration. The shift sits strictly below every
//! Gershgorin disc of `C⁻¹L`, so `L − sC` is a strictly diagonally dominant
//! matrix and, when its off-diagonals are nonpositive, an M-matrix with a
//! positive inverse. The iteration then converges to the eigenvalue with a
//! positive eigenfunction, which is the one we want. Drift operators are not
//! symmetrized; positivity of the converged eigenfunction is checked instead.

use crate::discretization::{
    diffusion_from_faces, drift_from_faces, nodal_to_faces, DiscretizationError, Grid, GridFunction,
};
use crate::linalg::{symmetric_tridiagonal_eigenvalue, sturm_count, LinalgError, Tridiagonal};
use crate::quadrature::{primitive_at, QuadratureError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("weight must be diagonal with strictly positive entries")]
    BadWeight,
    #[error("operator dimension {op} does not match weight dimension {weight}")]
    DimensionMismatch { op: usize, weight: usize },
    #[error("inverse iteration did not converge in {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
    #[error("converged eigenfunction changes sign (min {min:e}); shift is past the principal eigenvalue")]
    SignFailure { min: f64 },
    #[error("operator is not symmetric")]
    NotSymmetric,
    #[error("gauge diffusion coefficient must be positive, got {value} at v = {at}")]
    NonPositiveDiffusion { at: f64, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

/// Principal eigenpair of `L φ = σ C φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub sigma1: f64,
    /// Positive eigenfunction with sup-norm 1.
    pub eigenfunction: Vec<f64>,
    pub iterations: usize,
    /// `‖L φ − σ₁ C φ‖∞`.
    pub residual: f64,
}

impl EigenResult {
    pub fn eigenfunction_on(&self, grid: &Grid) -> GridFunction {
        GridFunction::new(*grid, self.eigenfunction.clone()).expect("eigenfunction matches grid")
    }
}

/// Lower Gershgorin bound for the spectrum of `C⁻¹L`.
fn gershgorin_lower(op: &Tridiagonal, weight: &[f64]) -> f64 {
    let n = op.dim();
    (0..n)
        .map(|i| {
            let mut radius = 0.0;
            if i > 0 {
                radius += op.lower()[i - 1].abs();
            }
            if i + 1 < n {
                radius += op.upper()[i].abs();
            }
            (op.diag()[i] - radius) / weight[i]
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn principal_eigenpair(op: &Tridiagonal, weight: &Tridiagonal, opts: &EigenOptions) -> Result<EigenResult, EigenError> {
    let n = op.dim();
    if weight.dim() != n {
        return Err(EigenError::DimensionMismatch { op: n, weight: weight.dim() });
    }
    if !weight.is_diagonal() || weight.diag().iter().any(|&c| !(c > 0.0)) {
        return Err(EigenError::BadWeight);
    }
    let c = weight.diag();
    let bound = gershgorin_lower(op, c);
    let shift = bound - 1.0 - 1e-2 * bound.abs();
    let shifted = op.add_diagonal(&c.iter().map(|ci| -shift * ci).collect::<Vec<_>>())?;
    let residual_scale = op.norm_inf() + weight.norm_inf();

    let mut phi = vec![1.0; n];
    let mut sigma = f64::NAN;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let rhs: Vec<f64> = phi.iter().zip(c).map(|(p, ci)| p * ci).collect();
        let mut psi = shifted.solve(&rhs)?;
        let rho = dot(&phi, &psi) / dot(&phi, &phi);
        let next = shift + 1.0 / rho;
        let peak = psi.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        psi.iter_mut().for_each(|v| *v /= peak);
        phi = psi;
        last_change = (next - sigma).abs();
        sigma = next;
        if last_change < opts.tol * sigma.abs().max(1.0) {
            let residual = eigen_residual(op, c, &phi, sigma);
            if residual <= opts.tol * residual_scale * sigma.abs().max(1.0) {
                let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
                if min <= 0.0 {
                    return Err(EigenError::SignFailure { min });
                }
                return Ok(EigenResult { sigma1: sigma, eigenfunction: phi, iterations: it, residual });
            }
        }
    }
    Err(EigenError::NonConvergence { iterations: opts.max_iter, last_change })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eigen_residual(op: &Tridiagonal, c: &[f64], phi: &[f64], sigma: f64) -> f64 {
    let lphi = op.apply(phi).expect("matching dimension");
    lphi.iter().zip(phi).zip(c).map(|((l, p), ci)| (l - sigma * ci * p).abs()).fold(0.0, f64::max)
}

/// `σ₁[−(A ·′)′ + B; C]` with `A` given at all nodes (boundary included).
pub fn sigma1_divergence(
    grid: &Grid,
    diffusion: &[f64],
    potential: &[f64],
    weight: &[f64],
    opts: &EigenOptions,
) -> Result<EigenResult, EigenError> {
    let op = crate::discretization::assemble_diffusion(grid, diffusion)?.add_diagonal(potential)?;
    let w = crate::discretization::assemble_weight(grid, weight)?;
    principal_eigenpair(&op, &w, opts)
}

/// `σ₁[−(M₁(v) v′ · + M₂(v) ·′)′ + B; C]` with `M₁(v)`, `M₂(v)` sampled at
/// all nodes. The drift coefficient at a face is the mean of `M₁(v)` times
/// the centered difference of `v`.
pub fn sigma1_drift(
    grid: &Grid,
    m1_of_v: &[f64],
    m2_of_v: &[f64],
    v: &GridFunction,
    potential: &[f64],
    weight: &[f64],
    opts: &EigenOptions,
) -> Result<EigenResult, EigenError> {
    let n = grid.n_interior();
    for len in [m1_of_v.len(), m2_of_v.len()] {
        if len != n + 2 {
            return Err(DiscretizationError::DimensionMismatch { expected: n + 2, got: len }.into());
        }
    }
    sigma1_drift_faces(grid, &nodal_to_faces(m1_of_v), &nodal_to_faces(m2_of_v), v, potential, weight, opts)
}

/// Operator of [`sigma1_drift`] built from face values of `M₁(v)`, `M₂(v)`.
pub fn drift_operator_faces(
    grid: &Grid,
    m1_faces: &[f64],
    m2_faces: &[f64],
    v: &GridFunction,
    potential: &[f64],
) -> Result<Tridiagonal, EigenError> {
    let vb = v.with_boundary();
    let h = grid.spacing();
    if m1_faces.len() != vb.len() - 1 {
        return Err(DiscretizationError::DimensionMismatch { expected: vb.len() - 1, got: m1_faces.len() }.into());
    }
    let flux: Vec<f64> = m1_faces.iter().zip(vb.windows(2)).map(|(m, w)| m * (w[1] - w[0]) / h).collect();
    let op = diffusion_from_faces(grid, m2_faces)?.add(&drift_from_faces(grid, &flux)?)?.add_diagonal(potential)?;
    Ok(op)
}

pub fn sigma1_drift_faces(
    grid: &Grid,
    m1_faces: &[f64],
    m2_faces: &[f64],
    v: &GridFunction,
    potential: &[f64],
    weight: &[f64],
    opts: &EigenOptions,
) -> Result<EigenResult, EigenError> {
    let op = drift_operator_faces(grid, m1_faces, m2_faces, v, potential)?;
    let w = crate::discretization::assemble_weight(grid, weight)?;
    principal_eigenpair(&op, &w, opts)
}

/// `e^{−h(s)}` at each `s` in `values`, with `h(s) = ∫₀^s M₁/M₂`.
pub fn gauge_transform(
    m1: &dyn Fn(f64) -> f64,
    m2: &dyn Fn(f64) -> f64,
    values: &[f64],
) -> Result<Vec<f64>, EigenError> {
    for &s in values {
        let d = m2(s);
        if !(d > 0.0) {
            return Err(EigenError::NonPositiveDiffusion { at: s, value: d });
        }
    }
    let ratio = |s: f64| m1(s) / m2(s);
    Ok(primitive_at(&ratio, values, 1e-10)?.into_iter().map(|h| (-h).exp()).collect())
}

/// Principal eigenvalue in drift form and in gauge form, on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformGap {
    pub sigma_drift: f64,
    pub sigma_transformed: f64,
    pub gap: f64,
}

/// Both sides of the change-of-variables identity
/// `σ₁[−(M₁(v)v′· + M₂(v)·′)′ + B; C] = σ₁[−(M₂(v)e^{−h(v)}·′)′ + B e^{−h(v)}; C e^{−h(v)}]`
/// as full eigenpairs, drift form first.
pub fn transform_identity_pair(
    grid: &Grid,
    m1: &dyn Fn(f64) -> f64,
    m2: &dyn Fn(f64) -> f64,
    v: &GridFunction,
    potential: &[f64],
    weight: &[f64],
    opts: &EigenOptions,
) -> Result<(EigenResult, EigenResult), EigenError> {
    let vb = v.with_boundary();
    let m1n: Vec<f64> = vb.iter().map(|&s| m1(s)).collect();
    let m2n: Vec<f64> = vb.iter().map(|&s| m2(s)).collect();
    let drift = sigma1_drift(grid, &m1n, &m2n, v, potential, weight, opts)?;

    let gauge = gauge_transform(m1, m2, &vb)?;
    let diffusion: Vec<f64> = m2n.iter().zip(&gauge).map(|(a, g)| a * g).collect();
    let inner = &gauge[1..gauge.len() - 1];
    let pot: Vec<f64> = potential.iter().zip(inner).map(|(b, g)| b * g).collect();
    let wt: Vec<f64> = weight.iter().zip(inner).map(|(c, g)| c * g).collect();
    let transformed = sigma1_divergence(grid, &diffusion, &pot, &wt, opts)?;
    Ok((drift, transformed))
}

/// Principal eigenvalues of [`transform_identity_pair`] and their gap.
pub fn transform_identity_check(
    grid: &Grid,
    m1: &dyn Fn(f64) -> f64,
    m2: &dyn Fn(f64) -> f64,
    v: &GridFunction,
    potential: &[f64],
    weight: &[f64],
    opts: &EigenOptions,
) -> Result<TransformGap, EigenError> {
    let (drift, transformed) = transform_identity_pair(grid, m1, m2, v, potential, weight, opts)?;
    Ok(TransformGap {
        sigma_drift: drift.sigma1,
        sigma_transformed: transformed.sigma1,
        gap: (drift.sigma1 - transformed.sigma1).abs(),
    })
}

/// Eigenvalue of smallest modulus of a symmetric tridiagonal matrix.
pub fn smallest_abs_eigenvalue(op: &Tridiagonal) -> Result<f64, EigenError> {
    if !op.is_symmetric() {
        return Err(EigenError::NotSymmetric);
    }
    let below = sturm_count(op, 0.0);
    let mut best = f64::INFINITY;
    if below < op.dim() {
        best = best.min(symmetric_tridiagonal_eigenvalue(op, below, 1e-15).abs());
    }
    if below > 0 {
        best = best.min(symmetric_tridiagonal_eigenvalue(op, below - 1, 1e-15).abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_diffusion, assemble_weight, laplacian};
    use std::f64::consts::PI;

    fn discrete_lambda1(grid: &Grid) -> f64 {
        let h = grid.spacing();
        4.0 / (h * h) * (PI * h / 2.0).sin().powi(2)
    }

    #[test]
    fn laplacian_matches_closed_form() {
        let g = Grid::unit(199).unwrap();
        let r = principal_eigenpair(&laplacian(&g), &Tridiagonal::from_diagonal(vec![1.0; 199]), &Default::default())
            .unwrap();
        assert!((r.sigma1 - discrete_lambda1(&g)).abs() < 1e-8);
        assert!(((r.sigma1 - PI * PI) / (PI * PI)).abs() < 1e-3);
        assert!(r.eigenfunction.iter().all(|&v| v > 0.0));
        let sup = r.eigenfunction.iter().copied().fold(0.0, f64::max);
        assert!((sup - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalings() {
        let g = Grid::unit(199).unwrap();
        let opts = EigenOptions::default();
        let lam = discrete_lambda1(&g);
        let r = sigma1_divergence(&g, &[3.0; 201], &[0.0; 199], &[1.0; 199], &opts).unwrap();
        assert!((r.sigma1 - 3.0 * lam).abs() < 1e-7);
        let r = sigma1_divergence(&g, &[1.0; 201], &[5.0; 199], &[1.0; 199], &opts).unwrap();
        assert!((r.sigma1 - lam - 5.0).abs() < 1e-7);
        let r = sigma1_divergence(&g, &[1.0; 201], &[0.0; 199], &[2.0; 199], &opts).unwrap();
        assert!((r.sigma1 - lam / 2.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_weight() {
        let g = Grid::unit(9).unwrap();
        let mut w = vec![1.0; 9];
        w[4] = 0.0;
        let r = principal_eigenpair(&laplacian(&g), &Tridiagonal::from_diagonal(w), &Default::default());
        assert_eq!(r, Err(EigenError::BadWeight));
        let nondiag = laplacian(&g);
        assert_eq!(principal_eigenpair(&laplacian(&g), &nondiag, &Default::default()), Err(EigenError::BadWeight));
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = Grid::unit(50).unwrap();
        let opts = EigenOptions { tol: 1e-10, max_iter: 2 };
        let r = principal_eigenpair(&laplacian(&g), &Tridiagonal::from_diagonal(vec![1.0; 50]), &opts);
        assert!(matches!(r, Err(EigenError::NonConvergence { iterations: 2, .. })));
    }

    #[test]
    fn vanishing_drift_reduces_to_divergence_form() {
        let g = Grid::unit(99).unwrap();
        let v = g.sample(|x| (PI * x).sin());
        let m2 = g.sample_with_boundary(|x| 1.0 + x);
        let pot = g.sample(|x| x * x);
        let opts = EigenOptions::default();
        let a = sigma1_drift(&g, &[0.0; 101], &m2, &v, pot.values(), &[1.0; 99], &opts).unwrap();
        let b = sigma1_divergence(&g, &m2, pot.values(), &[1.0; 99], &opts).unwrap();
        assert_eq!(a.sigma1, b.sigma1);
        let zero_v = GridFunction::zeros(g);
        let c = sigma1_drift(&g, &[7.0; 101], &m2, &zero_v, pot.values(), &[1.0; 99], &opts).unwrap();
        assert_eq!(c.sigma1, b.sigma1);
    }

    #[test]
    fn gauge_closed_forms() {
        let pts = [0.0, 0.3, 1.0, 2.5];
        let ones = gauge_transform(&|_| 0.0, &|_| 1.0, &pts).unwrap();
        assert!(ones.iter().all(|&g| g == 1.0));
        // M1 = H', M2 = H with H = (s+2)/(s+1)
        let hh = |s: f64| (s + 2.0) / (s + 1.0);
        let dh = |s: f64| -1.0 / (s + 1.0).powi(2);
        let g = gauge_transform(&dh, &hh, &pts).unwrap();
        for (z, gz) in pts.iter().zip(&g) {
            assert!((gz - 2.0 * (z + 1.0) / (z + 2.0)).abs() < 1e-10);
        }
        let chi = 0.5;
        let g = gauge_transform(&|_| chi, &|_| 1.0, &pts).unwrap();
        for (z, gz) in pts.iter().zip(&g) {
            assert!((gz - (-chi * z).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn transform_gap_is_zero_without_drift() {
        let g = Grid::unit(49).unwrap();
        let v = g.sample(|x| (PI * x).sin());
        let r = transform_identity_check(&g, &|_| 0.0, &|s| 1.0 + s, &v, &[0.0; 49], &[1.0; 49], &Default::default())
            .unwrap();
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn transform_gap_converges_at_second_order() {
        let gap = |n: usize| {
            let g = Grid::unit(n).unwrap();
            let v = g.sample(|x| (PI * x).sin());
            transform_identity_check(&g, &|_| 1.0, &|_| 1.0, &v, &vec![0.0; n], &vec![1.0; n], &Default::default())
                .unwrap()
                .gap
        };
        let (a, b) = (gap(199), gap(399));
        assert!(a < 1e-2);
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn rayleigh_quotient_matches_symmetric_eigenvalue() {
        let g = Grid::unit(99).unwrap();
        let a = g.sample_with_boundary(|x| 1.0 + x * x);
        let pot = g.sample(|x| (3.0 * x).cos());
        let op = assemble_diffusion(&g, &a).unwrap().add_diagonal(pot.values()).unwrap();
        let w = g.sample(|x| 1.0 + 0.5 * x);
        let r = principal_eigenpair(&op, &assemble_weight(&g, w.values()).unwrap(), &Default::default()).unwrap();
        let phi = &r.eigenfunction;
        let num: f64 = phi.iter().zip(op.apply(phi).unwrap()).map(|(p, l)| p * l).sum();
        let den: f64 = phi.iter().zip(w.values()).map(|(p, c)| p * p * c).sum();
        assert!((num / den - r.sigma1).abs() < 1e-8 * r.sigma1.abs());
    }

    #[test]
    fn smallest_abs_eigenvalue_detects_constructed_zero() {
        let g = Grid::unit(99).unwrap();
        let lap = laplacian(&g);
        let r = principal_eigenpair(&lap, &Tridiagonal::from_diagonal(vec![1.0; 99]), &Default::default()).unwrap();
        let shifted = lap.add_diagonal(&vec![-r.sigma1; 99]).unwrap();
        assert!(smallest_abs_eigenvalue(&shifted).unwrap() < 1e-8);
        assert!((smallest_abs_eigenvalue(&lap).unwrap() - r.sigma1).abs() < 1e-8);
    }
}
