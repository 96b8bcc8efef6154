//! Bifurcation points from the semitrivial branches and their kernels.

use super::{invasion_eigen_u, invasion_eigen_v, jacobian, semitrivial_u, semitrivial_v, CoupledState, FreeParameter, SystemError};
use crate::discretization::{Grid, GridFunction};
use crate::models::Model;
use crate::semitrivial::nondegeneracy_margin;
use serde::{Deserialize, Serialize};

/// Which semitrivial branch a bifurcation point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Base `(θ_λ, 0)`; `v` invades as `μ` crosses `μ_λ`.
    U,
    /// Base `(0, θ_μ)`; `u` invades as `λ` crosses `λ_μ`.
    V,
}

#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub side: Side,
    pub lambda: f64,
    pub mu: f64,
    /// Nonzero component of the base state.
    pub theta: GridFunction,
    /// Kernel component along the base species.
    pub xi: GridFunction,
    /// Kernel component along the invading species, positive, sup-norm 1.
    pub phi: GridFunction,
    /// Nondegeneracy margin of `theta`.
    pub margin: f64,
}

impl BifurcationPoint {
    pub fn base_state(&self) -> CoupledState {
        let zero = GridFunction::zeros(*self.theta.grid());
        match self.side {
            Side::U => CoupledState { u: self.theta.clone(), v: zero },
            Side::V => CoupledState { u: zero, v: self.theta.clone() },
        }
    }

    /// Kernel vector in block layout `[u; v]`.
    pub fn kernel(&self) -> Vec<f64> {
        let (u, v) = match self.side {
            Side::U => (&self.xi, &self.phi),
            Side::V => (&self.phi, &self.xi),
        };
        let mut k = u.values().to_vec();
        k.extend_from_slice(v.values());
        k
    }

    /// Parameter that moves along the bifurcating branch.
    pub fn free_parameter(&self) -> FreeParameter {
        match self.side {
            Side::U => FreeParameter::Mu,
            Side::V => FreeParameter::Lambda,
        }
    }

    pub fn free_value(&self) -> f64 {
        match self.side {
            Side::U => self.mu,
            Side::V => self.lambda,
        }
    }

    pub fn fixed_value(&self) -> f64 {
        match self.side {
            Side::U => self.lambda,
            Side::V => self.mu,
        }
    }
}

const MARGIN_TOL: f64 = 1e-8;

/// Kernel `(ξ, φ₂)` of the coupled Jacobian at `(θ_λ, 0)` with `μ = μ_λ`:
/// `φ₂` is the principal eigenfunction of the `v`-invasion operator and `ξ`
/// solves the `u`-block equation `J_uu ξ = −J_uv φ₂`.
pub fn bifurcation_tangent(
    model: &Model,
    lambda: f64,
    theta_lambda: &GridFunction,
    mu_lambda: f64,
) -> Result<(GridFunction, GridFunction), SystemError> {
    let grid = theta_lambda.grid();
    let margin = nondegeneracy_margin(&model.semitrivial_u(grid, lambda), theta_lambda)?;
    if !(margin > MARGIN_TOL) {
        return Err(SystemError::DegenerateBase { margin });
    }
    let phi = invasion_eigen_v(model, theta_lambda)?.eigenfunction;
    let base = CoupledState { u: theta_lambda.clone(), v: GridFunction::zeros(*grid) };
    let j = jacobian(model, lambda, mu_lambda, &base);
    let rhs: Vec<f64> = j.uv.apply(&phi)?.into_iter().map(|x| -x).collect();
    let xi = j.uu.to_banded().lu()?.solve(&rhs)?;
    Ok((GridFunction::new(*grid, xi).expect("grid"), GridFunction::new(*grid, phi).expect("grid")))
}

/// Bifurcation point on the `side` branch with the base parameter fixed at
/// `fixed` (`λ` for [`Side::U`], `μ` for [`Side::V`]).
pub fn bifurcation_point(model: &Model, grid: &Grid, side: Side, fixed: f64) -> Result<BifurcationPoint, SystemError> {
    match side {
        Side::U => {
            let theta = semitrivial_u(model, grid, fixed)?.ok_or(SystemError::NoSemitrivial(fixed))?;
            let margin = nondegeneracy_margin(&model.semitrivial_u(grid, fixed), &theta)?;
            let eig = invasion_eigen_v(model, &theta)?;
            let (xi, phi) = bifurcation_tangent(model, fixed, &theta, eig.sigma1)?;
            Ok(BifurcationPoint { side, lambda: fixed, mu: eig.sigma1, theta, xi, phi, margin })
        }
        Side::V => {
            let theta = semitrivial_v(model, grid, fixed)?.ok_or(SystemError::NoSemitrivial(fixed))?;
            let margin = nondegeneracy_margin(&model.semitrivial_v(grid, fixed), &theta)?;
            if !(margin > MARGIN_TOL) {
                return Err(SystemError::DegenerateBase { margin });
            }
            let eig = invasion_eigen_u(model, &theta)?;
            let base = CoupledState { u: GridFunction::zeros(*grid), v: theta.clone() };
            let j = jacobian(model, eig.sigma1, fixed, &base);
            let rhs: Vec<f64> = j.vu.apply(&eig.eigenfunction)?.into_iter().map(|x| -x).collect();
            let xi = j.vv.to_banded().lu()?.solve(&rhs)?;
            Ok(BifurcationPoint {
                side,
                lambda: eig.sigma1,
                mu: fixed,
                theta,
                xi: GridFunction::new(*grid, xi).expect("grid"),
                phi: GridFunction::new(*grid, eig.eigenfunction).expect("grid"),
                margin,
            })
        }
    }
}

/// Singular-value picture of the coupled Jacobian at a bifurcation point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    /// Three smallest singular values, ascending.
    pub smallest: Vec<f64>,
    pub sigma_max: f64,
    pub kernel_tol: f64,
    /// Number of singular values below `kernel_tol`.
    pub kernel_dim: usize,
    /// Angle in radians between the numerical null vector and the
    /// assembled kernel vector.
    pub angle: f64,
    /// Whether the invading component of the null vector has one sign.
    pub invading_sign_definite: bool,
}

/// SVD of the dense Jacobian at `bp`, with `kernel_tol = rel_tol · σ_max`.
pub fn kernel_check(model: &Model, bp: &BifurcationPoint, rel_tol: f64) -> Result<KernelReport, SystemError> {
    let j = jacobian(model, bp.lambda, bp.mu, &bp.base_state()).to_dense();
    let n = bp.theta.grid().n_interior();
    let svd = j.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sigma_max = svd.singular_values[order[2 * n - 1]];
    let kernel_tol = rel_tol * sigma_max;
    let kernel_dim = order.iter().filter(|&&k| svd.singular_values[k] < kernel_tol).count();
    let null: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
    let assembled = bp.kernel();
    let dot: f64 = null.iter().zip(&assembled).map(|(a, b)| a * b).sum();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let cos = (dot.abs() / (norm(&null) * norm(&assembled))).min(1.0);
    // acos loses accuracy near 1; use the sine of the angle instead
    let angle = (1.0 - cos * cos).max(0.0).sqrt().asin();
    let invading = match bp.side {
        Side::U => &null[n..],
        Side::V => &null[..n],
    };
    let invading_sign_definite = invading.iter().all(|&x| x > 0.0) || invading.iter().all(|&x| x < 0.0);
    if kernel_dim > 1 {
        return Err(SystemError::KernelDimension { dim: kernel_dim });
    }
    Ok(KernelReport {
        smallest: order[..3].iter().map(|&k| svd.singular_values[k]).collect(),
        sigma_max,
        kernel_tol,
        kernel_dim,
        angle,
        invading_sign_definite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{CoefficientFn, InteractionFn, SmoothFn};
    use crate::models::{model_ap2, sample_ap1};

    #[test]
    fn kernel_is_simple_and_matches_assembly() {
        let g = Grid::unit(49).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let bp = bifurcation_point(&m, &g, Side::U, 40.0).unwrap();
        let rep = kernel_check(&m, &bp, 1e-6).unwrap();
        assert_eq!(rep.kernel_dim, 1, "{rep:?}");
        assert!(rep.angle < 1e-4, "{rep:?}");
        assert!(rep.invading_sign_definite);
        let m2 = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let bp = bifurcation_point(&m2, &g, Side::V, 15.0).unwrap();
        let rep = kernel_check(&m2, &bp, 1e-6).unwrap();
        assert_eq!(rep.kernel_dim, 1, "{rep:?}");
        assert!(rep.angle < 1e-4, "{rep:?}");
    }

    #[test]
    fn decoupled_model_has_zero_xi() {
        let g = Grid::unit(49).unwrap();
        let mut m = model_ap2(0.0, 0.0, 0.0, SmoothFn::constant(1.0));
        m.diff_uv = CoefficientFn::constant(0.0);
        m.interaction_u = InteractionFn::constant(0.0);
        let bp = bifurcation_point(&m, &g, Side::U, 20.0).unwrap();
        assert!(bp.xi.sup_norm() < 1e-12);
        assert!(bp.phi.min() > 0.0);
    }
}
