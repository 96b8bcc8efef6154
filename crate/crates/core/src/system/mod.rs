//! Discrete coupled system, its Jacobian, and a Newton solver.
//!
//! Fluxes live on faces. With `ū`, `v̄` the averages of the two adjacent
//! nodal values,
//!
//! ```text
//! J^u_{k+1/2} = P(ū, v̄)(u_{k+1} − u_k)/h + S(ū, v̄)(v_{k+1} − v_k)/h
//! ```
//!
//! and the `u`-residual at node `i` is `−(J^u_{i+1/2} − J^u_{i−1/2})/h`
//! minus the reaction. The `v`-equation is assembled the same way from
//! `Q` and `R`. Vectors over both components use block layout `[u; v]`.

pub mod bifurcation;
pub mod continuation;

use crate::discretization::{Grid, GridFunction};
use crate::eigen::{drift_operator_faces, principal_eigenpair, EigenError, EigenOptions, EigenResult};
use crate::linalg::{BandedMatrix, LinalgError, Tridiagonal};
use crate::models::Model;
use crate::semitrivial::{solve_default, NewtonOptions, SemitrivialError};
use nalgebra::DMatrix;
use thiserror::Error;

pub use bifurcation::{bifurcation_point, bifurcation_tangent, kernel_check, BifurcationPoint, KernelReport, Side};
pub use continuation::{continue_branch, Branch, BranchPoint, ContinuationOptions, Termination, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("guess must be nonnegative")]
    NegativeGuess,
    #[error("no positive semitrivial solution at parameter {0}")]
    NoSemitrivial(f64),
    #[error("base semitrivial solution is degenerate (margin {margin:e})")]
    DegenerateBase { margin: f64 },
    #[error("Jacobian kernel has dimension {dim}, expected 1")]
    KernelDimension { dim: usize },
    #[error("state components live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Semitrivial(#[from] SemitrivialError),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
}

/// Newton step, relative to the iterate, below which a component has settled.
const STEP_RTOL: f64 = 1e-6;

/// Sup-norm below which a component counts as zero.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub u: GridFunction,
    pub v: GridFunction,
}

impl CoupledState {
    pub fn new(u: GridFunction, v: GridFunction) -> Result<Self, SystemError> {
        if u.grid() != v.grid() {
            return Err(SystemError::GridMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { u: GridFunction::zeros(*grid), v: GridFunction::zeros(*grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Both components strictly positive at every node and not negligible.
    pub fn is_coexistence(&self) -> bool {
        self.u.min() > 0.0 && self.v.min() > 0.0 && self.u.sup_norm() > BOUNDARY_TOL && self.v.sup_norm() > BOUNDARY_TOL
    }

    /// `[u; v]`.
    pub fn to_block(&self) -> Vec<f64> {
        let mut z = self.u.values().to_vec();
        z.extend_from_slice(self.v.values());
        z
    }

    pub fn from_block(grid: &Grid, z: &[f64]) -> Self {
        let n = grid.n_interior();
        Self {
            u: GridFunction::new(*grid, z[..n].to_vec()).expect("block length"),
            v: GridFunction::new(*grid, z[n..2 * n].to_vec()).expect("block length"),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm().max(self.v.sup_norm())
    }
}

/// Interleaved index of `u_i` is `2i`, of `v_i` is `2i + 1`.
pub(crate) fn interleave(block: &[f64]) -> Vec<f64> {
    let n = block.len() / 2;
    (0..2 * n).map(|k| if k % 2 == 0 { block[k / 2] } else { block[n + k / 2] }).collect()
}

pub(crate) fn deinterleave(z: &[f64]) -> Vec<f64> {
    let n = z.len() / 2;
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = z[2 * i];
        out[n + i] = z[2 * i + 1];
    }
    out
}

/// Discrete residual in block layout `[r_u; r_v]`.
pub fn residual(model: &Model, lambda: f64, mu: f64, state: &CoupledState) -> Vec<f64> {
    let grid = state.grid();
    let n = grid.n_interior();
    let h = grid.spacing();
    let ub = state.u.with_boundary();
    let vb = state.v.with_boundary();
    let mut flux_u = Vec::with_capacity(n + 1);
    let mut flux_v = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (um, vm) = (0.5 * (ub[k] + ub[k + 1]), 0.5 * (vb[k] + vb[k + 1]));
        let (du, dv) = ((ub[k + 1] - ub[k]) / h, (vb[k + 1] - vb[k]) / h);
        flux_u.push(model.diff_uu.eval(um, vm) * du + model.diff_uv.eval(um, vm) * dv);
        flux_v.push(model.diff_vu.eval(um, vm) * du + model.diff_vv.eval(um, vm) * dv);
    }
    let x = grid.nodes();
    let mut r = vec![0.0; 2 * n];
    for i in 0..n {
        let (u, v, xi) = (ub[i + 1], vb[i + 1], x[i]);
        let react_u = (lambda * (model.weight_u)(xi) + model.reaction_u.eval(xi, u) + model.interaction_u.eval(xi, u, v) * v) * u;
        let react_v = (mu * (model.weight_v)(xi) + model.reaction_v.eval(xi, v) + model.interaction_v.eval(xi, u, v) * u) * v;
        r[i] = -(flux_u[i + 1] - flux_u[i]) / h - react_u;
        r[n + i] = -(flux_v[i + 1] - flux_v[i]) / h - react_v;
    }
    r
}

/// `∂r/∂λ` and `∂r/∂μ` in block layout.
pub fn parameter_derivative(model: &Model, state: &CoupledState, free: FreeParameter) -> Vec<f64> {
    let grid = state.grid();
    let n = grid.n_interior();
    let x = grid.nodes();
    let mut d = vec![0.0; 2 * n];
    for i in 0..n {
        match free {
            FreeParameter::Lambda => d[i] = -(model.weight_u)(x[i]) * state.u.values()[i],
            FreeParameter::Mu => d[n + i] = -(model.weight_v)(x[i]) * state.v.values()[i],
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FreeParameter {
    Lambda,
    Mu,
}

/// Jacobian of [`residual`] as four tridiagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledJacobian {
    /// `∂r_u/∂u`.
    pub uu: Tridiagonal,
    /// `∂r_u/∂v`.
    pub uv: Tridiagonal,
    /// `∂r_v/∂u`.
    pub vu: Tridiagonal,
    /// `∂r_v/∂v`.
    pub vv: Tridiagonal,
}

impl CoupledJacobian {
    pub fn dim(&self) -> usize {
        2 * self.uu.dim()
    }

    /// Product with a block vector `[x_u; x_v]`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.uu.dim();
        let (xu, xv) = x.split_at(n);
        let mut y = self.uu.apply(xu)?;
        for (a, b) in y.iter_mut().zip(self.uv.apply(xv)?) {
            *a += b;
        }
        let mut yv = self.vu.apply(xu)?;
        for (a, b) in yv.iter_mut().zip(self.vv.apply(xv)?) {
            *a += b;
        }
        y.extend(yv);
        Ok(y)
    }

    /// Banded form in interleaved ordering, bandwidths `(3, 3)`.
    pub fn to_banded(&self) -> BandedMatrix {
        let n = self.uu.dim();
        let mut b = BandedMatrix::zeros(2 * n, 3, 3);
        let blocks = [(&self.uu, 0, 0), (&self.uv, 0, 1), (&self.vu, 1, 0), (&self.vv, 1, 1)];
        for (t, ro, co) in blocks {
            for i in 0..n {
                for j in i.saturating_sub(1)..(i + 2).min(n) {
                    let val = t.get(i, j);
                    if val != 0.0 {
                        b.set(2 * i + ro, 2 * j + co, val);
                    }
                }
            }
        }
        b
    }

    /// Dense form in block ordering `[u; v]`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.uu.dim();
        DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let t = match (i < n, j < n) {
                (true, true) => &self.uu,
                (true, false) => &self.uv,
                (false, true) => &self.vu,
                (false, false) => &self.vv,
            };
            t.get(i % n, j % n)
        })
    }
}

/// Per-face partial derivatives of a flux `D₁(ū, v̄) Δu/h + D₂(ū, v̄) Δv/h`
/// with respect to the four nodal values it touches.
struct FaceDerivs {
    du_left: f64,
    du_right: f64,
    dv_left: f64,
    dv_right: f64,
}

fn face_derivs(
    d1: &crate::functions::CoefficientFn,
    d2: &crate::functions::CoefficientFn,
    um: f64,
    vm: f64,
    gu: f64,
    gv: f64,
    h: f64,
) -> FaceDerivs {
    // ∂/∂u of either node through the averaged arguments
    let through_u = 0.5 * (d1.du(um, vm) * gu + d2.du(um, vm) * gv);
    let through_v = 0.5 * (d1.dv(um, vm) * gu + d2.dv(um, vm) * gv);
    let (a, b) = (d1.eval(um, vm) / h, d2.eval(um, vm) / h);
    FaceDerivs {
        du_left: through_u - a,
        du_right: through_u + a,
        dv_left: through_v - b,
        dv_right: through_v + b,
    }
}

pub fn jacobian(model: &Model, lambda: f64, mu: f64, state: &CoupledState) -> CoupledJacobian {
    let grid = state.grid();
    let n = grid.n_interior();
    let h = grid.spacing();
    let ub = state.u.with_boundary();
    let vb = state.v.with_boundary();
    let mut fu = Vec::with_capacity(n + 1);
    let mut fv = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (um, vm) = (0.5 * (ub[k] + ub[k + 1]), 0.5 * (vb[k] + vb[k + 1]));
        let (gu, gv) = ((ub[k + 1] - ub[k]) / h, (vb[k + 1] - vb[k]) / h);
        fu.push(face_derivs(&model.diff_uu, &model.diff_uv, um, vm, gu, gv, h));
        fv.push(face_derivs(&model.diff_vu, &model.diff_vv, um, vm, gu, gv, h));
    }
    // row i touches faces i (left) and i + 1 (right) in boundary-inclusive numbering
    let assemble = |faces: &[FaceDerivs], wrt_u: bool| {
        let pick = |f: &FaceDerivs, left: bool| match (wrt_u, left) {
            (true, true) => f.du_left,
            (true, false) => f.du_right,
            (false, true) => f.dv_left,
            (false, false) => f.dv_right,
        };
        let diag: Vec<f64> = (0..n).map(|i| (-pick(&faces[i + 1], true) + pick(&faces[i], false)) / h).collect();
        let lower: Vec<f64> = (1..n).map(|i| pick(&faces[i], true) / h).collect();
        let upper: Vec<f64> = (0..n - 1).map(|i| -pick(&faces[i + 1], false) / h).collect();
        (lower, diag, upper)
    };
    let x = grid.nodes();
    let (l, mut d_uu, up) = assemble(&fu, true);
    let (l2, mut d_uv, up2) = assemble(&fu, false);
    let (l3, mut d_vu, up3) = assemble(&fv, true);
    let (l4, mut d_vv, up4) = assemble(&fv, false);
    for i in 0..n {
        let (u, v, xi) = (ub[i + 1], vb[i + 1], x[i]);
        let (fi_u, gi_v) = (model.interaction_u.eval(xi, u, v), model.interaction_v.eval(xi, u, v));
        d_uu[i] -= lambda * (model.weight_u)(xi)
            + model.reaction_u.eval(xi, u)
            + u * model.reaction_u.dw(xi, u)
            + fi_u * v
            + model.interaction_u.du(xi, u, v) * u * v;
        d_uv[i] -= (fi_u + model.interaction_u.dv(xi, u, v) * v) * u;
        d_vu[i] -= (gi_v + model.interaction_v.du(xi, u, v) * u) * v;
        d_vv[i] -= mu * (model.weight_v)(xi)
            + model.reaction_v.eval(xi, v)
            + v * model.reaction_v.dw(xi, v)
            + gi_v * u
            + model.interaction_v.dv(xi, u, v) * u * v;
    }
    let tri = |l, d, u| Tridiagonal::new(l, d, u).expect("consistent lengths");
    CoupledJacobian { uu: tri(l, d_uu, up), uv: tri(l2, d_uv, up2), vu: tri(l3, d_vu, up3), vv: tri(l4, d_vv, up4) }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct CoupledNewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for CoupledNewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 60, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NotFound {
    /// Converged to a state with a vanishing or sign-changing component.
    ConvergedToBoundary,
    Diverged,
}

#[derive(Debug, Clone)]
pub enum CoexistenceOutcome {
    Found { state: CoupledState, residual: f64 },
    NotFound { reason: NotFound, residual: f64 },
}

/// Damped Newton for a coexistence state at `(λ, μ)`.
pub fn newton_coexistence(
    model: &Model,
    lambda: f64,
    mu: f64,
    guess: &CoupledState,
    opts: &CoupledNewtonOptions,
) -> Result<CoexistenceOutcome, SystemError> {
    if guess.u.min() < 0.0 || guess.v.min() < 0.0 {
        return Err(SystemError::NegativeGuess);
    }
    let grid = *guess.grid();
    let mut z = guess.to_block();
    let mut r = residual(model, lambda, mu, guess);
    let mut rn = sup(&r);
    let n = grid.n_interior();
    for _ in 0..opts.max_iter {
        let state = CoupledState::from_block(&grid, &z);
        let lu = match jacobian(model, lambda, mu, &state).to_banded().lu() {
            Ok(lu) => lu,
            Err(_) if rn < opts.tol => break,
            Err(_) => return Ok(CoexistenceOutcome::NotFound { reason: NotFound::Diverged, residual: rn }),
        };
        let step = deinterleave(&lu.solve(&interleave(&r))?);
        // each component must have settled, not just the residual
        let settled = |a: &[f64], s: &[f64]| sup(a) < BOUNDARY_TOL || sup(s) <= STEP_RTOL * sup(a);
        if rn < opts.tol && settled(&z[..n], &step[..n]) && settled(&z[n..], &step[n..]) {
            break;
        }
        let mut t = 1.0;
        for halving in 0..=opts.max_halvings {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let tr = residual(model, lambda, mu, &CoupledState::from_block(&grid, &trial));
            let tn = sup(&tr);
            if tn.is_finite() && (tn < rn || halving == opts.max_halvings) {
                z = trial;
                r = tr;
                rn = tn;
                break;
            }
            t *= 0.5;
        }
        if !rn.is_finite() || sup(&z) > 1e10 {
            return Ok(CoexistenceOutcome::NotFound { reason: NotFound::Diverged, residual: rn });
        }
    }
    if rn >= opts.tol {
        return Err(SystemError::NewtonDivergence { iterations: opts.max_iter, residual: rn });
    }
    let state = CoupledState::from_block(&grid, &z);
    if state.is_coexistence() {
        Ok(CoexistenceOutcome::Found { state, residual: rn })
    } else {
        Ok(CoexistenceOutcome::NotFound { reason: NotFound::ConvergedToBoundary, residual: rn })
    }
}

/// Positive solution `θ_λ` of the `u`-equation with `v ≡ 0`, or `None`
/// when only the trivial solution exists.
///
/// The scalar solver works with the Kirchhoff form; the result is then
/// polished with Newton on this module's own discretization so that
/// `(θ_λ, 0)` solves the coupled residual to rounding.
pub fn semitrivial_u(model: &Model, grid: &Grid, lambda: f64) -> Result<Option<GridFunction>, SystemError> {
    let problem = model.semitrivial_u(grid, lambda);
    let Some(theta) = solve_default(&problem, &NewtonOptions::default())?.positive() else {
        return Ok(None);
    };
    let zero = GridFunction::zeros(*grid);
    let polished = polish(grid, theta, |w| {
        let s = CoupledState { u: w.clone(), v: zero.clone() };
        let r = residual(model, lambda, 0.0, &s);
        (r[..grid.n_interior()].to_vec(), jacobian(model, lambda, 0.0, &s).uu)
    })?;
    Ok(Some(polished))
}

/// Positive solution `θ_μ` of the `v`-equation with `u ≡ 0`.
pub fn semitrivial_v(model: &Model, grid: &Grid, mu: f64) -> Result<Option<GridFunction>, SystemError> {
    let problem = model.semitrivial_v(grid, mu);
    let Some(theta) = solve_default(&problem, &NewtonOptions::default())?.positive() else {
        return Ok(None);
    };
    let zero = GridFunction::zeros(*grid);
    let polished = polish(grid, theta, |w| {
        let s = CoupledState { u: zero.clone(), v: w.clone() };
        let r = residual(model, 0.0, mu, &s);
        (r[grid.n_interior()..].to_vec(), jacobian(model, 0.0, mu, &s).vv)
    })?;
    Ok(Some(polished))
}

fn polish(
    grid: &Grid,
    start: GridFunction,
    eval: impl Fn(&GridFunction) -> (Vec<f64>, Tridiagonal),
) -> Result<GridFunction, SystemError> {
    let mut w = start;
    let (mut r, mut j) = eval(&w);
    let mut rn = sup(&r);
    for _ in 0..20 {
        if rn < 1e-12 * (1.0 + j.norm_inf() * w.sup_norm()) {
            break;
        }
        let step = j.to_banded().lu()?.solve(&r)?;
        let trial = GridFunction::new(*grid, w.values().iter().zip(&step).map(|(a, s)| a - s).collect())
            .expect("same grid");
        let (tr, tj) = eval(&trial);
        let tn = sup(&tr);
        if !(tn < rn) {
            break;
        }
        w = trial;
        r = tr;
        j = tj;
        rn = tn;
    }
    Ok(w)
}

/// Principal eigenpair governing invasion of `v` at the base `(θ, 0)`:
/// `−(Q_v(θ,0) θ′ φ + R(θ,0) φ′)′ − (g(x,0) + G(x,θ,0) θ) φ = σ b φ`, with
/// face coefficients taken exactly as in [`jacobian`].
pub fn invasion_eigen_v(model: &Model, theta: &GridFunction) -> Result<EigenResult, SystemError> {
    let grid = theta.grid();
    let tb = theta.with_boundary();
    let mid: Vec<f64> = tb.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let m1: Vec<f64> = mid.iter().map(|&s| model.diff_vu.dv(s, 0.0)).collect();
    let m2: Vec<f64> = mid.iter().map(|&s| model.diff_vv.eval(s, 0.0)).collect();
    let x = grid.nodes();
    let pot: Vec<f64> = (0..x.len())
        .map(|i| {
            let t = theta.values()[i];
            -(model.reaction_v.eval(x[i], 0.0) + model.interaction_v.eval(x[i], t, 0.0) * t)
        })
        .collect();
    let op = drift_operator_faces(grid, &m1, &m2, theta, &pot)?;
    let w = crate::discretization::assemble_weight(grid, model.weight_v_on(grid).values())
        .map_err(EigenError::from)?;
    Ok(principal_eigenpair(&op, &w, &EigenOptions::default())?)
}

/// Symmetric counterpart of [`invasion_eigen_v`] at the base `(0, θ)`.
pub fn invasion_eigen_u(model: &Model, theta: &GridFunction) -> Result<EigenResult, SystemError> {
    let grid = theta.grid();
    let tb = theta.with_boundary();
    let mid: Vec<f64> = tb.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let m1: Vec<f64> = mid.iter().map(|&s| model.diff_uv.du(0.0, s)).collect();
    let m2: Vec<f64> = mid.iter().map(|&s| model.diff_uu.eval(0.0, s)).collect();
    let x = grid.nodes();
    let pot: Vec<f64> = (0..x.len())
        .map(|i| {
            let t = theta.values()[i];
            -(model.reaction_u.eval(x[i], 0.0) + model.interaction_u.eval(x[i], 0.0, t) * t)
        })
        .collect();
    let op = drift_operator_faces(grid, &m1, &m2, theta, &pot)?;
    let w = crate::discretization::assemble_weight(grid, model.weight_u_on(grid).values())
        .map_err(EigenError::from)?;
    Ok(principal_eigenpair(&op, &w, &EigenOptions::default())?)
}

/// Principal eigenvalues of the linearization at the trivial state:
/// `(σ₁[−(P(0,0)·′)′ − f(x,0); a], σ₁[−(R(0,0)·′)′ − g(x,0); b])`.
pub fn trivial_thresholds(model: &Model, grid: &Grid) -> Result<(f64, f64), SystemError> {
    let zero = CoupledState::zeros(grid);
    let j = jacobian(model, 0.0, 0.0, &zero);
    let wu = crate::discretization::assemble_weight(grid, model.weight_u_on(grid).values()).map_err(EigenError::from)?;
    let wv = crate::discretization::assemble_weight(grid, model.weight_v_on(grid).values()).map_err(EigenError::from)?;
    let opts = EigenOptions::default();
    Ok((principal_eigenpair(&j.uu, &wu, &opts)?.sigma1, principal_eigenpair(&j.vv, &wv, &opts)?.sigma1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::SmoothFn;
    use crate::models::{model_ap2, sample_ap1};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::unit(49).unwrap()
    }

    #[test]
    fn trivial_state_has_zero_residual_and_decoupled_jacobian() {
        let g = grid();
        let m = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let z = CoupledState::zeros(&g);
        assert!(sup(&residual(&m, 3.0, 4.0, &z)) == 0.0);
        let j = jacobian(&m, 3.0, 4.0, &z);
        let lap = crate::discretization::laplacian(&g);
        assert_eq!(j.uv.norm_inf(), 0.0);
        assert_eq!(j.vu.norm_inf(), 0.0);
        let expect_u = lap.add_diagonal(&vec![-3.0; 49]).unwrap();
        let expect_v = lap.add_diagonal(&vec![-4.0; 49]).unwrap();
        assert!(j.uu.add(&expect_u.scaled(-1.0)).unwrap().norm_inf() < 1e-9);
        assert!(j.vv.add(&expect_v.scaled(-1.0)).unwrap().norm_inf() < 1e-9);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = grid();
        let m = sample_ap1(1.0, 1.0);
        let s = CoupledState {
            u: g.sample(|x| 2.0 * (PI * x).sin() + 0.3 * x * (1.0 - x)),
            v: g.sample(|x| 1.5 * (PI * x).sin().powi(2)),
        };
        let j = jacobian(&m, 20.0, 12.0, &s);
        let dir: Vec<f64> = (0..98).map(|k| ((k as f64) * 0.7).sin()).collect();
        let jd = j.apply(&dir).unwrap();
        let eps = 1e-6;
        let z = s.to_block();
        let shift = |sgn: f64| {
            let zz: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + sgn * eps * b).collect();
            residual(&m, 20.0, 12.0, &CoupledState::from_block(&g, &zz))
        };
        let (rp, rm) = (shift(1.0), shift(-1.0));
        let scale = sup(&jd);
        for k in 0..98 {
            assert!(((rp[k] - rm[k]) / (2.0 * eps) - jd[k]).abs() < 1e-5 * scale);
        }
        let banded = j.to_banded().apply(&interleave(&dir)).unwrap();
        assert!(sup(&deinterleave(&banded).iter().zip(&jd).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-9 * scale);
    }

    #[test]
    fn newton_from_zero_reports_boundary() {
        let g = grid();
        let m = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let out = newton_coexistence(&m, 15.0, 15.0, &CoupledState::zeros(&g), &Default::default()).unwrap();
        assert!(matches!(out, CoexistenceOutcome::NotFound { reason: NotFound::ConvergedToBoundary, .. }));
    }

    #[test]
    fn semitrivial_embeds_and_linearization_is_triangular() {
        let g = grid();
        let m = sample_ap1(1.0, 1.0);
        let theta = semitrivial_u(&m, &g, 30.0).unwrap().unwrap();
        let s = CoupledState { u: theta, v: GridFunction::zeros(g) };
        for mu in [-3.0, 5.0, 40.0] {
            assert!(sup(&residual(&m, 30.0, mu, &s)) < 1e-7);
            assert!(jacobian(&m, 30.0, mu, &s).vu.norm_inf() < 1e-8);
        }
        assert!(semitrivial_u(&m, &g, 5.0).unwrap().is_none());
    }

    #[test]
    fn trivial_thresholds_scale_with_diffusion() {
        let g = grid();
        let m = sample_ap1(1.0, 1.0);
        let (tu, tv) = trivial_thresholds(&m, &g).unwrap();
        assert!((tu - 2.0 * tv).abs() < 1e-8 * tv);
    }
}
