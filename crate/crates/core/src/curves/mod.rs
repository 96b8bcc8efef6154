//! Bifurcation curves `λ ↦ μ_λ` and `μ ↦ λ_μ` and coexistence region maps.
//!
//! `μ_λ` is the principal eigenvalue of the `v`-equation linearized at
//! `(θ_λ, 0)`; `λ_μ` is its counterpart at `(0, θ_μ)`. Each value is computed
//! in drift form, which is the form the coupled Jacobian sees, and again in
//! gauge form after the substitution `φ = e^{−h(θ)} z`. The two agree up to
//! discretization error.

pub mod region;

use crate::discretization::Grid;
use crate::eigen::{transform_identity_pair, EigenError, EigenOptions, EigenResult};
use crate::models::{Family, Model};
use crate::system::{invasion_eigen_u, invasion_eigen_v, semitrivial_u, semitrivial_v, trivial_thresholds, SystemError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use region::{probe_cell, random_seeds, region_map, Cell, CellVerdict, ProbeOptions, RegionMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("parameter grid must be increasing")]
    UnsortedGrid,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    #[serde(rename = "mu_lambda")]
    MuLambda,
    #[serde(rename = "lambda_mu")]
    LambdaMu,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::MuLambda => "mu_lambda",
            CurveKind::LambdaMu => "lambda_mu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub param: f64,
    /// Drift-form value, or the extension below the semitrivial threshold.
    pub value: f64,
    /// Gauge-form value when a semitrivial solution exists.
    pub gauge_value: Option<f64>,
    pub gap: Option<f64>,
    /// Whether `value` is the extension convention.
    pub extended: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub kind: CurveKind,
    pub label: String,
    pub n_interior: usize,
    pub length: f64,
    pub points: Vec<CurvePoint>,
}

impl CurveTable {
    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Piecewise-linear interpolation, constant beyond the end points.
    pub fn interpolate(&self, p: f64) -> f64 {
        let pts = &self.points;
        if p <= pts[0].param {
            return pts[0].value;
        }
        if p >= pts[pts.len() - 1].param {
            return pts[pts.len() - 1].value;
        }
        let k = pts.partition_point(|q| q.param <= p) - 1;
        let (a, b) = (&pts[k], &pts[k + 1]);
        a.value + (b.value - a.value) * (p - a.param) / (b.param - a.param)
    }
}

/// Value of `μ_λ` below the `u`-threshold.
fn mu_extension(model: &Model, grid: &Grid) -> Result<f64, SystemError> {
    Ok(trivial_thresholds(model, grid)?.1)
}

/// Value of `λ_μ` below the `v`-threshold.
fn lambda_extension(model: &Model, grid: &Grid) -> Result<f64, SystemError> {
    Ok(match model.family {
        Family::PredatorPrey(_) => 0.0,
        _ => trivial_thresholds(model, grid)?.0,
    })
}

/// Drift-form and gauge-form eigenpairs of the invasion operator behind
/// `kind` at `param`, both on nodal coefficients, or `None` below the
/// semitrivial threshold.
pub fn invasion_forms(
    model: &Model,
    grid: &Grid,
    kind: CurveKind,
    param: f64,
    opts: &EigenOptions,
) -> Result<Option<(EigenResult, EigenResult)>, CurveError> {
    let x = grid.nodes();
    let forms = match kind {
        CurveKind::MuLambda => {
            let Some(theta) = semitrivial_u(model, grid, param)? else { return Ok(None) };
            let pot: Vec<f64> = (0..x.len())
                .map(|i| {
                    let t = theta.values()[i];
                    -(model.reaction_v.eval(x[i], 0.0) + model.interaction_v.eval(x[i], t, 0.0) * t)
                })
                .collect();
            let m1 = |s: f64| model.diff_vu.dv(s, 0.0);
            let m2 = |s: f64| model.diff_vv.eval(s, 0.0);
            transform_identity_pair(grid, &m1, &m2, &theta, &pot, model.weight_v_on(grid).values(), opts)?
        }
        CurveKind::LambdaMu => {
            let Some(theta) = semitrivial_v(model, grid, param)? else { return Ok(None) };
            let pot: Vec<f64> = (0..x.len())
                .map(|i| {
                    let t = theta.values()[i];
                    -(model.reaction_u.eval(x[i], 0.0) + model.interaction_u.eval(x[i], 0.0, t) * t)
                })
                .collect();
            let m1 = |s: f64| model.diff_uv.du(0.0, s);
            let m2 = |s: f64| model.diff_uu.eval(0.0, s);
            transform_identity_pair(grid, &m1, &m2, &theta, &pot, model.weight_u_on(grid).values(), opts)?
        }
    };
    Ok(Some(forms))
}

fn curve_point(model: &Model, grid: &Grid, kind: CurveKind, param: f64) -> Result<CurvePoint, CurveError> {
    let theta = match kind {
        CurveKind::MuLambda => semitrivial_u(model, grid, param)?,
        CurveKind::LambdaMu => semitrivial_v(model, grid, param)?,
    };
    let Some(theta) = theta else {
        let value = match kind {
            CurveKind::MuLambda => mu_extension(model, grid)?,
            CurveKind::LambdaMu => lambda_extension(model, grid)?,
        };
        return Ok(CurvePoint { param, value, gauge_value: None, gap: None, extended: true });
    };
    let value = match kind {
        CurveKind::MuLambda => invasion_eigen_v(model, &theta)?.sigma1,
        CurveKind::LambdaMu => invasion_eigen_u(model, &theta)?.sigma1,
    };
    let (_, gauge) = invasion_forms(model, grid, kind, param, &EigenOptions::default())?.expect("semitrivial state exists");
    Ok(CurvePoint { param, value, gauge_value: Some(gauge.sigma1), gap: Some((value - gauge.sigma1).abs()), extended: false })
}

pub fn mu_lambda(model: &Model, grid: &Grid, lambda: f64) -> Result<CurvePoint, CurveError> {
    curve_point(model, grid, CurveKind::MuLambda, lambda)
}

pub fn lambda_mu(model: &Model, grid: &Grid, mu: f64) -> Result<CurvePoint, CurveError> {
    curve_point(model, grid, CurveKind::LambdaMu, mu)
}

/// Evaluates one curve at every parameter in `params`, in parallel.
pub fn curve_table(model: &Model, grid: &Grid, kind: CurveKind, params: &[f64]) -> Result<CurveTable, CurveError> {
    if params.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CurveError::UnsortedGrid);
    }
    let points = params
        .par_iter()
        .map(|&p| match kind {
            CurveKind::MuLambda => mu_lambda(model, grid, p),
            CurveKind::LambdaMu => lambda_mu(model, grid, p),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable { kind, label: model.label.clone(), n_interior: grid.n_interior(), length: grid.length(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::SmoothFn;
    use crate::models::{model_ap2, sample_ap1};

    #[test]
    fn extensions() {
        let g = Grid::unit(49).unwrap();
        let m2 = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let l1 = trivial_thresholds(&m2, &g).unwrap().0;
        let p = mu_lambda(&m2, &g, l1 - 0.5).unwrap();
        assert!(p.extended && p.value == l1);
        let p = mu_lambda(&m2, &g, l1 + 1.0).unwrap();
        assert!(!p.extended && p.value > l1);
        let m1 = sample_ap1(1.0, 1.0);
        let p = lambda_mu(&m1, &g, l1 - 0.5).unwrap();
        assert!(p.extended && p.value == 0.0);
    }

    #[test]
    fn decoupled_limit_gives_lambda1() {
        let g = Grid::unit(49).unwrap();
        let m = model_ap2(0.0, 0.0, 1.0, SmoothFn::constant(1.0));
        let l1 = trivial_thresholds(&m, &g).unwrap().0;
        let p = lambda_mu(&m, &g, l1 + 3.0).unwrap();
        assert!((p.value - l1).abs() < 1e-8 * l1);
    }

    #[test]
    fn predator_prey_mu_lambda_decreases() {
        let g = Grid::unit(49).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let t = curve_table(&m, &g, CurveKind::MuLambda, &[25.0, 30.0, 40.0]).unwrap();
        let v = t.values();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!((t.interpolate(27.5) - 0.5 * (v[0] + v[1])).abs() < 1e-12);
    }
}
