//! Coefficient bundles for the coupled system
//!
//! ```text
//! −(P u′ + S v′)′ = λ a(x) u + f(x, u) u + F(x, u, v) v u
//! −(Q u′ + R v′)′ = μ b(x) v + g(x, v) v + G(x, u, v) u v
//! ```
//!
//! and the two application families: a predator–prey system with
//! nonlinear cross-diffusion in the prey, and a chemotaxis competition
//! system.

use crate::discretization::{Grid, GridFunction};
use crate::functions::{CoefficientFn, Fn1, InteractionFn, ReactionFn, SmoothFn};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::semitrivial::ScalarProblem;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("operation needs one of the application families")]
    UnsupportedModel,
    #[error("floor constant {name} must be positive, got {value}")]
    NonPositiveFloor { name: &'static str, value: f64 },
    #[error("unknown function name {0:?}")]
    UnknownFunction(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Lower bounds asserted for the diffusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Floors {
    /// Lower bound on `|PR − QS|`.
    pub det: f64,
    pub p: f64,
    pub r: f64,
}

/// Constants of the predator–prey family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredatorPreyFloors {
    /// `A ≥ a_min`.
    pub a_min: f64,
    /// `G′ ≥ g_min`.
    pub g_min: f64,
    /// `h_min ≤ H ≤ h_max`.
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone)]
pub struct PredatorPrey {
    pub b: f64,
    pub c: f64,
    pub a_fn: SmoothFn,
    pub g_fn: SmoothFn,
    pub h_fn: SmoothFn,
    pub floors: PredatorPreyFloors,
}

impl PredatorPrey {
    /// `G⁻¹(G(λ) H_max/H_min)`, the sup-norm bound on the prey.
    pub fn prey_bound(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        let target = self.g_fn.eval(lambda) * self.floors.h_max / self.floors.h_min;
        let g0 = self.g_fn.eval(0.0);
        let mut hi = lambda.max(1.0);
        while self.g_fn.eval(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g_fn.eval(mid) - g0 < target - g0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone)]
pub struct Chemotaxis {
    pub chi: f64,
    pub b: f64,
    pub c: f64,
    pub sensitivity: SmoothFn,
}

impl Chemotaxis {
    /// `∫₀^z f`.
    pub fn sensitivity_primitive(&self, z: f64) -> Result<f64, QuadratureError> {
        adaptive_simpson(&|s: f64| self.sensitivity.eval(s), 0.0, z, 1e-12)
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    Generic,
    PredatorPrey(PredatorPrey),
    Chemotaxis(Chemotaxis),
}

/// Coefficients of the coupled system. `λ`, `μ` are supplied at call sites.
#[derive(Clone)]
pub struct Model {
    pub label: String,
    pub family: Family,
    /// `P`: flux of `u` per unit gradient of `u`.
    pub diff_uu: CoefficientFn,
    /// `S`: flux of `u` per unit gradient of `v`.
    pub diff_uv: CoefficientFn,
    /// `Q`: flux of `v` per unit gradient of `u`.
    pub diff_vu: CoefficientFn,
    /// `R`: flux of `v` per unit gradient of `v`.
    pub diff_vv: CoefficientFn,
    pub reaction_u: ReactionFn,
    pub reaction_v: ReactionFn,
    pub interaction_u: InteractionFn,
    pub interaction_v: InteractionFn,
    pub weight_u: Fn1,
    pub weight_v: Fn1,
    pub floors: Floors,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model").field("label", &self.label).field("family", &self.family).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// `Q(u, 0) = 0`.
    CrossVanishesAtZeroV,
    /// `S(0, v) = 0`.
    CrossVanishesAtZeroU,
    /// `|PR − QS| ≥ δ₀`.
    Determinant,
    SelfDiffusionU,
    SelfDiffusionV,
    /// `f(x, 0) = 0`.
    ReactionUAtZero,
    /// `g(x, 0) = 0`.
    ReactionVAtZero,
    WeightU,
    WeightV,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 9] = [
        Hypothesis::CrossVanishesAtZeroV,
        Hypothesis::CrossVanishesAtZeroU,
        Hypothesis::Determinant,
        Hypothesis::SelfDiffusionU,
        Hypothesis::SelfDiffusionV,
        Hypothesis::ReactionUAtZero,
        Hypothesis::ReactionVAtZero,
        Hypothesis::WeightU,
        Hypothesis::WeightV,
    ];
}

/// Worst offending sample of one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    /// `(u, v)` or `(x, 0)` depending on the hypothesis.
    pub at: (f64, f64),
    /// Amount by which the inequality fails.
    pub excess: f64,
}

/// A-priori sup-norm bounds for coexistence states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub u_bound: f64,
    pub v_bound: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nonexistence {
    ProvenEmpty,
    Unknown,
}

const EQ_TOL: f64 = 1e-12;

impl Model {
    pub fn weight_u_on(&self, grid: &Grid) -> GridFunction {
        grid.sample(|x| (self.weight_u)(x))
    }

    pub fn weight_v_on(&self, grid: &Grid) -> GridFunction {
        grid.sample(|x| (self.weight_v)(x))
    }

    /// The `u`-equation at `v = 0`: `−(P(w, 0) w′)′ = λ a w + f(x, w) w`.
    pub fn semitrivial_u(&self, grid: &Grid, lambda: f64) -> ScalarProblem {
        let p = self.diff_uu.clone();
        let (p1, p2) = (p.clone(), p.clone());
        ScalarProblem {
            diffusion: SmoothFn::new(
                move |s| p.eval(s, 0.0),
                move |s| p1.du(s, 0.0),
                move |s| central_difference(|t| p2.du(t, 0.0), s),
            ),
            reaction: self.reaction_u.clone(),
            gamma: lambda,
            weight: self.weight_u_on(grid),
        }
    }

    /// The `v`-equation at `u = 0`: `−(R(0, w) w′)′ = μ b w + g(x, w) w`.
    pub fn semitrivial_v(&self, grid: &Grid, mu: f64) -> ScalarProblem {
        let r = self.diff_vv.clone();
        let (r1, r2) = (r.clone(), r.clone());
        ScalarProblem {
            diffusion: SmoothFn::new(
                move |s| r.eval(0.0, s),
                move |s| r1.dv(0.0, s),
                move |s| central_difference(|t| r2.dv(0.0, t), s),
            ),
            reaction: self.reaction_v.clone(),
            gamma: mu,
            weight: self.weight_v_on(grid),
        }
    }

    /// `h₁(z) = ∫₀^z Q_v(s, 0)/R(s, 0) ds`.
    pub fn gauge_h1(&self, z: f64) -> Result<f64, ModelError> {
        let f = |s: f64| self.diff_vu.dv(s, 0.0) / self.diff_vv.eval(s, 0.0);
        Ok(adaptive_simpson(&f, 0.0, z, 1e-10)?)
    }

    /// `h₂(z) = ∫₀^z S_u(0, s)/P(0, s) ds`.
    pub fn gauge_h2(&self, z: f64) -> Result<f64, ModelError> {
        let f = |s: f64| self.diff_uv.du(0.0, s) / self.diff_uu.eval(0.0, s);
        Ok(adaptive_simpson(&f, 0.0, z, 1e-10)?)
    }

    /// Samples the structural hypotheses on `[0, u_max] × [0, v_max]` and on
    /// `[0, length]` for the `x`-dependent ones. Returns the worst sample of
    /// each violated hypothesis.
    pub fn hypothesis_check(&self, u_max: f64, v_max: f64, length: f64, samples: usize) -> Vec<Violation> {
        let samples = samples.max(2);
        let grid1 = |max: f64| (0..samples).map(move |k| max * k as f64 / (samples - 1) as f64);
        let mut worst: Vec<Violation> = Vec::new();
        let mut record = |hypothesis: Hypothesis, at: (f64, f64), excess: f64| {
            if !(excess <= 0.0) {
                let excess = if excess.is_nan() { f64::INFINITY } else { excess };
                match worst.iter_mut().find(|v| v.hypothesis == hypothesis) {
                    Some(v) if v.excess < excess => *v = Violation { hypothesis, at, excess },
                    Some(_) => {}
                    None => worst.push(Violation { hypothesis, at, excess }),
                }
            }
        };
        for u in grid1(u_max) {
            record(Hypothesis::CrossVanishesAtZeroV, (u, 0.0), self.diff_vu.eval(u, 0.0).abs() - EQ_TOL);
            for v in grid1(v_max) {
                let (p, q, r, s) = (
                    self.diff_uu.eval(u, v),
                    self.diff_vu.eval(u, v),
                    self.diff_vv.eval(u, v),
                    self.diff_uv.eval(u, v),
                );
                record(Hypothesis::Determinant, (u, v), self.floors.det - (p * r - q * s).abs() - EQ_TOL);
                record(Hypothesis::SelfDiffusionU, (u, v), self.floors.p - p - EQ_TOL);
                record(Hypothesis::SelfDiffusionV, (u, v), self.floors.r - r - EQ_TOL);
            }
        }
        for v in grid1(v_max) {
            record(Hypothesis::CrossVanishesAtZeroU, (0.0, v), self.diff_uv.eval(0.0, v).abs() - EQ_TOL);
        }
        for x in grid1(length) {
            record(Hypothesis::ReactionUAtZero, (x, 0.0), self.reaction_u.eval(x, 0.0).abs() - EQ_TOL);
            record(Hypothesis::ReactionVAtZero, (x, 0.0), self.reaction_v.eval(x, 0.0).abs() - EQ_TOL);
            record(Hypothesis::WeightU, (x, 0.0), -(self.weight_u)(x));
            record(Hypothesis::WeightV, (x, 0.0), -(self.weight_v)(x));
        }
        worst
    }

    pub fn apriori_bounds(&self, lambda: f64, mu: f64) -> Result<BoundReport, ModelError> {
        match &self.family {
            Family::PredatorPrey(pp) => {
                let u_bound = pp.prey_bound(lambda);
                let v_bound = mu + pp.c * u_bound;
                let valid = u_bound > 0.0 && v_bound > 0.0 && u_bound.is_finite() && v_bound.is_finite();
                Ok(BoundReport { u_bound, v_bound, valid })
            }
            Family::Chemotaxis(ch) => {
                let v_bound = mu;
                let gauge = (ch.chi * ch.sensitivity_primitive(mu.max(0.0))?).exp();
                let u_bound = (lambda + ch.b.abs() * mu) * gauge;
                let valid = u_bound > 0.0 && v_bound > 0.0 && u_bound.is_finite();
                Ok(BoundReport { u_bound, v_bound, valid })
            }
            Family::Generic => Err(ModelError::UnsupportedModel),
        }
    }

    /// Parameter sets where coexistence states are ruled out analytically.
    /// `lambda1` is the principal Dirichlet eigenvalue of `−Δ` on the grid.
    pub fn nonexistence(&self, lambda: f64, mu: f64, lambda1: f64) -> Result<Nonexistence, ModelError> {
        let empty = match &self.family {
            Family::PredatorPrey(pp) => lambda <= 0.0 || mu <= lambda1 - pp.c * pp.prey_bound(lambda),
            Family::Chemotaxis(ch) => mu <= lambda1 || lambda <= ch.low_lambda_threshold(mu, lambda1)?,
            Family::Generic => return Err(ModelError::UnsupportedModel),
        };
        Ok(if empty { Nonexistence::ProvenEmpty } else { Nonexistence::Unknown })
    }
}

impl Chemotaxis {
    /// Value `C(μ)` such that no coexistence state exists for `λ ≤ C(μ)`
    /// when `μ > λ₁`.
    pub fn low_lambda_threshold(&self, mu: f64, lambda1: f64) -> Result<f64, QuadratureError> {
        let e = (self.chi * self.sensitivity_primitive(mu.max(0.0))?).exp();
        if self.b <= 0.0 {
            return Ok(lambda1 / e);
        }
        // principal eigenvalue of −Δ − bμe^{χF(μ)} on the same grid
        let shifted = lambda1 - self.b * mu * e;
        Ok(if shifted > 0.0 {
            lambda1 / e - self.b * mu
        } else if shifted == 0.0 {
            0.0
        } else {
            shifted
        })
    }
}

fn central_difference(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let eps = 1e-5 * s.abs().max(1.0);
    (f(s + eps) - f(s - eps)) / (2.0 * eps)
}

fn unit_weight() -> Fn1 {
    Arc::new(|_| 1.0)
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveFloor { name, value })
    }
}

/// Predator–prey model
///
/// ```text
/// −(A(v)G′(u)H(v) u′ + A(v)G(u)H′(v) v′)′ = u(λ − u − b v)
/// −v″ = v(μ − v + c u)
/// ```
pub fn model_ap1(
    b: f64,
    c: f64,
    a_fn: SmoothFn,
    g_fn: SmoothFn,
    h_fn: SmoothFn,
    floors: PredatorPreyFloors,
) -> Result<Model, ModelError> {
    positive("a_min", floors.a_min)?;
    positive("g_min", floors.g_min)?;
    positive("h_min", floors.h_min)?;
    positive("h_max", floors.h_max)?;
    let low = floors.a_min * floors.g_min * floors.h_min;
    let (a1, g1, h1) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let (a2, g2, h2) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let (a3, g3, h3) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let diff_uu = CoefficientFn::new(
        move |u, v| a1.eval(v) * g1.d1(u) * h1.eval(v),
        move |u, v| a2.eval(v) * g2.d2(u) * h2.eval(v),
        move |u, v| a3.d1(v) * g3.d1(u) * h3.eval(v) + a3.eval(v) * g3.d1(u) * h3.d1(v),
    );
    let (a1, g1, h1) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let (a2, g2, h2) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let (a3, g3, h3) = (a_fn.clone(), g_fn.clone(), h_fn.clone());
    let diff_uv = CoefficientFn::new(
        move |u, v| a1.eval(v) * g1.eval(u) * h1.d1(v),
        move |u, v| a2.eval(v) * g2.d1(u) * h2.d1(v),
        move |u, v| a3.d1(v) * g3.eval(u) * h3.d1(v) + a3.eval(v) * g3.eval(u) * h3.d2(v),
    );
    Ok(Model {
        label: "predator-prey".into(),
        family: Family::PredatorPrey(PredatorPrey { b, c, a_fn, g_fn, h_fn, floors }),
        diff_uu,
        diff_uv,
        diff_vu: CoefficientFn::constant(0.0),
        diff_vv: CoefficientFn::constant(1.0),
        reaction_u: ReactionFn::logistic(),
        reaction_v: ReactionFn::logistic(),
        interaction_u: InteractionFn::constant(-b),
        interaction_v: InteractionFn::constant(c),
        weight_u: unit_weight(),
        weight_v: unit_weight(),
        floors: Floors { det: low, p: low, r: 1.0 },
    })
}

/// Chemotaxis competition model
///
/// ```text
/// −(u′ − χ f(v) u v′)′ = u(λ − u + b v)
/// −v″ = v(μ − v − c u)
/// ```
pub fn model_ap2(chi: f64, b: f64, c: f64, sensitivity: SmoothFn) -> Model {
    let (f1, f2) = (sensitivity.clone(), sensitivity.clone());
    let diff_uv = CoefficientFn::new(
        move |u, v| -chi * f1.eval(v) * u,
        move |_, v| -chi * f2.eval(v),
        {
            let f3 = sensitivity.clone();
            move |u, v| -chi * f3.d1(v) * u
        },
    );
    Model {
        label: "chemotaxis".into(),
        family: Family::Chemotaxis(Chemotaxis { chi, b, c, sensitivity }),
        diff_uu: CoefficientFn::constant(1.0),
        diff_uv,
        diff_vu: CoefficientFn::constant(0.0),
        diff_vv: CoefficientFn::constant(1.0),
        reaction_u: ReactionFn::logistic(),
        reaction_v: ReactionFn::logistic(),
        interaction_u: InteractionFn::constant(b),
        interaction_v: InteractionFn::constant(-c),
        weight_u: unit_weight(),
        weight_v: unit_weight(),
        floors: Floors { det: 1.0, p: 1.0, r: 1.0 },
    }
}

/// Sample functions `A(v) = v + 1`, `G(u) = u² + u`, `H(v) = (v + 2)/(v + 1)`
/// with their floors.
pub fn ap1_sample_functions() -> (SmoothFn, SmoothFn, SmoothFn, PredatorPreyFloors) {
    let a = SmoothFn::affine(1.0, 1.0);
    let g = SmoothFn::new(|u| u * u + u, |u| 2.0 * u + 1.0, |_| 2.0);
    let h = SmoothFn::new(
        |v| (v + 2.0) / (v + 1.0),
        |v| -1.0 / ((v + 1.0) * (v + 1.0)),
        |v| 2.0 / ((v + 1.0) * (v + 1.0) * (v + 1.0)),
    );
    (a, g, h, PredatorPreyFloors { a_min: 1.0, g_min: 1.0, h_min: 1.0, h_max: 2.0 })
}

/// Chemotactic sensitivities available by name.
pub fn sensitivity_by_name(name: &str) -> Result<SmoothFn, ModelError> {
    match name {
        "const" => Ok(SmoothFn::constant(1.0)),
        "saturating" => Ok(SmoothFn::new(
            |s| 1.0 / (1.0 + s),
            |s| -1.0 / ((1.0 + s) * (1.0 + s)),
            |s| 2.0 / ((1.0 + s) * (1.0 + s) * (1.0 + s)),
        )),
        other => Err(ModelError::UnknownFunction(other.to_string())),
    }
}

/// Predator–prey function sets available by name.
pub fn ap1_functions_by_name(name: &str) -> Result<(SmoothFn, SmoothFn, SmoothFn, PredatorPreyFloors), ModelError> {
    match name {
        "ap1-sample" => Ok(ap1_sample_functions()),
        other => Err(ModelError::UnknownFunction(other.to_string())),
    }
}

pub fn sample_ap1(b: f64, c: f64) -> Model {
    let (a, g, h, floors) = ap1_sample_functions();
    model_ap1(b, c, a, g, h, floors).expect("sample floors are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::trapezoid;

    #[test]
    fn application_models_pass_hypotheses() {
        assert!(sample_ap1(1.0, 1.0).hypothesis_check(10.0, 10.0, 1.0, 41).is_empty());
        let m = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        assert!(m.hypothesis_check(10.0, 10.0, 1.0, 41).is_empty());
        for (u, v) in [(0.0, 0.0), (3.0, 7.0)] {
            let det = m.diff_uu.eval(u, v) * m.diff_vv.eval(u, v) - m.diff_vu.eval(u, v) * m.diff_uv.eval(u, v);
            assert_eq!(det, 1.0);
        }
    }

    #[test]
    fn broken_cross_diffusion_is_reported() {
        let mut m = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        m.diff_vu = CoefficientFn::new(|u, _| u, |_, _| 1.0, |_, _| 0.0);
        let report = m.hypothesis_check(2.0, 2.0, 1.0, 11);
        let v = report.iter().find(|v| v.hypothesis == Hypothesis::CrossVanishesAtZeroV).unwrap();
        assert!(v.at.0 > 0.0);
    }

    #[test]
    fn sample_predator_prey_values() {
        let m = sample_ap1(1.0, 1.0);
        assert_eq!(m.diff_uu.eval(0.0, 0.0), 2.0);
        for v in [0.0, 0.5, 4.0] {
            assert_eq!(m.diff_uv.eval(0.0, v), 0.0);
        }
        let (u, v, eps) = (0.7, 0.4, 1e-6);
        for d in [&m.diff_uu, &m.diff_uv] {
            let du = (d.eval(u + eps, v) - d.eval(u - eps, v)) / (2.0 * eps);
            let dv = (d.eval(u, v + eps) - d.eval(u, v - eps)) / (2.0 * eps);
            assert!((du - d.du(u, v)).abs() < 1e-8);
            assert!((dv - d.dv(u, v)).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_nonpositive_floor() {
        let (a, g, h, mut floors) = ap1_sample_functions();
        floors.h_min = 0.0;
        assert!(matches!(model_ap1(1.0, 1.0, a, g, h, floors), Err(ModelError::NonPositiveFloor { .. })));
    }

    #[test]
    fn gauges() {
        let m = sample_ap1(1.0, 1.0);
        assert_eq!(m.gauge_h1(3.0).unwrap(), 0.0);
        for z in [0.3, 1.0, 2.5] {
            let expect = ((z + 2.0) / (z + 1.0) / 2.0f64).ln();
            assert!((m.gauge_h2(z).unwrap() - expect).abs() < 1e-10);
        }
        let chi = 0.5;
        let m = model_ap2(chi, 1.0, 1.0, sensitivity_by_name("saturating").unwrap());
        for z in [0.3, 1.0, 2.5] {
            let h2 = m.gauge_h2(z).unwrap();
            assert!((h2 + chi * (1.0 + z).ln()).abs() < 1e-10);
            assert!(((-h2).exp() - (1.0 + z).powf(chi)).abs() < 1e-9);
            let f = |s: f64| m.diff_uv.du(0.0, s) / m.diff_uu.eval(0.0, s);
            assert!((h2 - trapezoid(&f, 0.0, z, 100_000)).abs() < 1e-9);
        }
        let m = model_ap2(chi, 1.0, 1.0, SmoothFn::constant(1.0));
        let Family::Chemotaxis(ch) = &m.family else { unreachable!() };
        assert!((ch.sensitivity_primitive(1.7).unwrap() - 1.7).abs() < 1e-12);
        let m0 = model_ap2(0.0, 1.0, 1.0, SmoothFn::constant(1.0));
        assert_eq!(m0.diff_uv.eval(2.0, 3.0), 0.0);
    }

    #[test]
    fn bounds() {
        let m = sample_ap1(1.0, 1.0);
        let r = m.apriori_bounds(1.0, 5.0).unwrap();
        assert!((r.u_bound - (17f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((r.v_bound - 5.0 - r.u_bound).abs() < 1e-12);
        assert!(r.valid);
        assert_eq!(m.apriori_bounds(0.0, 5.0).unwrap().u_bound, 0.0);
        let m2 = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let r = m2.apriori_bounds(3.0, 12.0).unwrap();
        assert_eq!(r.v_bound, 12.0);
        assert!((r.u_bound - 15.0 * 6f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn nonexistence_cases() {
        let l1 = std::f64::consts::PI.powi(2);
        let m = sample_ap1(1.0, 1.0);
        assert_eq!(m.nonexistence(-1.0, 50.0, l1).unwrap(), Nonexistence::ProvenEmpty);
        assert_eq!(m.nonexistence(30.0, 50.0, l1).unwrap(), Nonexistence::Unknown);
        let m2 = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        assert_eq!(m2.nonexistence(5.0, l1 - 0.1, l1).unwrap(), Nonexistence::ProvenEmpty);
        let m3 = model_ap2(0.5, -1.0, 1.0, SmoothFn::constant(1.0));
        let mu = l1 + 1.0;
        let lam = 0.5 * l1 * (-0.5 * mu).exp();
        assert_eq!(m3.nonexistence(lam, mu, l1).unwrap(), Nonexistence::ProvenEmpty);
        assert_eq!(m3.nonexistence(2.0 * l1, mu, l1).unwrap(), Nonexistence::Unknown);
        let generic = Model { family: Family::Generic, ..m3 };
        assert!(matches!(generic.nonexistence(1.0, 1.0, l1), Err(ModelError::UnsupportedModel)));
    }

    #[test]
    fn semitrivial_threshold_of_predator_prey() {
        let grid = Grid::unit(99).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let p = m.semitrivial_u(&grid, 0.0);
        let lap = crate::eigen::sigma1_divergence(&grid, &vec![1.0; 101], &vec![0.0; 99], &vec![1.0; 99], &Default::default())
            .unwrap()
            .sigma1;
        assert!((p.threshold().unwrap() - 2.0 * lap).abs() < 1e-8 * lap);
    }
}
