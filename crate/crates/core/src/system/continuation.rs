//! Pseudo-arclength continuation of coexistence states away from a
//! bifurcation point on a semitrivial branch.
//!
//! Unknowns are `X = (z, p)` with `z = [u; v]` and `p` the free parameter,
//! measured with `⟨X, Y⟩ = h Σ z·z′ + p p′`. Each step predicts along the
//! current direction and corrects with Newton on the residual bordered by
//! the hyperplane constraint `⟨T, X − X_pred⟩ = 0`.

use super::bifurcation::{BifurcationPoint, Side};
use super::{
    deinterleave, interleave, invasion_eigen_u, invasion_eigen_v, jacobian, parameter_derivative, residual, semitrivial_u,
    semitrivial_v, trivial_thresholds, CoupledState, FreeParameter, SystemError,
};
use crate::discretization::{Grid, GridFunction};
use crate::models::Model;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    /// Admissible range of the free parameter.
    pub window: (f64, f64),
    /// Sup-norm above which the branch is declared unbounded.
    pub norm_cap: f64,
    pub boundary_tol: f64,
    pub matching_tol: f64,
    /// Residual sup-norm accepted by the corrector.
    pub newton_tol: f64,
    pub max_corrector: usize,
}

impl ContinuationOptions {
    /// Defaults with the window `start ± 30`.
    pub fn around(start: f64) -> Self {
        Self { window: (start - 30.0, start + 30.0), ..Self::default() }
    }
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            ds: 0.05,
            ds_min: 1e-4,
            ds_max: 0.5,
            max_steps: 4000,
            window: (f64::NEG_INFINITY, f64::INFINITY),
            norm_cap: 1e3,
            boundary_tol: super::BOUNDARY_TOL,
            matching_tol: 1e-2,
            newton_tol: 1e-8,
            max_corrector: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The free parameter left the window or the state norm passed the cap.
    UnboundedWindow,
    /// `u` vanished: the branch reaches `(0, θ_μ*)`.
    #[serde(rename = "HitsOtherSemitrivial_v")]
    HitsOtherSemitrivialV,
    /// `v` vanished: the branch reaches `(θ_λ*, 0)`.
    #[serde(rename = "HitsOtherSemitrivial_u")]
    HitsOtherSemitrivialU,
    HitsTrivial,
    StepFailure,
}

impl Verdict {
    pub fn alternative(self) -> Option<u8> {
        match self {
            Verdict::UnboundedWindow => Some(1),
            Verdict::HitsOtherSemitrivialV => Some(2),
            Verdict::HitsOtherSemitrivialU => Some(3),
            Verdict::HitsTrivial => Some(4),
            Verdict::StepFailure => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::UnboundedWindow => "UnboundedWindow",
            Verdict::HitsOtherSemitrivialV => "HitsOtherSemitrivial_v",
            Verdict::HitsOtherSemitrivialU => "HitsOtherSemitrivial_u",
            Verdict::HitsTrivial => "HitsTrivial",
            Verdict::StepFailure => "StepFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub verdict: Verdict,
    pub alternative: Option<u8>,
    pub free_parameter: FreeParameter,
    pub fixed_value: f64,
    /// Free parameter at the last point.
    pub parameter: f64,
    /// Independently computed eigenvalue the endpoint must match.
    pub matched_eigenvalue: Option<f64>,
    /// Parameter whose value is compared with `matched_eigenvalue`.
    pub compared_value: Option<f64>,
    pub gap: Option<f64>,
    pub matching_tol: f64,
    pub matched: Option<bool>,
    /// Whether the endpoint semitrivial state differs from the base state.
    pub distinct_from_start: Option<bool>,
    pub steps: usize,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub param: f64,
    pub state: CoupledState,
    pub arclength: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub free: FreeParameter,
    pub fixed_value: f64,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl Branch {
    /// Parameter pairs `(λ, μ)` of each point.
    pub fn parameters(&self, i: usize) -> (f64, f64) {
        split(self.free, self.fixed_value, self.points[i].param)
    }
}

fn split(free: FreeParameter, fixed: f64, p: f64) -> (f64, f64) {
    match free {
        FreeParameter::Lambda => (p, fixed),
        FreeParameter::Mu => (fixed, p),
    }
}

#[derive(Clone)]
struct Pt {
    z: Vec<f64>,
    p: f64,
}

struct Ctx<'a> {
    model: &'a Model,
    grid: Grid,
    free: FreeParameter,
    fixed: f64,
    opts: ContinuationOptions,
}

impl Ctx<'_> {
    fn h(&self) -> f64 {
        self.grid.spacing()
    }

    fn dot(&self, a: &Pt, b: &Pt) -> f64 {
        self.h() * a.z.iter().zip(&b.z).map(|(x, y)| x * y).sum::<f64>() + a.p * b.p
    }

    fn diff(&self, a: &Pt, b: &Pt) -> Pt {
        Pt { z: a.z.iter().zip(&b.z).map(|(x, y)| x - y).collect(), p: a.p - b.p }
    }

    fn norm(&self, a: &Pt) -> f64 {
        self.dot(a, a).sqrt()
    }

    fn unit(&self, a: Pt) -> Pt {
        let s = self.norm(&a);
        Pt { z: a.z.iter().map(|x| x / s).collect(), p: a.p / s }
    }

    fn axpy(&self, x: &Pt, t: f64, d: &Pt) -> Pt {
        Pt { z: x.z.iter().zip(&d.z).map(|(a, b)| a + t * b).collect(), p: x.p + t * d.p }
    }

    fn state(&self, x: &Pt) -> CoupledState {
        CoupledState::from_block(&self.grid, &x.z)
    }

    fn params(&self, p: f64) -> (f64, f64) {
        split(self.free, self.fixed, p)
    }

    /// Newton on the bordered system with the pseudo-arclength constraint
    /// `⟨normal, x − pred⟩ = 0`. Returns the corrected point and the number
    /// of iterations.
    fn correct(&self, pred: &Pt, normal: &Pt) -> Option<(Pt, usize)> {
        self.correct_with(pred, normal, self.dot(normal, pred))
    }

    /// Newton on `F(z, p) = 0`, `⟨normal, x⟩ = value`, starting from `x0`.
    fn correct_with(&self, x0: &Pt, normal: &Pt, value: f64) -> Option<(Pt, usize)> {
        let h = self.h();
        let mut x = x0.clone();
        for it in 0..=self.opts.max_corrector {
            let (lambda, mu) = self.params(x.p);
            let state = self.state(&x);
            let r = residual(self.model, lambda, mu, &state);
            let c = self.dot(normal, &x) - value;
            let rn = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !rn.is_finite() {
                return None;
            }
            if rn < self.opts.newton_tol && c.abs() < 1e-10 * (1.0 + value.abs()) {
                return Some((x, it));
            }
            if it == self.opts.max_corrector {
                break;
            }
            let j = jacobian(self.model, lambda, mu, &state);
            let hp = parameter_derivative(self.model, &state, self.free);
            let nz: Vec<f64> = normal.z.iter().map(|v| h * v).collect();
            let (dz, dp) = bordered_solve(&j, &hp, &nz, normal.p, &r, c)?;
            x.z.iter_mut().zip(&dz).for_each(|(a, d)| *a += d);
            x.p += dp;
            if x.z.iter().any(|v| !v.is_finite()) || !x.p.is_finite() {
                return None;
            }
        }
        None
    }
}

/// Solves `[J hp; nzᵀ np] [dz; dp] = −[r; c]` by block elimination with the
/// banded factorization, falling back to dense LU.
fn bordered_solve(
    j: &super::CoupledJacobian,
    hp: &[f64],
    nz: &[f64],
    np: f64,
    r: &[f64],
    c: f64,
) -> Option<(Vec<f64>, f64)> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if let Ok(lu) = j.to_banded().lu() {
        if let (Ok(a), Ok(b)) = (lu.solve(&interleave(r)), lu.solve(&interleave(hp))) {
            let (a, b) = (deinterleave(&a), deinterleave(&b));
            let den = np - dot(nz, &b);
            let scale = np.abs() + dot(nz, nz).sqrt() * dot(&b, &b).sqrt();
            if den.abs() > 1e-10 * scale && den.is_finite() {
                let dp = (-c + dot(nz, &a)) / den;
                let dz: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| -ai - bi * dp).collect();
                if dz.iter().all(|v| v.is_finite()) && dp.is_finite() {
                    return Some((dz, dp));
                }
            }
        }
    }
    let m = r.len();
    let jd = j.to_dense();
    let mut big = DMatrix::zeros(m + 1, m + 1);
    big.view_mut((0, 0), (m, m)).copy_from(&jd);
    for i in 0..m {
        big[(i, m)] = hp[i];
        big[(m, i)] = nz[i];
    }
    big[(m, m)] = np;
    let mut rhs = DVector::from_iterator(m + 1, r.iter().map(|v| -v).chain(std::iter::once(-c)));
    if !big.lu().solve_mut(&mut rhs) {
        return None;
    }
    Some((rhs.as_slice()[..m].to_vec(), rhs[m]))
}

/// Signed amplitude `h Σ w`.
fn amplitude(grid: &Grid, w: &[f64]) -> f64 {
    grid.spacing() * w.iter().sum::<f64>()
}

/// Traces the branch of coexistence states emanating from `start`.
pub fn continue_branch(
    model: &Model,
    start: &BifurcationPoint,
    opts: &ContinuationOptions,
) -> Result<Branch, SystemError> {
    let grid = *start.theta.grid();
    let n = grid.n_interior();
    let ctx = Ctx { model, grid, free: start.free_parameter(), fixed: start.fixed_value(), opts: *opts };
    let base = Pt { z: start.base_state().to_block(), p: start.free_value() };
    let kernel = ctx.unit(Pt { z: start.kernel(), p: 0.0 });

    let mut points = vec![BranchPoint { param: base.p, state: start.base_state(), arclength: 0.0 }];
    let mut cur = base.clone();
    let mut prev: Option<Pt> = None;
    let mut dir = kernel.clone();
    let mut ds = opts.ds;
    let mut arclength = 0.0;
    let mut steps = 0;
    let finish = |points: Vec<BranchPoint>, termination: Termination| Branch {
        free: ctx.free,
        fixed_value: ctx.fixed,
        points,
        termination,
    };
    let plain = |verdict: Verdict, p: f64, steps: usize, detail: String| Termination {
        verdict,
        alternative: verdict.alternative(),
        free_parameter: ctx.free,
        fixed_value: ctx.fixed,
        parameter: p,
        matched_eigenvalue: None,
        compared_value: None,
        gap: None,
        matching_tol: opts.matching_tol,
        matched: None,
        distinct_from_start: None,
        steps,
        detail,
    };

    while steps < opts.max_steps {
        if ds < opts.ds_min {
            return Ok(finish(points, plain(Verdict::StepFailure, cur.p, steps, format!("step size fell below {:e}", opts.ds_min))));
        }
        let pred = ctx.axpy(&cur, ds, &dir);
        let Some((new, iters)) = ctx.correct(&pred, &dir) else {
            ds *= 0.5;
            continue;
        };
        let step = ctx.diff(&new, &cur);
        let step_len = ctx.norm(&step);
        let new_dir = ctx.unit(step.clone());
        if prev.is_some() && ctx.dot(&new_dir, &dir) < 0.5 {
            ds *= 0.5;
            continue;
        }
        let state = ctx.state(&new);
        if !state.is_coexistence() {
            if prev.is_none() {
                ds *= 0.5;
                continue;
            }
            let au = (amplitude(&grid, &cur.z[..n]), amplitude(&grid, &new.z[..n]));
            let av = (amplitude(&grid, &cur.z[n..]), amplitude(&grid, &new.z[n..]));
            let u_gone = au.1 <= 0.0 || state.u.sup_norm() < opts.boundary_tol;
            let v_gone = av.1 <= 0.0 || state.v.sup_norm() < opts.boundary_tol;
            if !u_gone && !v_gone {
                // a component dipped below zero without its mass crossing zero
                ds *= 0.5;
                continue;
            }
            return end_at_crossing(&ctx, start, points, cur, prev.unwrap(), arclength, steps, u_gone, v_gone);
        }
        steps += 1;
        arclength += step_len;
        points.push(BranchPoint { param: new.p, state: state.clone(), arclength });
        if new.p < opts.window.0 || new.p > opts.window.1 {
            let t = plain(Verdict::UnboundedWindow, new.p, steps, "free parameter left the window".into());
            return Ok(finish(points, t));
        }
        if state.sup_norm() > opts.norm_cap {
            let t = plain(Verdict::UnboundedWindow, new.p, steps, "state norm exceeded the cap".into());
            return Ok(finish(points, t));
        }
        prev = Some(cur);
        cur = new;
        dir = new_dir;
        if iters <= 3 {
            ds = (ds * 1.3).min(opts.ds_max);
        }
    }
    Ok(finish(points, plain(Verdict::StepFailure, cur.p, steps, format!("reached {} steps", opts.max_steps))))
}

/// Follows the branch towards a vanishing component with that component's
/// amplitude as the parameter, extrapolates the free parameter to zero
/// amplitude, and verifies the eigenvalue condition at the semitrivial
/// endpoint.
#[allow(clippy::too_many_arguments)]
fn end_at_crossing(
    ctx: &Ctx<'_>,
    start: &BifurcationPoint,
    mut points: Vec<BranchPoint>,
    mut cur: Pt,
    mut prev: Pt,
    mut arclength: f64,
    mut steps: usize,
    u_gone: bool,
    v_gone: bool,
) -> Result<Branch, SystemError> {
    let grid = ctx.grid;
    let n = grid.n_interior();
    let opts = ctx.opts;
    let verdict = match (u_gone, v_gone) {
        (true, true) => Verdict::HitsTrivial,
        (true, false) => Verdict::HitsOtherSemitrivialV,
        _ => Verdict::HitsOtherSemitrivialU,
    };
    let mut gauge = Pt { z: vec![0.0; 2 * n], p: 0.0 };
    match verdict {
        Verdict::HitsOtherSemitrivialV => gauge.z[..n].fill(1.0),
        Verdict::HitsOtherSemitrivialU => gauge.z[n..].fill(1.0),
        _ => gauge.z.fill(1.0),
    }
    let amp = |x: &Pt| ctx.dot(&gauge, x);

    // (amplitude, parameter) samples, ending at the smallest amplitude
    let mut samples = vec![(amp(&prev), prev.p), (amp(&cur), cur.p)];
    let a_start = amp(&cur);
    for k in 1..=AMPLITUDE_LEVELS {
        let target = a_start * 0.5_f64.powi(k as i32);
        let (a0, a1) = (amp(&prev), amp(&cur));
        let t = if (a1 - a0).abs() > 0.0 { (target - a1) / (a1 - a0) } else { 0.0 };
        let guess = ctx.axpy(&cur, t, &ctx.diff(&cur, &prev));
        let Some((next, _)) = ctx.correct_with(&guess, &gauge, target) else { break };
        let state = ctx.state(&next);
        let other_alive = match verdict {
            Verdict::HitsOtherSemitrivialV => state.v.min() > 0.0,
            Verdict::HitsOtherSemitrivialU => state.u.min() > 0.0,
            _ => true,
        };
        let vanishing_positive = match verdict {
            Verdict::HitsOtherSemitrivialV => state.u.min() > 0.0,
            Verdict::HitsOtherSemitrivialU => state.v.min() > 0.0,
            _ => state.u.min() > 0.0 && state.v.min() > 0.0,
        };
        if !(other_alive && vanishing_positive) {
            break;
        }
        arclength += ctx.norm(&ctx.diff(&next, &cur));
        steps += 1;
        points.push(BranchPoint { param: next.p, state, arclength });
        samples.push((target, next.p));
        prev = std::mem::replace(&mut cur, next);
    }
    let p_star = extrapolate_to_zero(&samples[samples.len().saturating_sub(4)..]);

    let (lambda_star, mu_star) = ctx.params(p_star);
    let zero = GridFunction::zeros(grid);
    let (state, matched_eigenvalue, compared, distinct, detail) = match verdict {
        Verdict::HitsOtherSemitrivialU => match semitrivial_u(ctx.model, &grid, lambda_star)? {
            Some(theta) => {
                let m = invasion_eigen_v(ctx.model, &theta)?.sigma1;
                let distinct = (start.side == Side::U).then(|| differs(&theta, &start.theta));
                (CoupledState { u: theta, v: zero }, Some(m), Some(mu_star), distinct, "v vanished".to_string())
            }
            None => (CoupledState::zeros(&grid), None, None, None, "v vanished below the u-threshold".to_string()),
        },
        Verdict::HitsOtherSemitrivialV => match semitrivial_v(ctx.model, &grid, mu_star)? {
            Some(theta) => {
                let m = invasion_eigen_u(ctx.model, &theta)?.sigma1;
                let distinct = (start.side == Side::V).then(|| differs(&theta, &start.theta));
                (CoupledState { u: zero, v: theta }, Some(m), Some(lambda_star), distinct, "u vanished".to_string())
            }
            None => (CoupledState::zeros(&grid), None, None, None, "u vanished below the v-threshold".to_string()),
        },
        _ => {
            let (tu, tv) = trivial_thresholds(ctx.model, &grid)?;
            let (m, c) = match start.side {
                Side::U => (tu, lambda_star),
                Side::V => (tv, mu_star),
            };
            (CoupledState::zeros(&grid), Some(m), Some(c), None, "both components vanished".to_string())
        }
    };
    let end = Pt { z: state.to_block(), p: p_star };
    arclength += ctx.norm(&ctx.diff(&end, &cur)).max(f64::EPSILON * (1.0 + arclength));
    points.push(BranchPoint { param: p_star, state, arclength });
    let gap = matched_eigenvalue.zip(compared).map(|(m, c)| (m - c).abs());
    Ok(Branch {
        free: ctx.free,
        fixed_value: ctx.fixed,
        points,
        termination: Termination {
            verdict,
            alternative: verdict.alternative(),
            free_parameter: ctx.free,
            fixed_value: ctx.fixed,
            parameter: p_star,
            matched_eigenvalue,
            compared_value: compared,
            gap,
            matching_tol: opts.matching_tol,
            matched: gap.map(|g| g < opts.matching_tol),
            distinct_from_start: distinct,
            steps,
            detail,
        },
    })
}

const AMPLITUDE_LEVELS: usize = 6;

/// Value at `a = 0` of the interpolating polynomial through `(a, p)`
/// samples (Neville).
fn extrapolate_to_zero(samples: &[(f64, f64)]) -> f64 {
    let a: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut p: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let m = p.len();
    for level in 1..m {
        for i in 0..m - level {
            let (ai, aj) = (a[i], a[i + level]);
            p[i] = (aj * p[i] - ai * p[i + 1]) / (aj - ai);
        }
    }
    p[0]
}

fn differs(a: &GridFunction, b: &GridFunction) -> bool {
    let d = a.values().iter().zip(b.values()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    d > 1e-6 * (1.0 + a.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::SmoothFn;
    use crate::models::{model_ap2, sample_ap1};
    use crate::system::bifurcation::bifurcation_point;

    #[test]
    fn chemotaxis_branch_reaches_prey_semitrivial() {
        let g = Grid::unit(49).unwrap();
        let m = model_ap2(0.5, 1.0, 1.0, SmoothFn::constant(1.0));
        let l1 = crate::system::trivial_thresholds(&m, &g).unwrap().1;
        let bp = bifurcation_point(&m, &g, Side::V, l1 + 2.0).unwrap();
        let b = continue_branch(&m, &bp, &ContinuationOptions::around(bp.lambda)).unwrap();
        assert_eq!(b.termination.verdict, Verdict::HitsOtherSemitrivialU, "{:?}", b.termination);
        assert!(b.termination.gap.unwrap() < 1e-2, "{:?}", b.termination);
        for p in &b.points[1..b.points.len() - 1] {
            assert!(p.state.is_coexistence());
        }
        assert!(b.points.windows(2).all(|w| w[1].arclength > w[0].arclength));
    }

    #[test]
    fn neville_extrapolation_is_exact_for_cubics() {
        let f = |a: f64| 2.0 - a + 0.5 * a * a - 0.25 * a * a * a;
        let s: Vec<(f64, f64)> = [0.8, 0.4, 0.2, 0.1].iter().map(|&a| (a, f(a))).collect();
        assert!((extrapolate_to_zero(&s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn predator_branch_ends_where_prey_invasion_is_neutral() {
        let g = Grid::unit(49).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let bp = bifurcation_point(&m, &g, Side::U, 40.0).unwrap();
        let b = continue_branch(&m, &bp, &ContinuationOptions::around(bp.mu)).unwrap();
        let t = &b.termination;
        assert_eq!(t.verdict, Verdict::HitsOtherSemitrivialV, "{t:?}");
        assert!(t.gap.unwrap() < 1e-2, "{t:?}");
    }

    #[test]
    fn predator_prey_branch_is_unbounded() {
        let g = Grid::unit(49).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let l1 = crate::system::trivial_thresholds(&m, &g).unwrap().1;
        let bp = bifurcation_point(&m, &g, Side::V, l1 + 2.0).unwrap();
        let opts = ContinuationOptions { window: (bp.lambda - 1.0, bp.lambda + 30.0), ..Default::default() };
        let b = continue_branch(&m, &bp, &opts).unwrap();
        assert_eq!(b.termination.verdict, Verdict::UnboundedWindow, "{:?}", b.termination);
        assert!(b.termination.parameter > bp.lambda + 29.0);
    }
}
