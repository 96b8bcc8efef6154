//! Scalar quasilinear problems `−(d(w) w′)′ = γ a(x) w + h(x, w) w` with
//! homogeneous Dirichlet data.
//!
//! With the Kirchhoff variable `I(s) = ∫₀^s d` the diffusion term becomes
//! `−(I(w))″`, so the discrete residual is `L_Δ I(w) − γ a w − h(w) w` with
//! the constant-coefficient Laplacian `L_Δ`. Its Jacobian
//! `L_Δ diag(d(w)) − diag(γ a + h + w h_w)` is tridiagonal.

use crate::discretization::{assemble_weight, laplacian, DiscretizationError, Grid, GridFunction};
use crate::eigen::{principal_eigenpair, smallest_abs_eigenvalue, EigenError, EigenOptions};
use crate::functions::{ReactionFn, SmoothFn};
use crate::linalg::{LinalgError, Tridiagonal};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemitrivialError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("guess must be nonnegative")]
    NegativeGuess,
    #[error("diffusion coefficient is not positive at s = {at} (d = {value})")]
    NonPositiveDiffusion { at: f64, value: f64 },
    #[error("gamma grid must be increasing")]
    UnsortedGrid,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

/// `−(d(w) w′)′ = γ a(x) w + h(x, w) w` on a grid.
#[derive(Debug, Clone)]
pub struct ScalarProblem {
    pub diffusion: SmoothFn,
    pub reaction: ReactionFn,
    pub gamma: f64,
    pub weight: GridFunction,
}

impl ScalarProblem {
    /// Logistic problem `−d w″ = γ w − w²` with constant `d` and unit weight.
    pub fn logistic(grid: &Grid, d: f64, gamma: f64) -> Self {
        Self {
            diffusion: SmoothFn::constant(d),
            reaction: ReactionFn::logistic(),
            gamma,
            weight: GridFunction::constant(*grid, 1.0),
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..self.clone() }
    }

    pub fn grid(&self) -> &Grid {
        self.weight.grid()
    }

    /// Discrete residual at `w`.
    pub fn residual(&self, w: &[f64]) -> Result<Vec<f64>, SemitrivialError> {
        let grid = self.grid();
        let iw = w.iter().map(|&s| kirchhoff(&self.diffusion, s)).collect::<Result<Vec<_>, _>>()?;
        let mut r = laplacian(grid).apply(&iw)?;
        let x = grid.nodes();
        for i in 0..w.len() {
            r[i] -= (self.gamma * self.weight.values()[i] + self.reaction.eval(x[i], w[i])) * w[i];
        }
        Ok(r)
    }

    /// Analytic Jacobian of [`ScalarProblem::residual`].
    pub fn jacobian(&self, w: &[f64]) -> Result<Tridiagonal, SemitrivialError> {
        let grid = self.grid();
        let x = grid.nodes();
        let d: Vec<f64> = w.iter().map(|&s| self.diffusion.eval(s)).collect();
        let zeroth: Vec<f64> = (0..w.len())
            .map(|i| {
                -(self.gamma * self.weight.values()[i]
                    + self.reaction.eval(x[i], w[i])
                    + w[i] * self.reaction.dw(x[i], w[i]))
            })
            .collect();
        Ok(laplacian(grid).mul_diagonal_right(&d)?.add_diagonal(&zeroth)?)
    }

    /// `σ₁[−d(0)Δ; a]`, the existence threshold for positive solutions.
    pub fn threshold(&self) -> Result<f64, SemitrivialError> {
        Ok(self.principal_mode()?.0)
    }

    fn principal_mode(&self) -> Result<(f64, Vec<f64>), SemitrivialError> {
        let grid = self.grid();
        let d0 = self.diffusion.eval(0.0);
        if !(d0 > 0.0) {
            return Err(SemitrivialError::NonPositiveDiffusion { at: 0.0, value: d0 });
        }
        let op = laplacian(grid).scaled(d0);
        let wt = assemble_weight(grid, self.weight.values())?;
        let r = principal_eigenpair(&op, &wt, &EigenOptions::default())?;
        Ok((r.sigma1, r.eigenfunction))
    }
}

/// `I(s) = ∫₀^s d(t) dt`.
pub fn kirchhoff(d: &SmoothFn, s: f64) -> Result<f64, QuadratureError> {
    adaptive_simpson(&|t: f64| d.eval(t), 0.0, s, 1e-12)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Residual sup-norm accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100, max_halvings: 8 }
    }
}

/// Sup-norm below which a converged iterate counts as the trivial solution.
pub const ZERO_THRESHOLD: f64 = 1e-8;
const BLOWUP: f64 = 1e10;
const STEP_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoPositiveReason {
    ConvergedToZero,
    Diverged,
    SignChanging,
}

#[derive(Debug, Clone)]
pub enum ScalarOutcome {
    Positive(GridFunction),
    NoPositiveSolution(NoPositiveReason),
}

impl ScalarOutcome {
    pub fn positive(self) -> Option<GridFunction> {
        match self {
            ScalarOutcome::Positive(w) => Some(w),
            ScalarOutcome::NoPositiveSolution(_) => None,
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton from `guess`.
pub fn solve_scalar(
    problem: &ScalarProblem,
    guess: &GridFunction,
    opts: &NewtonOptions,
) -> Result<ScalarOutcome, SemitrivialError> {
    if guess.values().iter().any(|&g| g < 0.0) {
        return Err(SemitrivialError::NegativeGuess);
    }
    let mut w = guess.values().to_vec();
    let mut r = problem.residual(&w)?;
    let mut rn = sup(&r);
    for _ in 0..opts.max_iter {
        if rn < opts.tol && sup(&w) < ZERO_THRESHOLD {
            return Ok(classify(problem, w));
        }
        let step = problem.jacobian(&w)?.to_banded().lu()?.solve(&r)?;
        // a small residual alone is not enough near the trivial solution,
        // where tiny iterates still collapse towards zero
        if rn < opts.tol && sup(&step) <= STEP_RTOL * sup(&w) {
            return Ok(classify(problem, w));
        }
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let tr = problem.residual(&trial)?;
            let tn = sup(&tr);
            if (tn.is_finite() && tn < rn) || halvings == opts.max_halvings {
                if tn.is_finite() {
                    w = trial;
                    r = tr;
                    rn = tn;
                }
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
        if sup(&w) > BLOWUP || !rn.is_finite() {
            return Ok(ScalarOutcome::NoPositiveSolution(NoPositiveReason::Diverged));
        }
    }
    if rn < opts.tol {
        return Ok(classify(problem, w));
    }
    Err(SemitrivialError::NewtonDivergence { iterations: opts.max_iter, residual: rn })
}

fn classify(problem: &ScalarProblem, w: Vec<f64>) -> ScalarOutcome {
    if sup(&w) < ZERO_THRESHOLD {
        return ScalarOutcome::NoPositiveSolution(NoPositiveReason::ConvergedToZero);
    }
    if w.iter().any(|&x| x <= 0.0) {
        return ScalarOutcome::NoPositiveSolution(NoPositiveReason::SignChanging);
    }
    ScalarOutcome::Positive(GridFunction::new(*problem.grid(), w).expect("same grid"))
}

/// Smallest `s > 0` with `γ max(a) + h(x_mid, s) ≤ 0`, the level above which
/// constants are supersolutions, or `None` if none is found below `1e6`.
fn saturation_level(problem: &ScalarProblem) -> Option<f64> {
    let amax = problem.weight.max();
    let xm = 0.5 * problem.grid().length();
    let g = |s: f64| problem.gamma * amax + problem.reaction.eval(xm, s);
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Tries a ladder of multiples of the principal eigenfunction of
/// `−d(0)Δ`, starting from the saturation level where one exists.
pub fn solve_default(problem: &ScalarProblem, opts: &NewtonOptions) -> Result<ScalarOutcome, SemitrivialError> {
    let (_, phi) = problem.principal_mode()?;
    let base = saturation_level(problem).unwrap_or(1.0).max(1e-3);
    let mut last = None;
    for factor in [1.0, 0.5, 2.0, 0.1, 5.0, 0.01] {
        let guess = GridFunction::new(*problem.grid(), phi.iter().map(|p| factor * base * p).collect())?;
        match solve_scalar(problem, &guess, opts) {
            Ok(ScalarOutcome::Positive(w)) => return Ok(ScalarOutcome::Positive(w)),
            Ok(other) => last = Some(Ok(other)),
            Err(e) => {
                if last.is_none() {
                    last = Some(Err(e));
                }
            }
        }
    }
    last.expect("ladder is nonempty")
}

/// Smallest `|σ|` over the spectrum of the linearization at `w`, after the
/// substitution `ψ = d(w) ξ`, which makes it the symmetric operator
/// `L_Δ − diag((γ a + h + w h_w)/d(w))`.
pub fn nondegeneracy_margin(problem: &ScalarProblem, w: &GridFunction) -> Result<f64, SemitrivialError> {
    let grid = problem.grid();
    let x = grid.nodes();
    let mut pot = Vec::with_capacity(x.len());
    for (i, &s) in w.values().iter().enumerate() {
        let d = problem.diffusion.eval(s);
        if !(d > 0.0) {
            return Err(SemitrivialError::NonPositiveDiffusion { at: s, value: d });
        }
        let c = problem.gamma * problem.weight.values()[i] + problem.reaction.eval(x[i], s) + s * problem.reaction.dw(x[i], s);
        pot.push(-c / d);
    }
    let op = laplacian(grid).add_diagonal(&pot)?;
    Ok(smallest_abs_eigenvalue(&op)?)
}

/// Positive solutions along an increasing grid of `γ`.
#[derive(Debug, Clone)]
pub struct SemitrivialBranch {
    pub gammas: Vec<f64>,
    /// `None` where only the trivial solution was found.
    pub solutions: Vec<Option<GridFunction>>,
    pub nondegeneracy_margins: Vec<Option<f64>>,
}

impl SemitrivialBranch {
    pub fn sup_norms(&self) -> Vec<Option<f64>> {
        self.solutions.iter().map(|s| s.as_ref().map(GridFunction::sup_norm)).collect()
    }
}

/// Sweeps `gammas` in order, warm-starting each solve from the previous
/// positive solution and falling back to the eigenfunction ladder.
pub fn branch_sweep(
    problem: &ScalarProblem,
    gammas: &[f64],
    opts: &NewtonOptions,
) -> Result<SemitrivialBranch, SemitrivialError> {
    if gammas.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(SemitrivialError::UnsortedGrid);
    }
    let mut solutions = Vec::with_capacity(gammas.len());
    let mut margins = Vec::with_capacity(gammas.len());
    let mut previous: Option<GridFunction> = None;
    for &gamma in gammas {
        let p = problem.with_gamma(gamma);
        let mut found = None;
        if let Some(prev) = &previous {
            if let Ok(ScalarOutcome::Positive(w)) = solve_scalar(&p, prev, opts) {
                found = Some(w);
            }
        }
        if found.is_none() {
            found = solve_default(&p, opts)?.positive();
        }
        margins.push(match &found {
            Some(w) => Some(nondegeneracy_margin(&p, w)?),
            None => None,
        });
        previous = found.clone().or(previous);
        solutions.push(found);
    }
    Ok(SemitrivialBranch { gammas: gammas.to_vec(), solutions, nondegeneracy_margins: margins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::trapezoid;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::unit(99).unwrap()
    }

    #[test]
    fn kirchhoff_examples() {
        assert!((kirchhoff(&SmoothFn::constant(1.0), 0.7).unwrap() - 0.7).abs() < 1e-14);
        let d = SmoothFn::affine(1.0, 2.0);
        assert!((kirchhoff(&d, 2.0).unwrap() - 6.0).abs() < 1e-12);
        // A(0)H(0)G'(s) with the sample functions, composed with a smooth factor
        let d = SmoothFn::new(|s: f64| 2.0 * (2.0 * s + 1.0) * (1.0 + 0.3 * s.sin()), |_| 0.0, |_| 0.0);
        let oracle = trapezoid(&|s| d.eval(s), 0.0, 1.3, 200_000);
        assert!((kirchhoff(&d, 1.3).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn below_threshold_has_no_positive_solution() {
        let p = ScalarProblem::logistic(&grid(), 1.0, PI * PI - 1.0);
        let out = solve_default(&p, &NewtonOptions::default()).unwrap();
        assert!(matches!(out, ScalarOutcome::NoPositiveSolution(_)));
    }

    #[test]
    fn above_threshold_is_bounded_by_gamma() {
        let gamma = PI * PI + 1.0;
        let p = ScalarProblem::logistic(&grid(), 1.0, gamma);
        let w = solve_default(&p, &NewtonOptions::default()).unwrap().positive().unwrap();
        assert!(w.min() > 0.0);
        assert!(w.sup_norm() <= gamma);
        assert!(sup(&p.residual(w.values()).unwrap()) < 1e-8);
        let p2 = p.with_gamma(2.0 * PI * PI);
        let w2 = solve_default(&p2, &NewtonOptions::default()).unwrap().positive().unwrap();
        assert!(w2.sup_norm() > w.sup_norm());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let g = grid();
        let p = ScalarProblem {
            diffusion: SmoothFn::new(|s| 1.0 + s * s, |s| 2.0 * s, |_| 2.0),
            reaction: ReactionFn::new(|x, w| -w * (1.0 + x), |x, _| -(1.0 + x)),
            gamma: 12.0,
            weight: g.sample(|x| 1.0 + 0.5 * x),
        };
        let w: Vec<f64> = g.nodes().iter().map(|&x| 0.8 * (PI * x).sin() + 0.1 * x).collect();
        let dir: Vec<f64> = g.nodes().iter().map(|&x| (3.0 * x).cos()).collect();
        let jv = p.jacobian(&w).unwrap().apply(&dir).unwrap();
        let eps = 1e-6;
        let plus: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a - eps * b).collect();
        let (rp, rm) = (p.residual(&plus).unwrap(), p.residual(&minus).unwrap());
        let scale = sup(&jv);
        for i in 0..w.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            assert!((fd - jv[i]).abs() <= 1e-5 * scale, "{i}: {fd} vs {}", jv[i]);
        }
    }

    #[test]
    fn margins_positive_for_logistic() {
        let p = ScalarProblem::logistic(&grid(), 1.0, 0.0);
        let b = branch_sweep(&p, &[PI * PI + 0.5, 2.0 * PI * PI, 4.0 * PI * PI], &NewtonOptions::default()).unwrap();
        for m in &b.nondegeneracy_margins {
            assert!(m.unwrap() > 1e-6);
        }
    }

    #[test]
    fn sweep_examples() {
        let p = ScalarProblem::logistic(&grid(), 1.0, 0.0);
        let b = branch_sweep(&p, &[5.0, 9.0, 9.5], &NewtonOptions::default()).unwrap();
        assert!(b.solutions.iter().all(Option::is_none));
        let b = branch_sweep(&p, &[10.0, 15.0, 20.0], &NewtonOptions::default()).unwrap();
        let s: Vec<f64> = b.sup_norms().into_iter().map(Option::unwrap).collect();
        assert!(s[0] < s[1] && s[1] < s[2]);
    }

    #[test]
    fn unsorted_grid_rejected() {
        let p = ScalarProblem::logistic(&grid(), 1.0, 0.0);
        assert!(matches!(branch_sweep(&p, &[3.0, 2.0], &NewtonOptions::default()), Err(SemitrivialError::UnsortedGrid)));
    }
}
