//! Classification of the `(λ, μ)` plane.
//!
//! Each cell is first tested against the nonexistence predicates, then
//! against the coexistence condition of the relevant theorem, and finally
//! probed with Newton from a ladder of seeds: states interpolated from
//! branches traced out of the bifurcation points, the state found in the
//! previous cell of the row, a sine bump scaled by the a-priori bounds, and
//! random perturbations of that bump.

use super::{curve_table, CurveError, CurveKind, CurveTable};
use crate::discretization::{Grid, GridFunction};
use crate::models::{Family, Model, Nonexistence};
use crate::system::{
    bifurcation_point, continue_branch, newton_coexistence, trivial_thresholds, Branch, CoexistenceOutcome, ContinuationOptions,
    CoupledNewtonOptions, CoupledState, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellVerdict {
    ProvenEmpty,
    Predicted,
    Confirmed,
    PredictedNotFound,
    Unknown,
}

impl CellVerdict {
    pub fn name(self) -> &'static str {
        match self {
            CellVerdict::ProvenEmpty => "ProvenEmpty",
            CellVerdict::Predicted => "Predicted",
            CellVerdict::Confirmed => "Confirmed",
            CellVerdict::PredictedNotFound => "PredictedNotFound",
            CellVerdict::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    /// Run Newton probes at all. Without probes cells stop at `Predicted`.
    pub enabled: bool,
    /// Seed of the random perturbations.
    pub seed: u64,
    /// Number of randomly perturbed bump seeds per cell.
    pub random_seeds: usize,
    /// Trace branches from bifurcation points and use them as seeds.
    pub use_branches: bool,
    pub newton: CoupledNewtonOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { enabled: true, seed: 0, random_seeds: 4, use_branches: true, newton: CoupledNewtonOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lambda: f64,
    pub mu: f64,
    pub verdict: CellVerdict,
    pub proven_empty: bool,
    pub predicted: bool,
    /// A coexistence state was found by some probe.
    pub found: bool,
    /// Residual sup-norm of the found state, or of the best failed probe.
    pub probe_residual: Option<f64>,
    /// Label of the seed that succeeded.
    pub seed_label: Option<String>,
    pub sup_u: Option<f64>,
    pub sup_v: Option<f64>,
    /// Whether the found state respects the a-priori bounds (plus `1e−6`).
    pub within_bounds: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RegionMap {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    /// Row-major over `mus`: `cells[j * lambdas.len() + i]` is `(λ_i, μ_j)`.
    pub cells: Vec<Cell>,
    pub mu_curve: CurveTable,
    pub lambda_curve: CurveTable,
    /// Principal eigenvalue of `−Δ` on the grid.
    pub lambda1: f64,
}

impl RegionMap {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.lambdas.len() + i]
    }

    /// Cells in `ProvenEmpty` where a probe nevertheless found a state.
    pub fn soundness_violations(&self) -> usize {
        self.cells.iter().filter(|c| c.proven_empty && c.found).count()
    }

    /// Fraction of predicted cells that were confirmed.
    pub fn confirmed_fraction(&self) -> Option<f64> {
        let predicted: Vec<&Cell> = self.cells.iter().filter(|c| c.predicted).collect();
        if predicted.is_empty() {
            return None;
        }
        Some(predicted.iter().filter(|c| c.verdict == CellVerdict::Confirmed).count() as f64 / predicted.len() as f64)
    }
}

/// Theorem condition for coexistence at `(λ, μ)` given `μ_λ`, `λ_μ`.
fn predicted(model: &Model, lambda: f64, mu: f64, mu_l: f64, lambda_m: f64, lambda1: f64) -> bool {
    match model.family {
        Family::PredatorPrey(_) => mu > mu_l && lambda > lambda_m,
        Family::Chemotaxis(_) => mu > lambda1 && ((lambda > lambda_m && mu > mu_l) || (lambda < lambda_m && mu < mu_l)),
        Family::Generic => false,
    }
}

/// Sine bump `0.3·bound·sin(πx/L)` in each component.
fn bump(model: &Model, grid: &Grid, lambda: f64, mu: f64) -> CoupledState {
    let (ub, vb) = match model.apriori_bounds(lambda, mu) {
        Ok(b) if b.valid => (b.u_bound, b.v_bound),
        _ => (lambda.abs().max(1.0), mu.abs().max(1.0)),
    };
    let l = grid.length();
    CoupledState {
        u: grid.sample(|x| 0.3 * ub * (PI * x / l).sin()),
        v: grid.sample(|x| 0.3 * vb * (PI * x / l).sin()),
    }
}

/// Random positive perturbations of the bump: independent amplitudes in
/// `[0.02, 1.5]` times the bump, times `1 + 0.3·ε(x)` with a smooth random
/// profile `ε`.
pub fn random_seeds(model: &Model, grid: &Grid, lambda: f64, mu: f64, count: usize, rng_seed: u64) -> Vec<CoupledState> {
    let base = bump(model, grid, lambda, mu);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let l = grid.length();
    (0..count)
        .map(|_| {
            let mut component = |w: &GridFunction| {
                let a: f64 = rng.gen_range(0.02..1.5);
                let (c1, c2): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let vals = w
                    .values()
                    .iter()
                    .zip(grid.nodes())
                    .map(|(&b, x)| a * b * (1.0 + 0.3 * (c1 * (2.0 * PI * x / l).sin() + c2 * (3.0 * PI * x / l).sin()) / 2.0))
                    .collect();
                GridFunction::new(*grid, vals).expect("grid")
            };
            let u = component(&base.u);
            let v = component(&base.v);
            CoupledState { u, v }
        })
        .collect()
}

fn within_bounds(model: &Model, lambda: f64, mu: f64, s: &CoupledState) -> Option<bool> {
    let b = model.apriori_bounds(lambda, mu).ok()?;
    Some(s.u.max() <= b.u_bound + 1e-6 && s.v.max() <= b.v_bound + 1e-6)
}

/// Result of probing a single parameter pair.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub state: Option<CoupledState>,
    pub residual: Option<f64>,
    pub seed_label: Option<String>,
}

/// Runs Newton from each seed in order and stops at the first coexistence
/// state.
pub fn probe_cell(
    model: &Model,
    lambda: f64,
    mu: f64,
    seeds: &[(String, CoupledState)],
    opts: &CoupledNewtonOptions,
) -> ProbeResult {
    let mut best: Option<f64> = None;
    for (label, seed) in seeds {
        match newton_coexistence(model, lambda, mu, seed, opts) {
            Ok(CoexistenceOutcome::Found { state, residual }) => {
                return ProbeResult { state: Some(state), residual: Some(residual), seed_label: Some(label.clone()) };
            }
            Ok(CoexistenceOutcome::NotFound { residual, .. }) => {
                best = Some(best.map_or(residual, |b: f64| b.min(residual)));
            }
            Err(crate::system::SystemError::NewtonDivergence { residual, .. }) => {
                best = Some(best.map_or(residual, |b: f64| b.min(residual)));
            }
            Err(_) => {}
        }
    }
    ProbeResult { state: None, residual: best.filter(|r| r.is_finite()), seed_label: None }
}

/// States on `branch` interpolated at free-parameter value `p`, one per
/// bracketing segment.
fn branch_seeds(branch: &Branch, p: f64) -> Vec<CoupledState> {
    let pts = &branch.points;
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.param - p) * (b.param - p) > 0.0 || a.param == b.param {
            continue;
        }
        let t = (p - a.param) / (b.param - a.param);
        let mix = |x: &GridFunction, y: &GridFunction| {
            let vals = x.values().iter().zip(y.values()).map(|(&s, &r)| ((1.0 - t) * s + t * r).max(0.0)).collect();
            GridFunction::new(*x.grid(), vals).expect("grid")
        };
        out.push(CoupledState { u: mix(&a.state.u, &b.state.u), v: mix(&a.state.v, &b.state.v) });
    }
    out
}

/// Classifies every cell of `lambdas × mus`.
pub fn region_map(model: &Model, grid: &Grid, lambdas: &[f64], mus: &[f64], opts: &ProbeOptions) -> Result<RegionMap, CurveError> {
    let mu_curve = curve_table(model, grid, CurveKind::MuLambda, lambdas)?;
    let lambda_curve = curve_table(model, grid, CurveKind::LambdaMu, mus)?;
    let lambda1 = trivial_thresholds(model, grid).map_err(CurveError::from)?.1;
    let (lmin, lmax) = (lambdas[0], lambdas[lambdas.len() - 1]);
    let (mmin, mmax) = (mus[0], mus[mus.len() - 1]);

    let branches = |side: Side, fixed: &[f64], window: (f64, f64)| -> Vec<Option<Branch>> {
        fixed
            .par_iter()
            .map(|&f| {
                if !(opts.enabled && opts.use_branches) {
                    return None;
                }
                let bp = bifurcation_point(model, grid, side, f).ok()?;
                // the start may lie outside the map when the curve leaves it
                let start = bp.free_value();
                let window = (window.0.min(start - 1.0), window.1.max(start + 1.0));
                let copts = ContinuationOptions { window, ..ContinuationOptions::default() };
                continue_branch(model, &bp, &copts).ok()
            })
            .collect()
    };
    let span_l = (lmax - lmin).max(1.0);
    let span_m = (mmax - mmin).max(1.0);
    // rows: μ fixed, λ free from λ_μ; columns: λ fixed, μ free from μ_λ
    let rows = branches(Side::V, mus, (lmin - 0.1 * span_l, lmax + 0.1 * span_l));
    let cols = branches(Side::U, lambdas, (mmin - 0.1 * span_m, mmax + 0.1 * span_m));

    let cells: Vec<Cell> = mus
        .par_iter()
        .enumerate()
        .map(|(j, &mu)| {
            let mut row = Vec::with_capacity(lambdas.len());
            let mut neighbor: Option<CoupledState> = None;
            for (i, &lambda) in lambdas.iter().enumerate() {
                let proven_empty = model.nonexistence(lambda, mu, lambda1) == Ok(Nonexistence::ProvenEmpty);
                let pred = predicted(model, lambda, mu, mu_curve.points[i].value, lambda_curve.points[j].value, lambda1);
                let mut cell = Cell {
                    lambda,
                    mu,
                    verdict: if proven_empty {
                        CellVerdict::ProvenEmpty
                    } else if pred {
                        CellVerdict::Predicted
                    } else {
                        CellVerdict::Unknown
                    },
                    proven_empty,
                    predicted: pred,
                    found: false,
                    probe_residual: None,
                    seed_label: None,
                    sup_u: None,
                    sup_v: None,
                    within_bounds: None,
                };
                if opts.enabled {
                    let mut seeds: Vec<(String, CoupledState)> = Vec::new();
                    if let Some(b) = &rows[j] {
                        seeds.extend(branch_seeds(b, lambda).into_iter().map(|s| ("row-branch".to_string(), s)));
                    }
                    if let Some(b) = &cols[i] {
                        seeds.extend(branch_seeds(b, mu).into_iter().map(|s| ("column-branch".to_string(), s)));
                    }
                    if let Some(s) = &neighbor {
                        seeds.push(("neighbor".into(), s.clone()));
                    }
                    seeds.push(("bump".into(), bump(model, grid, lambda, mu)));
                    let rng_seed = opts.seed ^ ((j as u64) << 32 | i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    seeds.extend(
                        random_seeds(model, grid, lambda, mu, opts.random_seeds, rng_seed)
                            .into_iter()
                            .map(|s| ("random".to_string(), s)),
                    );
                    let res = probe_cell(model, lambda, mu, &seeds, &opts.newton);
                    cell.probe_residual = res.residual;
                    cell.seed_label = res.seed_label;
                    if let Some(state) = res.state {
                        cell.found = true;
                        cell.sup_u = Some(state.u.sup_norm());
                        cell.sup_v = Some(state.v.sup_norm());
                        cell.within_bounds = within_bounds(model, lambda, mu, &state);
                        if !proven_empty {
                            cell.verdict = CellVerdict::Confirmed;
                        }
                        neighbor = Some(state);
                    } else if pred && !proven_empty {
                        cell.verdict = CellVerdict::PredictedNotFound;
                    }
                }
                row.push(cell);
            }
            row
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    Ok(RegionMap { lambdas: lambdas.to_vec(), mus: mus.to_vec(), cells, mu_curve, lambda_curve, lambda1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sample_ap1;

    #[test]
    fn small_predator_prey_map() {
        let g = Grid::unit(39).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let l1 = trivial_thresholds(&m, &g).unwrap().1;
        let lambdas = [-1.0, 10.0, 35.0];
        let mus = [l1 - 1.0, l1 + 4.0];
        let map = region_map(&m, &g, &lambdas, &mus, &ProbeOptions::default()).unwrap();
        assert_eq!(map.cell(0, 0).verdict, CellVerdict::ProvenEmpty);
        assert_eq!(map.cell(0, 1).verdict, CellVerdict::ProvenEmpty);
        assert_eq!(map.cell(2, 1).verdict, CellVerdict::Confirmed);
        assert_eq!(map.soundness_violations(), 0);
        for c in map.cells.iter().filter(|c| c.verdict == CellVerdict::Confirmed) {
            assert_eq!(c.within_bounds, Some(true));
        }
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let g = Grid::unit(19).unwrap();
        let m = sample_ap1(1.0, 1.0);
        let a = random_seeds(&m, &g, 20.0, 15.0, 3, 7);
        let b = random_seeds(&m, &g, 20.0, 15.0, 3, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.u.min() >= 0.0 && s.v.min() >= 0.0));
    }
}
