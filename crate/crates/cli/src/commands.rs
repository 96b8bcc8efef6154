use crate::config::{CurveSelection, EigProblem, Equation, RunConfig, SideConfig};
use crate::output::{float, opt_float, vocabulary, write_atomic, write_csv};
use coexist_core::curves::{curve_table, invasion_forms, region_map, CurveKind, CurveTable, ProbeOptions};
use coexist_core::discretization::{assemble_weight, laplacian, Grid};
use coexist_core::eigen::{principal_eigenpair, EigenOptions};
use coexist_core::models::Hypothesis;
use coexist_core::semitrivial::{branch_sweep, NewtonOptions, ScalarProblem};
use coexist_core::system::{
    bifurcation_point, continue_branch, ContinuationOptions, CoupledNewtonOptions, Side, Termination, Verdict,
};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn solver<E: fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

type CmdResult = Result<(), CliError>;

fn eigen_options(cfg: &RunConfig) -> EigenOptions {
    EigenOptions { tol: cfg.solver.eigen_tol, ..EigenOptions::default() }
}

/// Principal Dirichlet eigenvalue of `−Δ` on the configured grid, the anchor
/// of shifted parameters.
fn lambda1(cfg: &RunConfig, grid: &Grid) -> Result<f64, CliError> {
    let w = assemble_weight(grid, &vec![1.0; grid.n_interior()]).map_err(solver)?;
    Ok(principal_eigenpair(&laplacian(grid), &w, &eigen_options(cfg)).map_err(solver)?.sigma1)
}

pub fn eig(cfg: &RunConfig) -> CmdResult {
    let e = cfg.section(&cfg.eig, "eig").map_err(CliError::Config)?;
    let grid = cfg.grid();
    let n = grid.n_interior();
    let opts = eigen_options(cfg);
    let row = |form: &str, r: &coexist_core::eigen::EigenResult, gap: Option<f64>| {
        vec![form.to_string(), float(r.sigma1), float(r.residual), r.iterations.to_string(), n.to_string(), opt_float(gap)]
    };
    let rows = match e.problem {
        EigProblem::Constant => {
            let op = laplacian(&grid).scaled(e.diffusion).add_diagonal(&vec![e.potential; n]).map_err(solver)?;
            let w = assemble_weight(&grid, &vec![e.weight; n]).map_err(solver)?;
            let r = principal_eigenpair(&op, &w, &opts).map_err(solver)?;
            vec![row("drift", &r, None)]
        }
        EigProblem::MuLambda | EigProblem::LambdaMu => {
            let model = cfg.model().map_err(CliError::Config)?;
            let kind = if e.problem == EigProblem::MuLambda { CurveKind::MuLambda } else { CurveKind::LambdaMu };
            let param = e.param.expect("validated").resolve(lambda1(cfg, &grid)?);
            let (drift, gauge) = invasion_forms(&model, &grid, kind, param, &opts)
                .map_err(solver)?
                .ok_or_else(|| CliError::Solver(format!("no semitrivial state at {param}")))?;
            let gap = Some((drift.sigma1 - gauge.sigma1).abs());
            vec![row("drift", &drift, gap), row("gauge", &gauge, gap)]
        }
    };
    write_csv(&cfg.output.dir, "eig.csv", &rows)?;
    Ok(())
}

pub fn semitrivial(cfg: &RunConfig) -> CmdResult {
    let s = cfg.section(&cfg.semitrivial, "semitrivial").map_err(CliError::Config)?;
    let grid = cfg.grid();
    let gammas = s.gamma.values(lambda1(cfg, &grid)?);
    let problem = match s.equation {
        Equation::Logistic => ScalarProblem::logistic(&grid, s.diffusion, gammas[0]),
        Equation::U => cfg.model().map_err(CliError::Config)?.semitrivial_u(&grid, gammas[0]),
        Equation::V => cfg.model().map_err(CliError::Config)?.semitrivial_v(&grid, gammas[0]),
    };
    let opts = NewtonOptions::default();
    let branch = branch_sweep(&problem, &gammas, &opts).map_err(solver)?;
    let rows: Vec<Vec<String>> = branch
        .gammas
        .iter()
        .zip(&branch.solutions)
        .zip(&branch.nondegeneracy_margins)
        .map(|((g, w), m)| {
            vec![float(*g), w.is_some().to_string(), opt_float(w.as_ref().map(|w| w.sup_norm())), opt_float(*m)]
        })
        .collect();
    write_csv(&cfg.output.dir, "branch_semitrivial.csv", &rows)?;
    Ok(())
}

fn curve_rows(table: &CurveTable) -> Vec<Vec<String>> {
    table
        .points
        .iter()
        .map(|p| {
            vec![
                table.kind.name().to_string(),
                float(p.param),
                float(p.value),
                if p.extended { "extension" } else { "drift" }.to_string(),
                opt_float(p.gauge_value),
                opt_float(p.gap),
            ]
        })
        .collect()
}

pub fn curves(cfg: &RunConfig) -> CmdResult {
    let c = cfg.section(&cfg.curves, "curves").map_err(CliError::Config)?;
    let model = cfg.model().map_err(CliError::Config)?;
    let grid = cfg.grid();
    let l1 = lambda1(cfg, &grid)?;
    let mut rows = Vec::new();
    if matches!(c.curve, CurveSelection::MuLambda | CurveSelection::Both) {
        let params = c.lambda.expect("validated").values(l1);
        rows.extend(curve_rows(&curve_table(&model, &grid, CurveKind::MuLambda, &params).map_err(solver)?));
    }
    if matches!(c.curve, CurveSelection::LambdaMu | CurveSelection::Both) {
        let params = c.mu.expect("validated").values(l1);
        rows.extend(curve_rows(&curve_table(&model, &grid, CurveKind::LambdaMu, &params).map_err(solver)?));
    }
    write_csv(&cfg.output.dir, "curves.csv", &rows)?;
    Ok(())
}

/// Contents of `verdict.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub model: String,
    pub side: String,
    pub start_lambda: f64,
    pub start_mu: f64,
    #[serde(flatten)]
    pub termination: Termination,
}

pub fn branch(cfg: &RunConfig) -> CmdResult {
    let b = cfg.section(&cfg.branch, "branch").map_err(CliError::Config)?;
    let model = cfg.model().map_err(CliError::Config)?;
    let grid = cfg.grid();
    let fixed = b.fixed.resolve(lambda1(cfg, &grid)?);
    let side = match b.side {
        SideConfig::U => Side::U,
        SideConfig::V => Side::V,
    };
    let bp = bifurcation_point(&model, &grid, side, fixed).map_err(solver)?;
    let start = bp.free_value();
    let opts = ContinuationOptions {
        ds: b.ds,
        ds_max: b.ds_max,
        max_steps: b.max_steps,
        window: (start - b.window, start + b.window),
        norm_cap: b.norm_cap,
        matching_tol: cfg.solver.matching_tol,
        newton_tol: cfg.solver.newton_tol,
        ..ContinuationOptions::default()
    };
    let branch = continue_branch(&model, &bp, &opts).map_err(solver)?;
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            vec![
                k.to_string(),
                float(p.param),
                float(p.state.u.sup_norm()),
                float(p.state.v.sup_norm()),
                float(p.state.u.min()),
                float(p.state.v.min()),
                float(p.arclength),
            ]
        })
        .collect();
    write_csv(&cfg.output.dir, "branch.csv", &rows)?;
    let verdict = VerdictFile {
        model: model.label.clone(),
        side: match side {
            Side::U => "u",
            Side::V => "v",
        }
        .into(),
        start_lambda: bp.lambda,
        start_mu: bp.mu,
        termination: branch.termination.clone(),
    };
    let value = serde_json::to_value(&verdict).expect("serializable");
    debug_assert!(crate::output::schema().files["verdict.json"].required.iter().all(|k| value.get(k).is_some()));
    let mut json = serde_json::to_string_pretty(&value).expect("serializable");
    json.push('\n');
    write_atomic(&cfg.output.dir, "verdict.json", json.as_bytes())?;
    if branch.termination.verdict == Verdict::StepFailure {
        return Err(CliError::Solver(format!("continuation stopped: {}", branch.termination.detail)));
    }
    Ok(())
}

pub fn region(cfg: &RunConfig) -> CmdResult {
    let r = cfg.section(&cfg.region, "region").map_err(CliError::Config)?;
    let model = cfg.model().map_err(CliError::Config)?;
    let grid = cfg.grid();
    let l1 = lambda1(cfg, &grid)?;
    let lambdas = r.lambda.values(l1);
    let mus = r.mu.values(l1);
    let opts = ProbeOptions {
        enabled: r.probe,
        seed: r.seed,
        random_seeds: r.random_seeds,
        newton: CoupledNewtonOptions { tol: cfg.solver.newton_tol, max_iter: cfg.solver.newton_max_iter, ..CoupledNewtonOptions::default() },
        ..ProbeOptions::default()
    };
    let map = region_map(&model, &grid, &lambdas, &mus, &opts).map_err(solver)?;
    let rows: Vec<Vec<String>> = map
        .cells
        .iter()
        .map(|c| {
            debug_assert!(vocabulary("region_verdict").iter().any(|v| v == c.verdict.name()));
            vec![float(c.lambda), float(c.mu), c.verdict.name().to_string(), opt_float(c.probe_residual)]
        })
        .collect();
    write_csv(&cfg.output.dir, "region.csv", &rows)?;
    let mut curves = curve_rows(&map.mu_curve);
    curves.extend(curve_rows(&map.lambda_curve));
    write_csv(&cfg.output.dir, "curves.csv", &curves)?;
    Ok(())
}

/// Samples the structural hypotheses; fails when any is violated.
pub fn check(cfg: &RunConfig) -> CmdResult {
    let model = cfg.model().map_err(CliError::Config)?;
    let c = &cfg.check;
    let violations = model.hypothesis_check(c.u_max, c.v_max, cfg.grid.length, c.samples);
    let rows: Vec<Vec<String>> = Hypothesis::ALL
        .iter()
        .map(|h| match violations.iter().find(|v| v.hypothesis == *h) {
            Some(v) => vec![format!("{h:?}"), "false".into(), float(v.at.0), float(v.at.1), float(v.excess)],
            None => vec![format!("{h:?}"), "true".into(), String::new(), String::new(), String::new()],
        })
        .collect();
    write_csv(&cfg.output.dir, "check.csv", &rows)?;
    if violations.is_empty() {
        Ok(())
    } else {
        let names: Vec<String> = violations.iter().map(|v| format!("{:?}", v.hypothesis)).collect();
        Err(CliError::Solver(format!("hypotheses violated: {}", names.join(", "))))
    }
}
