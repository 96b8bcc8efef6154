//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [model]
//! kind = "ap2"          # "ap1" or "ap2"
//! chi = 0.5
//! b = 1.0
//! c = 1.0
//! sensitivity = "const" # ap2 only; ap1 takes `functions = "ap1-sample"`
//!
//! [grid]
//! n = 199
//! length = 1.0
//!
//! [branch]
//! side = "v"
//! fixed = { shift = 2.0 }   # λ₁ + 2; or `fixed = { value = 11.87 }`
//! ```
//!
//! Unknown keys are rejected everywhere.

use coexist_core::discretization::Grid;
use coexist_core::models::{ap1_functions_by_name, model_ap1, model_ap2, sensitivity_by_name, Model};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub eig: Option<EigConfig>,
    pub semitrivial: Option<SemitrivialConfig>,
    pub curves: Option<CurvesConfig>,
    pub branch: Option<BranchConfig>,
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModelConfig {
    #[serde(rename = "ap1")]
    Ap1 {
        b: f64,
        c: f64,
        #[serde(default = "default_functions")]
        functions: String,
    },
    #[serde(rename = "ap2")]
    Ap2 {
        chi: f64,
        b: f64,
        c: f64,
        #[serde(default = "default_sensitivity")]
        sensitivity: String,
    },
}

fn default_functions() -> String {
    "ap1-sample".into()
}

fn default_sensitivity() -> String {
    "const".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_n() -> usize {
    199
}

fn default_length() -> f64 {
    1.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: default_n(), length: default_length() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_eigen_tol")]
    pub eigen_tol: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_matching_tol")]
    pub matching_tol: f64,
}

fn default_eigen_tol() -> f64 {
    1e-10
}

fn default_newton_tol() -> f64 {
    1e-8
}

fn default_newton_max_iter() -> usize {
    60
}

fn default_matching_tol() -> f64 {
    1e-2
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eigen_tol: default_eigen_tol(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            matching_tol: default_matching_tol(),
        }
    }
}

/// A parameter value given directly or as an offset from the principal
/// Dirichlet eigenvalue `λ₁` of the grid.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Anchored {
    Value(f64),
    Shift(f64),
}

impl Anchored {
    pub fn resolve(self, lambda1: f64) -> f64 {
        match self {
            Anchored::Value(v) => v,
            Anchored::Shift(s) => lambda1 + s,
        }
    }
}

/// `count` equispaced values from `start` to `stop`, optionally shifted by
/// `λ₁`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub relative_to_lambda1: bool,
}

impl Range {
    pub fn values(&self, lambda1: f64) -> Vec<f64> {
        let shift = if self.relative_to_lambda1 { lambda1 } else { 0.0 };
        if self.count == 1 {
            return vec![self.start + shift];
        }
        (0..self.count)
            .map(|k| shift + self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<(), String> {
        if self.count == 0 {
            return Err(format!("{name}: count must be positive"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || (self.count > 1 && !(self.stop > self.start)) {
            return Err(format!("{name}: need finite start < stop"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigProblem {
    /// `σ₁[−dΔ + B; C]` with constant coefficients.
    Constant,
    /// Invasion operator at `(θ_λ, 0)`, drift and gauge forms.
    MuLambda,
    /// Invasion operator at `(0, θ_μ)`, drift and gauge forms.
    LambdaMu,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigConfig {
    #[serde(default = "default_eig_problem")]
    pub problem: EigProblem,
    #[serde(default = "one")]
    pub diffusion: f64,
    #[serde(default)]
    pub potential: f64,
    #[serde(default = "one")]
    pub weight: f64,
    pub param: Option<Anchored>,
}

fn default_eig_problem() -> EigProblem {
    EigProblem::Constant
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `−dΔw = γw − w²`.
    Logistic,
    /// The model's `u`-equation with `v ≡ 0`, `γ = λ`.
    U,
    /// The model's `v`-equation with `u ≡ 0`, `γ = μ`.
    V,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemitrivialConfig {
    pub equation: Equation,
    #[serde(default = "one")]
    pub diffusion: f64,
    pub gamma: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSelection {
    MuLambda,
    LambdaMu,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    #[serde(default = "default_curves")]
    pub curve: CurveSelection,
    /// Values of `λ` for `μ_λ`.
    pub lambda: Option<Range>,
    /// Values of `μ` for `λ_μ`.
    pub mu: Option<Range>,
}

fn default_curves() -> CurveSelection {
    CurveSelection::Both
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideConfig {
    U,
    V,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub side: SideConfig,
    /// `λ` on side `u`, `μ` on side `v`.
    pub fixed: Anchored,
    /// Half-width of the free-parameter window around the start.
    #[serde(default = "default_half_width")]
    pub window: f64,
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default = "default_ds_max")]
    pub ds_max: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_norm_cap")]
    pub norm_cap: f64,
}

fn default_half_width() -> f64 {
    30.0
}

fn default_ds() -> f64 {
    0.05
}

fn default_ds_max() -> f64 {
    0.5
}

fn default_max_steps() -> usize {
    4000
}

fn default_norm_cap() -> f64 {
    1e3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lambda: Range,
    pub mu: Range,
    #[serde(default = "yes")]
    pub probe: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_random_seeds")]
    pub random_seeds: usize,
}

fn yes() -> bool {
    true
}

fn default_random_seeds() -> usize {
    4
}

/// Box `[0, u_max] × [0, v_max]` on which the structural hypotheses are
/// sampled.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_box")]
    pub u_max: f64,
    #[serde(default = "default_box")]
    pub v_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_box() -> f64 {
    50.0
}

fn default_samples() -> usize {
    41
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { u_max: default_box(), v_max: default_box(), samples: default_samples() }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(out) = &overrides.out {
            cfg.output.dir = out.clone();
        }
        if let Some(n) = overrides.n {
            cfg.grid.n = n;
        }
        if let (Some(seed), Some(region)) = (overrides.seed, cfg.region.as_mut()) {
            region.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid.n < 3 {
            return Err("grid.n must be at least 3".into());
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return Err("grid.length must be positive".into());
        }
        let s = &self.solver;
        for (name, v) in [("solver.eigen_tol", s.eigen_tol), ("solver.newton_tol", s.newton_tol), ("solver.matching_tol", s.matching_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if s.newton_max_iter == 0 {
            return Err("solver.newton_max_iter must be positive".into());
        }
        if !(self.check.u_max >= 0.0 && self.check.v_max >= 0.0) || self.check.samples < 2 {
            return Err("check: u_max, v_max must be nonnegative and samples at least 2".into());
        }
        if let Some(m) = &self.model {
            m.build()?;
        }
        if let Some(e) = &self.eig {
            if e.problem != EigProblem::Constant && e.param.is_none() {
                return Err("eig.param is required for invasion problems".into());
            }
            if !(e.diffusion > 0.0 && e.weight > 0.0) {
                return Err("eig.diffusion and eig.weight must be positive".into());
            }
        }
        if let Some(st) = &self.semitrivial {
            st.gamma.validate("semitrivial.gamma")?;
            if !(st.diffusion > 0.0) {
                return Err("semitrivial.diffusion must be positive".into());
            }
        }
        if let Some(c) = &self.curves {
            if let Some(r) = &c.lambda {
                r.validate("curves.lambda")?;
            }
            if let Some(r) = &c.mu {
                r.validate("curves.mu")?;
            }
            let need_l = matches!(c.curve, CurveSelection::MuLambda | CurveSelection::Both);
            let need_m = matches!(c.curve, CurveSelection::LambdaMu | CurveSelection::Both);
            if (need_l && c.lambda.is_none()) || (need_m && c.mu.is_none()) {
                return Err("curves: a parameter range is missing for the selected curve".into());
            }
        }
        if let Some(b) = &self.branch {
            if !(b.window > 0.0 && b.ds > 0.0 && b.ds_max >= b.ds && b.norm_cap > 0.0) || b.max_steps == 0 {
                return Err("branch: window, ds, ds_max >= ds, norm_cap and max_steps must be positive".into());
            }
        }
        if let Some(r) = &self.region {
            r.lambda.validate("region.lambda")?;
            r.mu.validate("region.mu")?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.n, self.grid.length).expect("validated")
    }

    pub fn model(&self) -> Result<Model, String> {
        self.model.as_ref().ok_or_else(|| "a [model] section is required for this command".to_string())?.build()
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, String> {
        section.as_ref().ok_or_else(|| format!("a [{name}] section is required for this command"))
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model, String> {
        let finite = |name: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(format!("model.{name} must be finite")) };
        match self {
            ModelConfig::Ap1 { b, c, functions } => {
                finite("b", *b)?;
                finite("c", *c)?;
                let (a, g, h, floors) = ap1_functions_by_name(functions).map_err(|e| e.to_string())?;
                model_ap1(*b, *c, a, g, h, floors).map_err(|e| e.to_string())
            }
            ModelConfig::Ap2 { chi, b, c, sensitivity } => {
                finite("chi", *chi)?;
                finite("b", *b)?;
                finite("c", *c)?;
                let f = sensitivity_by_name(sensitivity).map_err(|e| e.to_string())?;
                Ok(model_ap2(*chi, *b, *c, f))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_applies_defaults() {
        let cfg = RunConfig::from_toml("[model]\nkind = \"ap2\"\nchi = 0.5\nb = 1.0\nc = 1.0\n").unwrap();
        assert_eq!(cfg.grid.n, 199);
        assert!(cfg.validate().is_ok());
        assert!(cfg.model().is_ok());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml("[grid]\nn = 9\nsize = 3\n").is_err());
        assert!(RunConfig::from_toml("[model]\nkind = \"ap1\"\nb = 1.0\nc = 1.0\nchi = 2.0\n").is_err());
        assert!(RunConfig::from_toml("extra = 1\n").is_err());
    }

    #[test]
    fn anchored_values_and_ranges() {
        let cfg = RunConfig::from_toml(
            "[branch]\nside = \"v\"\nfixed = { shift = 2.0 }\n[region]\nlambda = { start = 0.0, stop = 1.0, count = 3 }\nmu = { start = -1.0, stop = 1.0, count = 2, relative_to_lambda1 = true }\n",
        )
        .unwrap();
        assert_eq!(cfg.branch.unwrap().fixed.resolve(10.0), 12.0);
        let r = cfg.region.unwrap();
        assert_eq!(r.lambda.values(10.0), vec![0.0, 0.5, 1.0]);
        assert_eq!(r.mu.values(10.0), vec![9.0, 11.0]);
    }

    #[test]
    fn validation_catches_bad_values() {
        let cfg = RunConfig::from_toml("[grid]\nn = 2\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("[model]\nkind = \"ap2\"\nchi = 0.5\nb = 1.0\nc = 1.0\nsensitivity = \"nope\"\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("[region]\nlambda = { start = 1.0, stop = 0.0, count = 3 }\nmu = { start = 0.0, stop = 1.0, count = 3 }\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
